// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mosaic-qme"))
        .args(args)
        .env_remove("MOSAIC_QME_OUT")
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn inventory_matches_disk(dir: &Path) {
    let m = manifest(dir);
    let listed: BTreeSet<String> = m["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["file"].as_str().unwrap().to_string())
        .collect();
    let mut on_disk: BTreeSet<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(on_disk.remove("manifest.json"));
    assert_eq!(listed, on_disk);
    for a in m["artifacts"].as_array().unwrap() {
        let len = fs::metadata(dir.join(a["file"].as_str().unwrap()))
            .unwrap()
            .len();
        assert_eq!(a["bytes"].as_u64().unwrap(), len);
    }
}

#[test]
fn poles_run_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("k2");
    let o = cli(&[
        "poles",
        "--config",
        "table1_k2",
        "--out",
        out.to_str().unwrap(),
        "--oracle-check",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    inventory_matches_disk(&out);
    let m = manifest(&out);
    assert_eq!(m["schema_version"], "1.0");
    assert_eq!(m["command"], "poles");
    assert_eq!(m["config"]["model"]["kappa"], 2);
    assert_eq!(m["oracle"]["passed"], true);
    let poles = fs::read_to_string(out.join("poles.csv")).unwrap();
    let rows: Vec<&str> = poles.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "index,re,im,steady,pseudomode,aux_weight");
    assert_eq!(rows.len(), 14);
    // 12 significant digits in scientific notation
    let re = rows[1].split(',').nth(1).unwrap();
    let mantissa = re.split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(
        mantissa.chars().filter(|c| c.is_ascii_digit()).count(),
        12,
        "{re}"
    );
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |d: &str| {
        vec![
            "evolve".to_string(),
            "--config".into(),
            "table1_k3".into(),
            "--set".into(),
            "analysis.initial_states=[0, 7]".into(),
            "--set".into(),
            "dynamics.horizon=5.0".into(),
            "--set".into(),
            "dynamics.step=0.01".into(),
            "--out".into(),
            tmp.path().join(d).to_str().unwrap().to_string(),
        ]
    };
    for d in ["a", "b"] {
        let a: Vec<String> = args(d);
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        assert_eq!(cli(&a).status.code(), Some(0));
    }
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    inventory_matches_disk(&a);
    let files: Vec<String> = manifest(&a)["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["file"].as_str().unwrap().to_string())
        .collect();
    assert!(files.contains(&"traj_E7_volterra.csv".to_string()));
    assert!(files.contains(&"crossings.json".to_string()));
    for f in files {
        assert_eq!(
            fs::read(a.join(&f)).unwrap(),
            fs::read(b.join(&f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    for args in [
        vec!["poles", "--config", "nope", "--out", out],
        vec!["poles", "--set", "model.kapa=2", "--out", out],
        vec!["poles", "--set", "bath.omega_c=0", "--out", out],
        vec!["sweep", "--out", out],
        vec!["poles", "--threads", "0", "--out", out],
    ] {
        let o = cli(&args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn oracle_gate_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("gate");
    let o = cli(&[
        "evolve",
        "--set",
        "analysis.initial_states=[0]",
        "--set",
        "dynamics.horizon=2.0",
        "--set",
        "dynamics.step=0.05",
        "--set",
        "analysis.volterra_tol=1e-12",
        "--oracle-check",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    inventory_matches_disk(&out);
    assert_eq!(manifest(&out)["status"], "oracle-check failed");
}

#[test]
fn spectrum_and_sweep_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let spec_dir = tmp.path().join("spectrum");
    let o = cli(&[
        "spectrum",
        "--config",
        "figA1",
        "--out",
        spec_dir.to_str().unwrap(),
        "--oracle-check",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(spec_dir.join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 611);
    let edges: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(spec_dir.join("mobility_edges.json")).unwrap())
            .unwrap();
    assert_eq!(edges["edges"].as_array().unwrap().len(), 2);

    let sweep_dir = tmp.path().join("sweep");
    let o = cli(&[
        "sweep",
        "--set",
        "sweep.axis=\"n\"",
        "--set",
        "sweep.values=[8, 12, 16, 20]",
        "--set",
        "output.plot_stub=true",
        "--threads",
        "2",
        "--oracle-check",
        "--out",
        sweep_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    inventory_matches_disk(&sweep_dir);
    let csv = fs::read_to_string(sweep_dir.join("sweep.csv")).unwrap();
    assert_eq!(
        csv.lines().filter(|l| !l.starts_with('#')).count(),
        1 + 9 + 13 + 17 + 21
    );
    assert!(sweep_dir.join("plot.py").exists());
}

#[test]
fn gaah_variants_and_env_out() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mosaic-qme"))
        .args(["poles", "--config", "tableA2_gaah"])
        .env("MOSAIC_QME_OUT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    for f in ["poles_a+0.5.csv", "poles_a-0.5.csv", "overlaps_a-0.5.csv"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    inventory_matches_disk(tmp.path());
}
