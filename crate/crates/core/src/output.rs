// SPDX-License-Identifier: Apache-2.0

//! CSV and JSON artifacts for a run, plus the manifest that inventories
//! them. Numbers are written in scientific notation with 12 significant
//! digits so reruns are byte-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::analysis::{normalized_ipr, survival_probability, IprCurve, SweepResult};
use crate::direct::Trajectory;
use crate::error::{Error, Result};
use crate::laplace::{PoleDecomposition, PoleSet};
use crate::localization::{ipr, EigenSystem, LevelIpr};

pub const SCHEMA_VERSION: &str = "1.0";
pub const MANIFEST_NAME: &str = "manifest.json";

/// 12 significant digits, scientific.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn flag(b: bool) -> String {
    (b as u8).to_string()
}

/// A CSV table: `#` comment lines, one header row, data rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            comments: Vec::new(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(mut self, line: impl Into<String>) -> Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            s.push_str("# ");
            s.push_str(c);
            s.push('\n');
        }
        s.push_str(&self.header.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn poles_table(set: &PoleSet) -> Table {
    let mut t = Table::new(["index", "re", "im", "steady", "pseudomode", "aux_weight"])
        .comment("poles sorted by descending Re, then descending Im");
    for (i, p) in set.poles.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            num(p.z.re),
            num(p.z.im),
            flag(p.steady),
            flag(p.pseudomode),
            num(p.aux_weight),
        ]);
    }
    t
}

/// Rows are levels `j` (with `E_j`), columns are poles.
pub fn overlap_table(es: &EigenSystem, overlaps: &DMatrix<f64>) -> Table {
    let mut header = vec!["j".to_string(), "energy".to_string()];
    header.extend((0..overlaps.ncols()).map(|i| format!("O_{i}")));
    let mut t = Table::new(header).comment("O[j][i] = |<E_j|V_i>|^2 / ||V_i||^2");
    for j in 0..overlaps.nrows() {
        let mut row = vec![j.to_string(), num(es.eigenvalues[j])];
        row.extend(overlaps.row(j).iter().map(|&x| num(x)));
        t.push(row);
    }
    t
}

/// Long format: one row per (site, pole).
pub fn residue_table(d: &PoleDecomposition, label: &str) -> Table {
    let mut t = Table::new(["site", "pole", "re", "im"]).comment(format!(
        "residues c[n][i] for initial state {label}; sites are 1-based"
    ));
    for n in 0..d.residues.nrows() {
        for i in 0..d.residues.ncols() {
            let c = d.residues[(n, i)];
            t.push(vec![
                (n + 1).to_string(),
                i.to_string(),
                num(c.re),
                num(c.im),
            ]);
        }
    }
    t
}

pub fn spectrum_table(levels: &[LevelIpr]) -> Table {
    let mut t = Table::new(["j", "energy", "ipr"]).comment("levels in descending energy order");
    for l in levels {
        t.push(vec![l.j.to_string(), num(l.energy), num(l.ipr)]);
    }
    t
}

/// `t`, per-site `Re α_n`, `Im α_n`, then survival, IPR and normalized IPR.
pub fn trajectory_table(traj: &Trajectory, label: &str) -> Result<Table> {
    let n = traj.sites();
    let mut header = vec!["t".to_string()];
    for s in 1..=n {
        header.push(format!("re_{s}"));
        header.push(format!("im_{s}"));
    }
    header.extend(["survival", "ipr", "ipr_normalized"].map(String::from));
    let mut t = Table::new(header)
        .comment(format!("method: {}", traj.method.tag()))
        .comment(format!("initial state: {label}"));
    let survival = survival_probability(traj);
    let normalized = normalized_ipr(traj);
    for (k, (time, a)) in traj.times.iter().zip(&traj.amplitudes).enumerate() {
        let mut row = Vec::with_capacity(2 * n + 4);
        row.push(num(*time));
        for c in a.iter() {
            row.push(num(c.re));
            row.push(num(c.im));
        }
        row.push(num(survival[k]));
        row.push(num(ipr(a.as_slice())?));
        row.push(num(normalized[k]));
        t.push(row);
    }
    Ok(t)
}

/// Wide format on a shared time grid: one IPR column per curve.
pub fn ipr_curves_table(curves: &[IprCurve]) -> Result<Table> {
    let Some(first) = curves.first() else {
        return Err(Error::domain("no IPR curves to tabulate"));
    };
    if curves.iter().any(|c| c.times != first.times) {
        return Err(Error::domain("IPR curves are on different time grids"));
    }
    let mut header = vec!["t".to_string()];
    header.extend(curves.iter().map(|c| format!("ipr_{}", c.label.name)));
    let mut t = Table::new(header).comment("raw IPR of the decaying amplitudes");
    for (k, time) in first.times.iter().enumerate() {
        let mut row = vec![num(*time)];
        row.extend(curves.iter().map(|c| num(c.values[k])));
        t.push(row);
    }
    Ok(t)
}

/// Long format: one row per (axis value, pole). Failed points are skipped
/// and listed in a comment.
pub fn sweep_table(sweep: &SweepResult) -> Table {
    let axis = sweep.axis.name();
    let mut t = Table::new([axis, "index", "re", "im", "steady", "pseudomode"])
        .comment(format!("pole sweep over {axis}"));
    for p in &sweep.points {
        let value = match sweep.axis {
            crate::analysis::SweepAxis::N(_) => p.spec.n.to_string(),
            crate::analysis::SweepAxis::Delta(_) => num(p.value),
        };
        match &p.outcome {
            Ok(set) => {
                for (i, pole) in set.poles.iter().enumerate() {
                    t.push(vec![
                        value.clone(),
                        i.to_string(),
                        num(pole.z.re),
                        num(pole.z.im),
                        flag(pole.steady),
                        flag(pole.pseudomode),
                    ]);
                }
            }
            Err(msg) => t.comments.push(format!("{axis} = {value} failed: {msg}")),
        }
    }
    t
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    Csv,
    Json,
    Script,
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub file: String,
    pub kind: ArtifactKind,
    pub bytes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

/// Run-level facts echoed into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunInfo {
    pub command: String,
    pub config_source: String,
    pub overrides: Vec<String>,
    pub config: serde_json::Value,
    pub config_text: String,
    pub parallel: bool,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    #[serde(flatten)]
    pub run: RunInfo,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<serde_json::Value>,
    pub notes: Vec<String>,
    pub artifacts: Vec<Artifact>,
    pub timings: Vec<Timing>,
}

/// Writes artifacts into one directory and finishes with the manifest.
#[derive(Debug)]
pub struct RunWriter {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
    timings: Vec<Timing>,
    notes: Vec<String>,
}

impl RunWriter {
    pub fn create(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        // A stale manifest would describe files from another run.
        let stale = dir.join(MANIFEST_NAME);
        if stale.exists() {
            fs::remove_file(stale)?;
        }
        Ok(RunWriter {
            dir,
            artifacts: Vec::new(),
            timings: Vec::new(),
            notes: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    fn put(
        &mut self,
        name: &str,
        body: &[u8],
        kind: ArtifactKind,
        rows: Option<usize>,
    ) -> Result<()> {
        if name.contains('/') || name.contains('\\') || name == MANIFEST_NAME {
            return Err(Error::domain(format!("invalid artifact name '{name}'")));
        }
        if self.artifacts.iter().any(|a| a.file == name) {
            return Err(Error::domain(format!("artifact '{name}' written twice")));
        }
        atomic_write(&self.dir.join(name), body)?;
        self.artifacts.push(Artifact {
            file: name.to_string(),
            kind,
            bytes: body.len() as u64,
            rows,
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<()> {
        self.put(
            name,
            table.render().as_bytes(),
            ArtifactKind::Csv,
            Some(table.rows.len()),
        )
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)
            .map_err(|e| Error::numerical(format!("cannot serialize {name}: {e}")))?;
        body.push('\n');
        self.put(name, body.as_bytes(), ArtifactKind::Json, None)
    }

    pub fn script(&mut self, name: &str, text: &str) -> Result<()> {
        self.put(name, text.as_bytes(), ArtifactKind::Script, None)
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    /// Run `f` and record its wall time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push(Timing {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    /// Writes the manifest last and returns its path.
    pub fn finish(
        self,
        run: RunInfo,
        status: &str,
        oracle: Option<serde_json::Value>,
    ) -> Result<PathBuf> {
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            run,
            status: status.to_string(),
            oracle,
            notes: self.notes,
            artifacts: self.artifacts,
            timings: self.timings,
        };
        let mut body = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::numerical(format!("cannot serialize manifest: {e}")))?;
        body.push('\n');
        let path = self.dir.join(MANIFEST_NAME);
        atomic_write(&path, body.as_bytes())?;
        Ok(path)
    }
}

fn atomic_write(path: &Path, body: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(body)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Minimal matplotlib script for the CSVs in a run directory.
pub fn plot_stub(artifacts: &[Artifact]) -> String {
    let csvs: Vec<String> = artifacts
        .iter()
        .filter(|a| a.kind == ArtifactKind::Csv)
        .map(|a| format!("    \"{}\",", a.file))
        .collect();
    format!(
        "# Quick-look plots; edit freely.\n\
         import csv\n\
         import sys\n\
         import matplotlib.pyplot as plt\n\n\
         FILES = [\n{}\n]\n\n\
         def load(path):\n\
         \x20   with open(path) as f:\n\
         \x20       rows = [r for r in csv.reader(f) if r and not r[0].startswith('#')]\n\
         \x20   return rows[0], [[float(x) for x in r] for r in rows[1:]]\n\n\
         for path in FILES:\n\
         \x20   header, data = load(path)\n\
         \x20   if not data:\n\
         \x20       continue\n\
         \x20   if path.startswith('poles'):\n\
         \x20       plt.figure()\n\
         \x20       plt.scatter([r[1] for r in data], [r[2] for r in data])\n\
         \x20       plt.xlabel('Re z'); plt.ylabel('Im z'); plt.title(path)\n\
         \x20   elif header[0] == 't' and any(h.startswith('ipr') for h in header):\n\
         \x20       plt.figure()\n\
         \x20       for c, h in enumerate(header):\n\
         \x20           if h.startswith('ipr'):\n\
         \x20               plt.plot([r[0] for r in data], [r[c] for r in data], label=h)\n\
         \x20       plt.xlabel('t'); plt.legend(); plt.title(path)\n\n\
         if '--save' in sys.argv:\n\
         \x20   for k in plt.get_fignums():\n\
         \x20       plt.figure(k).savefig(f'plot_{{k}}.png', dpi=150)\n\
         else:\n\
         \x20   plt.show()\n",
        csvs.join("\n")
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplace::{poles_for, SpectralDensityParams};
    use crate::lattice::{build_hamiltonian, ModelSpec};

    #[test]
    fn number_format_has_twelve_significant_digits() {
        assert_eq!(num(1.0), "1.00000000000e0");
        assert_eq!(num(-0.0926696), "-9.26696000000e-2");
        assert_eq!(num(std::f64::consts::PI), "3.14159265359e0");
        assert_eq!(num(6.02214076e23), "6.02214076000e23");
    }

    #[test]
    fn table_render() {
        let mut t = Table::new(["a", "b"]).comment("hello");
        t.push(vec!["1".into(), "2".into()]);
        assert_eq!(t.render(), "# hello\na,b\n1,2\n");
    }

    #[test]
    fn poles_table_shape() {
        let h = build_hamiltonian(&ModelSpec::mosaic(2, 12, 2.0, 0.0)).unwrap();
        let set = poles_for(&h, &SpectralDensityParams::new(0.1, 1.0).unwrap()).unwrap();
        let t = poles_table(&set);
        assert_eq!(t.rows.len(), 13);
        assert_eq!(t.rows.iter().filter(|r| r[4] == "1").count(), 1);
        assert!(t.rows.iter().any(|r| r[3] == "1"));
    }

    #[test]
    fn writer_inventory_and_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("run");
        let mut w = RunWriter::create(&dir).unwrap();
        let mut t = Table::new(["x"]);
        t.push(vec![num(0.5)]);
        w.csv("a.csv", &t).unwrap();
        w.json("b.json", &serde_json::json!({"k": 1})).unwrap();
        assert!(w.csv("a.csv", &t).is_err());
        assert!(w.csv("../escape.csv", &t).is_err());
        assert!(w.csv(MANIFEST_NAME, &t).is_err());
        let run = RunInfo {
            command: "test".into(),
            config_source: "inline".into(),
            overrides: vec![],
            config: serde_json::Value::Null,
            config_text: String::new(),
            parallel: false,
            threads: None,
        };
        let path = w.finish(run, "ok", None).unwrap();
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(m["schema_version"], SCHEMA_VERSION);
        let files: Vec<&str> = m["artifacts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| a["file"].as_str().unwrap())
            .collect();
        assert_eq!(files, ["a.csv", "b.json"]);
        let mut on_disk: Vec<String> = fs::read_dir(&dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        on_disk.sort();
        assert_eq!(on_disk, ["a.csv", "b.json", MANIFEST_NAME]);
    }
}
