// SPDX-License-Identifier: Apache-2.0

//! The four run verbs. Each loads a config, computes, writes its artifacts
//! through a [`RunWriter`] and finishes with the manifest, also on failure.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::analysis::{
    detect_crossings, ipr_at, ipr_trajectory, pole_sweep, refine_crossings, split_damping_medians,
    StateLabel,
};
use crate::config::{RunConfig, Variant};
use crate::direct::{integrate_auxiliary, integrate_volterra, sample_reconstruction, Trajectory};
use crate::error::{Error, Result};
use crate::laplace::{
    build_augmented, classify_steady, find_poles_polynomial, find_poles_with, overlap_matrix,
    residues, PoleDecomposition, PoleSet, SpectralDensityParams,
};
use crate::lattice::build_hamiltonian;
use crate::localization::{eigendecompose, ipr_spectrum_of, mobility_report, EigenSystem};
use crate::output::{
    ipr_curves_table, overlap_table, plot_stub, poles_table, residue_table, spectrum_table,
    sweep_table, trajectory_table, RunInfo, RunWriter,
};
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verb {
    Spectrum,
    Poles,
    Evolve,
    Sweep,
}

impl Verb {
    pub fn name(&self) -> &'static str {
        match self {
            Verb::Spectrum => "spectrum",
            Verb::Poles => "poles",
            Verb::Evolve => "evolve",
            Verb::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunRequest {
    pub verb: Verb,
    /// File path or bundled config name.
    pub config: String,
    pub overrides: Vec<String>,
    /// Falls back to `output.dir`, then `runs/<verb>`.
    pub out: Option<PathBuf>,
    pub oracle_check: bool,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub manifest: PathBuf,
    /// `None` when no oracle check was requested.
    pub oracle_passed: Option<bool>,
}

/// Exit status for a run outcome: 0 ok, 2 config, 3 numerical, 4 oracle gate.
pub fn exit_code(outcome: &Result<RunReport>) -> i32 {
    match outcome {
        Ok(r) if r.oracle_passed == Some(false) => 4,
        Ok(_) => 0,
        Err(Error::Config(_)) => 2,
        Err(_) => 3,
    }
}

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: String,
    value: f64,
    tol: f64,
    passed: bool,
}

#[derive(Debug, Default)]
struct Oracle {
    checks: Vec<Check>,
}

impl Oracle {
    fn check(&mut self, name: impl Into<String>, value: f64, tol: f64) {
        let name = name.into();
        let passed = value <= tol;
        if !passed {
            log::warn!("oracle check {name} failed: {value:e} > {tol:e}");
        }
        self.checks.push(Check {
            name,
            value,
            tol,
            passed,
        });
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn to_json(&self) -> serde_json::Value {
        json!({ "passed": self.passed(), "checks": self.checks })
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    params: SpectralDensityParams,
    oracle: Option<Oracle>,
}

pub fn execute(req: &RunRequest) -> Result<RunReport> {
    let (cfg, text) = RunConfig::load(&req.config, &req.overrides)?;
    if let Some(k) = req.threads {
        if k == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        parallel::set_threads(k);
    }
    let out_dir = req
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| Path::new("runs").join(req.verb.name()));
    let run = RunInfo {
        command: req.verb.name().to_string(),
        config_source: req.config.clone(),
        overrides: req.overrides.clone(),
        config: serde_json::to_value(&cfg)
            .map_err(|e| Error::Config(format!("cannot echo config: {e}")))?,
        config_text: text,
        parallel: parallel::enabled(),
        threads: req.threads,
    };

    let params = cfg.bath_params()?;
    let mut writer = RunWriter::create(&out_dir)?;
    let mut ctx = Ctx {
        cfg: &cfg,
        params,
        oracle: req.oracle_check.then(Oracle::default),
    };
    let result = (|| -> Result<()> {
        for v in cfg.variants()? {
            match req.verb {
                Verb::Spectrum => spectrum(&mut ctx, &v, &mut writer)?,
                Verb::Poles => poles(&mut ctx, &v, &mut writer)?,
                Verb::Evolve => evolve(&mut ctx, &v, &mut writer)?,
                Verb::Sweep => sweep(&mut ctx, &v, &mut writer)?,
            }
        }
        if cfg.output.plot_stub {
            let script = plot_stub(writer.artifacts());
            writer.script("plot.py", &script)?;
        }
        Ok(())
    })();

    let oracle_json = ctx.oracle.as_ref().map(Oracle::to_json);
    let oracle_passed = ctx.oracle.as_ref().map(Oracle::passed);
    let status = match (&result, oracle_passed) {
        (Err(e), _) => format!("failed: {e}"),
        (Ok(()), Some(false)) => "oracle-check failed".to_string(),
        (Ok(()), _) => "ok".to_string(),
    };
    let manifest = writer.finish(run, &status, oracle_json)?;
    result?;
    Ok(RunReport {
        out_dir,
        manifest,
        oracle_passed,
    })
}

fn spectrum(ctx: &mut Ctx, v: &Variant, w: &mut RunWriter) -> Result<()> {
    let tag = &v.tag;
    let (es, levels) = w.timed(&format!("spectrum{tag}"), || -> Result<_> {
        let es = eigendecompose(&build_hamiltonian(&v.spec)?)?;
        let levels = ipr_spectrum_of(&es);
        Ok((es, levels))
    })?;
    w.csv(&format!("spectrum{tag}.csv"), &spectrum_table(&levels))?;
    w.json(
        &format!("mobility_edges{tag}.json"),
        &mobility_report(&v.spec)?,
    )?;
    if let Some(o) = ctx.oracle.as_mut() {
        let n = es.len() as f64;
        let below = levels.iter().map(|l| 1.0 / n - l.ipr).fold(0.0, f64::max);
        let above = levels.iter().map(|l| l.ipr - 1.0).fold(0.0, f64::max);
        o.check(format!("ipr_lower_bound{tag}"), below, 1e-12);
        o.check(format!("ipr_upper_bound{tag}"), above, 1e-12);
        let gram = es.eigenvectors.transpose() * &es.eigenvectors;
        let ortho = (gram - nalgebra::DMatrix::identity(es.len(), es.len())).amax();
        o.check(format!("eigenvector_orthonormality{tag}"), ortho, 1e-10);
    }
    Ok(())
}

fn pole_set(ctx: &Ctx, v: &Variant) -> Result<(EigenSystem, PoleSet)> {
    let h = build_hamiltonian(&v.spec)?;
    let es = eigendecompose(&h)?;
    let aug = build_augmented(&h, &ctx.params)?;
    let mut set = find_poles_with(&aug, &es)?;
    classify_steady(&mut set, ctx.cfg.analysis.tol_steady)?;
    Ok((es, set))
}

/// Largest distance from a pole to its nearest unused polynomial root.
fn polynomial_route_gap(v: &Variant, params: &SpectralDensityParams, set: &PoleSet) -> Result<f64> {
    let h = build_hamiltonian(&v.spec)?;
    let mut roots = find_poles_polynomial(&h, params)?;
    let mut gap: f64 = 0.0;
    for p in &set.poles {
        let (k, d) = roots
            .iter()
            .enumerate()
            .map(|(k, r)| (k, (r - p.z).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::numerical("polynomial route returned too few roots"))?;
        gap = gap.max(d);
        roots.swap_remove(k);
    }
    Ok(gap)
}

fn initial_states(cfg: &RunConfig, es: &EigenSystem) -> Vec<(StateLabel, DVector<Complex64>)> {
    let mut states: Vec<(StateLabel, DVector<Complex64>)> = cfg
        .selected_levels()
        .into_iter()
        .map(|j| (StateLabel::level(j, es.eigenvalues[j]), es.state(j)))
        .collect();
    if let Some(v) = &cfg.analysis.initial_vector {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let a = DVector::from_iterator(v.len(), v.iter().map(|x| Complex64::new(x / norm, 0.0)));
        states.push((StateLabel::named("custom"), a));
    }
    states
}

fn poles(ctx: &mut Ctx, v: &Variant, w: &mut RunWriter) -> Result<()> {
    let tag = &v.tag;
    let (es, set) = w.timed(&format!("poles{tag}"), || pole_set(ctx, v))?;
    if !set.multiple.is_empty() {
        w.note(format!(
            "variant{tag}: coupled multiple poles at {:?}",
            set.multiple
        ));
    }
    w.csv(&format!("poles{tag}.csv"), &poles_table(&set))?;
    let overlaps = overlap_matrix(&es, &set)?;
    w.csv(
        &format!("overlaps{tag}.csv"),
        &overlap_table(&es, &overlaps),
    )?;

    let states = initial_states(ctx.cfg, &es);
    let decomps = w.timed(&format!("residues{tag}"), || {
        parallel::map(&states, |(_, a)| residues(&set, a))
    });
    let mut worst_completeness: f64 = 0.0;
    for ((label, _), d) in states.iter().zip(decomps) {
        let d = d?;
        worst_completeness = worst_completeness.max(d.completeness_error());
        w.csv(
            &format!("residues_{}{tag}.csv", label.name),
            &residue_table(&d, &label.name),
        )?;
    }

    let params = ctx.params;
    if let Some(o) = ctx.oracle.as_mut() {
        let max_im = set
            .poles
            .iter()
            .map(|p| p.z.im)
            .fold(f64::NEG_INFINITY, f64::max);
        o.check(format!("pole_im_nonpositive{tag}"), max_im.max(0.0), 1e-10);
        o.check(format!("completeness{tag}"), worst_completeness, 1e-10);
        let gap = w.timed(&format!("polynomial_route{tag}"), || {
            polynomial_route_gap(v, &params, &set)
        })?;
        o.check(
            format!("polynomial_route{tag}"),
            gap,
            ctx.cfg.analysis.oracle_tol,
        );
    }
    Ok(())
}

struct StateRun {
    decomposition: PoleDecomposition,
    reconstruction: Trajectory,
    auxiliary: Trajectory,
    volterra: Option<Trajectory>,
}

fn evolve(ctx: &mut Ctx, v: &Variant, w: &mut RunWriter) -> Result<()> {
    let tag = &v.tag;
    let cfg = ctx.cfg;
    let params = ctx.params;
    let opts = cfg.integration();
    let h = build_hamiltonian(&v.spec)?;
    let (es, set) = pole_set(ctx, v)?;
    let states = initial_states(cfg, &es);

    let runs = w.timed(&format!("evolve{tag}"), || {
        parallel::map(&states, |(_, a)| -> Result<StateRun> {
            let decomposition = residues(&set, a)?;
            let reconstruction = sample_reconstruction(&decomposition, &opts)?;
            let auxiliary = integrate_auxiliary(&h, &params, a, &opts)?;
            let volterra = if cfg.dynamics.volterra {
                Some(integrate_volterra(&h, &params, a, &opts)?)
            } else {
                None
            };
            Ok(StateRun {
                decomposition,
                reconstruction,
                auxiliary,
                volterra,
            })
        })
    });
    let runs: Vec<StateRun> = runs.into_iter().collect::<Result<_>>()?;

    let mut curves = Vec::with_capacity(runs.len());
    for ((label, _), r) in states.iter().zip(&runs) {
        let name = &label.name;
        for traj in [
            Some(&r.reconstruction),
            Some(&r.auxiliary),
            r.volterra.as_ref(),
        ]
        .into_iter()
        .flatten()
        {
            w.csv(
                &format!("traj_{name}{tag}_{}.csv", traj.method.tag()),
                &trajectory_table(traj, name)?,
            )?;
        }
        curves.push(ipr_trajectory(&r.reconstruction, label.clone()));
    }
    w.csv(&format!("ipr_curves{tag}.csv"), &ipr_curves_table(&curves)?)?;

    let mut reports = Vec::new();
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            let mut r = detect_crossings(&curves[i], &curves[j])?;
            let (da, db) = (&runs[i].decomposition, &runs[j].decomposition);
            refine_crossings(
                &mut r,
                |t| ipr_at(da, t),
                |t| ipr_at(db, t),
                cfg.analysis.crossing_tol,
            );
            reports.push(r.to_json());
        }
    }
    w.json(&format!("crossings{tag}.json"), &reports)?;

    if let Some(o) = ctx.oracle.as_mut() {
        for ((label, _), r) in states.iter().zip(&runs) {
            let name = &label.name;
            o.check(
                format!("reconstruction_vs_auxiliary_{name}{tag}"),
                r.reconstruction.max_abs_diff(&r.auxiliary)?,
                cfg.analysis.oracle_tol,
            );
            if let Some(vol) = &r.volterra {
                o.check(
                    format!("volterra_vs_auxiliary_{name}{tag}"),
                    vol.max_abs_diff(&r.auxiliary)?,
                    cfg.analysis.volterra_tol,
                );
            }
            let excess = (0..r.auxiliary.len())
                .map(|k| r.auxiliary.norm_at(k) - 1.0)
                .fold(0.0, f64::max);
            o.check(format!("survival_bound_{name}{tag}"), excess, 1e-8);
        }
    }
    Ok(())
}

/// Points where all exact edges share one `|E|`, e.g. `±2/Δ` for κ = 2.
fn symmetric_edge(spec: &crate::lattice::ModelSpec) -> Option<f64> {
    let r = mobility_report(spec).ok()?;
    let first = r.edges.first()?.abs();
    r.edges
        .iter()
        .all(|e| (e.abs() - first).abs() < 1e-12)
        .then_some(first)
}

fn sweep(ctx: &mut Ctx, v: &Variant, w: &mut RunWriter) -> Result<()> {
    let tag = &v.tag;
    let axis = ctx.cfg.sweep_axis()?;
    let params = ctx.params;
    let tol = ctx.cfg.analysis.tol_steady;
    let mut result = w.timed(&format!("sweep{tag}"), || {
        pole_sweep(&v.spec, &axis, &params)
    })?;
    for p in &mut result.points {
        if let Ok(set) = &mut p.outcome {
            classify_steady(set, tol)?;
        }
    }
    w.csv(&format!("sweep{tag}.csv"), &sweep_table(&result))?;

    let mut summary = Vec::new();
    let mut failures = 0;
    for p in &result.points {
        match &p.outcome {
            Ok(set) => {
                let steady: Vec<f64> = set
                    .poles
                    .iter()
                    .filter(|q| q.steady)
                    .map(|q| q.z.re)
                    .collect();
                let edge = symmetric_edge(&p.spec);
                let (inside, outside) = edge
                    .map(|e| split_damping_medians(set, e))
                    .unwrap_or((None, None));
                summary.push(json!({
                    "value": p.value,
                    "n": p.spec.n,
                    "delta": p.spec.delta,
                    "steady_re": steady,
                    "edge": edge,
                    "median_damping_inside": inside,
                    "median_damping_outside": outside,
                }));
            }
            Err(msg) => {
                failures += 1;
                w.note(format!("sweep point {} failed: {msg}", p.value));
                summary.push(json!({ "value": p.value, "error": msg }));
            }
        }
    }
    w.json(&format!("sweep_summary{tag}.json"), &summary)?;

    if let Some(o) = ctx.oracle.as_mut() {
        let mut gap: f64 = 0.0;
        for p in &result.points {
            if let Ok(set) = &p.outcome {
                let variant = Variant {
                    tag: String::new(),
                    spec: p.spec,
                };
                gap = gap.max(polynomial_route_gap(&variant, &params, set)?);
            }
        }
        o.check(format!("sweep_failures{tag}"), failures as f64, 0.0);
        o.check(
            format!("polynomial_route{tag}"),
            gap,
            ctx.cfg.analysis.oracle_tol,
        );
    }
    Ok(())
}
