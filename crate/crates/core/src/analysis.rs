// SPDX-License-Identifier: Apache-2.0

//! Observables built on the dynamics: IPR relaxation curves, their
//! crossings (Mpemba signatures), survival probability and pole sweeps.

use serde::Serialize;

use crate::direct::{IntegrationOptions, Trajectory};
use crate::error::{Error, Result};
use crate::laplace::{poles_for, residues, PoleDecomposition, PoleSet, SpectralDensityParams};
use crate::lattice::{build_hamiltonian, ModelSpec};
use crate::localization::eigendecompose;
use crate::parallel;

/// Differences below this everywhere mean two curves are the same curve.
pub const INDISTINGUISHABLE_TOL: f64 = 1e-9;
/// Sign changes where both bracketing differences sit below this are noise.
const CROSSING_NOISE_FLOOR: f64 = 1e-12;

/// Which initial state a curve belongs to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateLabel {
    pub name: String,
    /// Descending-order level index, when the state is an eigenstate.
    pub level: Option<usize>,
    pub energy: Option<f64>,
}

impl StateLabel {
    pub fn level(j: usize, energy: f64) -> Self {
        StateLabel {
            name: format!("E{j}"),
            level: Some(j),
            energy: Some(energy),
        }
    }

    pub fn named(name: impl Into<String>) -> Self {
        StateLabel {
            name: name.into(),
            level: None,
            energy: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IprCurve {
    pub label: StateLabel,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl IprCurve {
    pub fn initial(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// `IPR(t) = Σ_n |α_n(t)|⁴` on the raw (decaying) amplitudes.
pub fn ipr_trajectory(traj: &Trajectory, label: StateLabel) -> IprCurve {
    let values = traj
        .amplitudes
        .iter()
        .map(|a| a.iter().map(|c| c.norm_sqr().powi(2)).sum())
        .collect();
    IprCurve {
        label,
        times: traj.times.clone(),
        values,
    }
}

/// IPR of the amplitudes renormalized by the surviving norm, `IPR/S²`.
pub fn normalized_ipr(traj: &Trajectory) -> Vec<f64> {
    traj.amplitudes
        .iter()
        .map(|a| {
            let s = a.norm_squared();
            if s == 0.0 {
                0.0
            } else {
                a.iter().map(|c| c.norm_sqr().powi(2)).sum::<f64>() / (s * s)
            }
        })
        .collect()
}

/// `S(t) = Σ_n |α_n(t)|²`.
pub fn survival_probability(traj: &Trajectory) -> Vec<f64> {
    traj.amplitudes.iter().map(|a| a.norm_squared()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub t_star: f64,
    /// Grid bracket `[t_k, t_{k+1}]` containing the sign change.
    pub bracket: (f64, f64),
    /// `a − b` at the bracket ends.
    pub diff_before: f64,
    pub diff_after: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossingReport {
    pub a: StateLabel,
    pub b: StateLabel,
    pub ipr0_a: f64,
    pub ipr0_b: f64,
    pub indistinguishable: bool,
    pub crossings: Vec<Crossing>,
}

impl CrossingReport {
    pub fn t_stars(&self) -> Vec<f64> {
        self.crossings.iter().map(|c| c.t_star).collect()
    }

    /// JSON form `{pair, t_star[], ipr0_a, ipr0_b}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "pair": [self.a.name, self.b.name],
            "t_star": self.t_stars(),
            "ipr0_a": self.ipr0_a,
            "ipr0_b": self.ipr0_b,
            "indistinguishable": self.indistinguishable,
            "energy_a": self.a.energy,
            "energy_b": self.b.energy,
        })
    }
}

/// Sign changes of `a − b` on the shared grid, located by linear
/// interpolation inside each bracket.
pub fn detect_crossings(a: &IprCurve, b: &IprCurve) -> Result<CrossingReport> {
    if a.times.len() != b.times.len()
        || a.times
            .iter()
            .zip(&b.times)
            .any(|(x, y)| (x - y).abs() > 1e-9 * x.abs().max(1.0))
    {
        return Err(Error::domain("IPR curves are on different time grids"));
    }
    let diff: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    let mut report = CrossingReport {
        a: a.label.clone(),
        b: b.label.clone(),
        ipr0_a: a.initial(),
        ipr0_b: b.initial(),
        indistinguishable: diff.iter().all(|d| d.abs() < INDISTINGUISHABLE_TOL),
        crossings: Vec::new(),
    };
    if report.indistinguishable {
        return Ok(report);
    }

    // Walk nonzero samples; an exact zero between opposite signs is one crossing.
    let mut last: Option<usize> = None;
    for k in 0..diff.len() {
        if diff[k] == 0.0 {
            continue;
        }
        if let Some(p) = last {
            if diff[p].signum() != diff[k].signum()
                && diff[p].abs().max(diff[k].abs()) >= CROSSING_NOISE_FLOOR
            {
                let (t0, t1) = (a.times[p], a.times[k]);
                let t_star = if k == p + 1 {
                    t0 + (t1 - t0) * diff[p] / (diff[p] - diff[k])
                } else {
                    a.times[p + 1]
                };
                report.crossings.push(Crossing {
                    t_star,
                    bracket: (t0, t1),
                    diff_before: diff[p],
                    diff_after: diff[k],
                });
            }
        }
        last = Some(k);
    }
    Ok(report)
}

/// Bisection of every bracket with exact evaluators of the two curves
/// (e.g. residue reconstruction), down to `tol` in `t`.
pub fn refine_crossings<FA, FB>(report: &mut CrossingReport, eval_a: FA, eval_b: FB, tol: f64)
where
    FA: Fn(f64) -> f64,
    FB: Fn(f64) -> f64,
{
    let d = |t: f64| eval_a(t) - eval_b(t);
    for c in &mut report.crossings {
        let (mut lo, mut hi) = c.bracket;
        let mut dlo = d(lo);
        if dlo == 0.0 {
            c.t_star = lo;
            continue;
        }
        if dlo.signum() == d(hi).signum() {
            continue;
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            let dm = d(mid);
            if dm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if dm.signum() == dlo.signum() {
                lo = mid;
                dlo = dm;
            } else {
                hi = mid;
            }
        }
        c.t_star = 0.5 * (lo + hi);
    }
}

/// IPR at arbitrary `t` from a residue decomposition.
pub fn ipr_at(decomp: &PoleDecomposition, t: f64) -> f64 {
    decomp
        .amplitudes_at(t)
        .iter()
        .map(|c| c.norm_sqr().powi(2))
        .sum()
}

/// Exact IPR curves (residue reconstruction) for eigenlevel initial states.
pub struct LevelDynamics {
    pub curves: Vec<IprCurve>,
    pub decompositions: Vec<PoleDecomposition>,
}

pub fn level_ipr_curves(
    spec: &ModelSpec,
    params: &SpectralDensityParams,
    levels: &[usize],
    opts: &IntegrationOptions,
) -> Result<LevelDynamics> {
    let h = build_hamiltonian(spec)?;
    let es = eigendecompose(&h)?;
    if let Some(&bad) = levels.iter().find(|&&j| j >= es.len()) {
        return Err(Error::Index {
            index: bad,
            len: es.len(),
        });
    }
    let set = poles_for(&h, params)?;
    let per_level = parallel::map(levels, |&j| -> Result<(IprCurve, PoleDecomposition)> {
        let d = residues(&set, &es.state(j))?;
        let traj = crate::direct::sample_reconstruction(&d, opts)?;
        Ok((
            ipr_trajectory(&traj, StateLabel::level(j, es.eigenvalues[j])),
            d,
        ))
    });
    let mut curves = Vec::with_capacity(levels.len());
    let mut decompositions = Vec::with_capacity(levels.len());
    for r in per_level {
        let (c, d) = r?;
        curves.push(c);
        decompositions.push(d);
    }
    Ok(LevelDynamics {
        curves,
        decompositions,
    })
}

/// Crossing reports for every unordered pair, refined with the exact
/// reconstruction to `tol` in `t`.
pub fn pairwise_crossings(dynamics: &LevelDynamics, tol: f64) -> Result<Vec<CrossingReport>> {
    let n = dynamics.curves.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut r = detect_crossings(&dynamics.curves[i], &dynamics.curves[j])?;
            let (da, db) = (&dynamics.decompositions[i], &dynamics.decompositions[j]);
            refine_crossings(&mut r, |t| ipr_at(da, t), |t| ipr_at(db, t), tol);
            out.push(r);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "axis", content = "values", rename_all = "lowercase")]
pub enum SweepAxis {
    Delta(Vec<f64>),
    N(Vec<usize>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Delta(_) => "delta",
            SweepAxis::N(_) => "n",
        }
    }

    fn points(&self) -> Vec<f64> {
        match self {
            SweepAxis::Delta(v) => v.clone(),
            SweepAxis::N(v) => v.iter().map(|&n| n as f64).collect(),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            SweepAxis::Delta(v) => v.is_empty(),
            SweepAxis::N(v) => v.is_empty(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub spec: ModelSpec,
    /// Poles, or the failure message for this point.
    pub outcome: std::result::Result<PoleSet, String>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub base: ModelSpec,
    pub params: SpectralDensityParams,
    pub points: Vec<SweepPoint>,
}

/// Pole sets across a Δ or N axis. Per-point failures are recorded and the
/// sweep continues.
pub fn pole_sweep(
    base: &ModelSpec,
    axis: &SweepAxis,
    params: &SpectralDensityParams,
) -> Result<SweepResult> {
    if axis.is_empty() {
        return Err(Error::domain("sweep axis has no values"));
    }
    params.validate()?;
    let specs: Vec<(f64, ModelSpec)> = axis
        .points()
        .into_iter()
        .map(|v| {
            let mut s = *base;
            match axis {
                SweepAxis::Delta(_) => s.delta = v,
                SweepAxis::N(_) => s.n = v as usize,
            }
            (v, s)
        })
        .collect();
    let points = parallel::map(&specs, |&(value, spec)| {
        let outcome = build_hamiltonian(&spec)
            .and_then(|h| poles_for(&h, params))
            .map_err(|e| e.to_string());
        SweepPoint {
            value,
            spec,
            outcome,
        }
    });
    Ok(SweepResult {
        axis: axis.clone(),
        base: *base,
        params: *params,
        points,
    })
}

/// Median of `|Im z|` for non-pseudomode poles inside and outside `|Re z| < edge`.
pub fn split_damping_medians(set: &PoleSet, edge: f64) -> (Option<f64>, Option<f64>) {
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for p in set.poles.iter().filter(|p| !p.pseudomode) {
        if p.z.re.abs() < edge {
            inside.push(p.z.im.abs());
        } else {
            outside.push(p.z.im.abs());
        }
    }
    (median(&mut inside), median(&mut outside))
}

fn median(xs: &mut [f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    let m = xs.len() / 2;
    Some(if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    })
}
