// SPDX-License-Identifier: Apache-2.0

//! Closed-lattice spectra, inverse participation ratios and mobility edges.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, HamiltonianMatrix, ModelKind, ModelSpec};
use crate::poly;

/// Eigenpairs of a lattice Hamiltonian, eigenvalues in descending order.
///
/// Column `j` of `eigenvectors` belongs to `eigenvalues[j]`; each column's
/// first component above `1e-12` in magnitude is positive.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub spec: Option<ModelSpec>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, j: usize) -> DVector<f64> {
        self.eigenvectors.column(j).into_owned()
    }

    /// Eigenvector `j` as complex amplitudes, ready to seed dynamics.
    pub fn state(&self, j: usize) -> DVector<Complex64> {
        self.eigenvectors.column(j).map(|x| Complex64::new(x, 0.0))
    }

    /// Index of the level closest to `energy`.
    pub fn nearest_level(&self, energy: f64) -> usize {
        self.eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - energy).abs().total_cmp(&(b.1 - energy).abs()))
            .map(|(j, _)| j)
            .unwrap_or(0)
    }

    /// Overlap `uᵀv_j` with the uniform vector `u = (1, …, 1)`.
    pub fn uniform_overlap(&self, j: usize) -> f64 {
        self.eigenvectors.column(j).sum()
    }
}

/// Dense symmetric eigensolve with deterministic ordering and signs.
pub fn eigendecompose(h: &HamiltonianMatrix) -> Result<EigenSystem> {
    let m = h.matrix();
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), 1e-15, 0).ok_or_else(|| {
        Error::numerical(format!("symmetric eigensolver did not converge (N = {n})"))
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(k).into_owned();
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        vectors.set_column(j, &col);
    }

    let scale = m.amax().max(1.0);
    for (j, &e) in eigenvalues.iter().enumerate() {
        let v = vectors.column(j);
        let r = (m * v - v * e).amax();
        if r > 1e-10 * scale {
            return Err(Error::numerical(format!(
                "eigenpair {j} residual {r:.3e} exceeds tolerance"
            )));
        }
    }

    Ok(EigenSystem {
        eigenvalues,
        eigenvectors: vectors,
        spec: h.spec().copied(),
    })
}

/// `Σ |α_n|⁴` on the raw amplitudes; no renormalization by the current norm.
pub fn ipr(amplitudes: &[Complex64]) -> Result<f64> {
    if amplitudes.is_empty() {
        return Err(Error::domain("IPR of an empty vector"));
    }
    Ok(amplitudes.iter().map(|a| a.norm_sqr().powi(2)).sum())
}

pub fn ipr_real(amplitudes: &[f64]) -> Result<f64> {
    if amplitudes.is_empty() {
        return Err(Error::domain("IPR of an empty vector"));
    }
    Ok(amplitudes.iter().map(|a| a.powi(4)).sum())
}

/// `a_κ(E)` via `a_1 = 1, a_2 = E, a_{k+1} = E a_k − a_{k−1}` (a Chebyshev
/// polynomial of the second kind in `E/2`), valid for every real `E`.
pub fn chebyshev_a(kappa: usize, e: f64) -> Result<f64> {
    if kappa < 1 {
        return Err(Error::domain("kappa must be >= 1"));
    }
    let (mut prev, mut cur) = (0.0, 1.0);
    for _ in 1..kappa {
        let next = e * cur - prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// The surd form `[(E+√(E²−4))/2)^κ − ((E−√(E²−4))/2)^κ] / √(E²−4)`,
/// defined for `|E| > 2` only.
pub fn chebyshev_a_closed_form(kappa: usize, e: f64) -> Result<f64> {
    if kappa < 1 {
        return Err(Error::domain("kappa must be >= 1"));
    }
    if e.abs() <= 2.0 {
        return Err(Error::domain(format!(
            "closed form of a_kappa is singular or complex for |E| <= 2 (E = {e})"
        )));
    }
    let s = (e * e - 4.0).sqrt();
    let k = kappa as i32;
    Ok((((e + s) / 2.0).powi(k) - ((e - s) / 2.0).powi(k)) / s)
}

/// Coefficients of `a_κ(E)` as a polynomial of degree `κ − 1`, lowest first.
pub fn chebyshev_a_coeffs(kappa: usize) -> Result<Vec<f64>> {
    if kappa < 1 {
        return Err(Error::domain("kappa must be >= 1"));
    }
    let mut prev: Vec<f64> = vec![0.0];
    let mut cur: Vec<f64> = vec![1.0];
    for _ in 1..kappa {
        let mut next = vec![0.0; cur.len() + 1];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, &p) in prev.iter().enumerate() {
            next[i] -= p;
        }
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

const ROOT_IMAG_TOL: f64 = 1e-9;
const ROOT_MERGE_TOL: f64 = 1e-9;

fn real_roots_shifted(kappa: usize, shift: f64) -> Result<Vec<f64>> {
    let mut c = chebyshev_a_coeffs(kappa)?;
    if c.len() < 2 {
        return Ok(Vec::new());
    }
    c[0] -= shift;
    poly::real_roots(&c, ROOT_IMAG_TOL, ROOT_MERGE_TOL)
}

/// Roots of `a_κ(E) = 0`, descending. Empty for κ = 1.
pub fn asymptotic_edges(kappa: usize) -> Result<Vec<f64>> {
    real_roots_shifted(kappa, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum EdgeModel {
    Mosaic { kappa: usize },
    Gaah { a: f64, lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MobilityEdgeReport {
    #[serde(flatten)]
    pub model: EdgeModel,
    pub delta: f64,
    pub edges: Vec<f64>,
    pub asymptotic_edges: Vec<f64>,
}

/// Mosaic mobility edges: all real solutions of `|Δ a_κ(E) / 2| = 1`, plus
/// the Δ → ∞ edges `a_κ(E) = 0`.
pub fn mobility_edges(kappa: usize, delta: f64) -> Result<MobilityEdgeReport> {
    if kappa < 1 {
        return Err(Error::domain("kappa must be >= 1"));
    }
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::domain(format!(
            "finite mobility edges need a finite nonzero delta, got {delta}"
        )));
    }
    let target = 2.0 / delta;
    let mut edges = real_roots_shifted(kappa, target)?;
    edges.extend(real_roots_shifted(kappa, -target)?);
    edges.sort_by(|a, b| b.total_cmp(a));
    edges.dedup_by(|a, b| (*a - *b).abs() < ROOT_MERGE_TOL);
    Ok(MobilityEdgeReport {
        model: EdgeModel::Mosaic { kappa },
        delta,
        edges,
        asymptotic_edges: asymptotic_edges(kappa)?,
    })
}

/// GAAH edge `E_c = sgn(λ)(2|λ| − |Δ|)/a`.
pub fn gaah_mobility_edge(a: f64, lambda: f64, delta: f64) -> Result<f64> {
    if a == 0.0 {
        return Err(Error::domain("GAAH with a = 0 has no finite mobility edge"));
    }
    if !(a.abs() < 1.0) {
        return Err(Error::domain(format!("GAAH requires |a| < 1, got {a}")));
    }
    let sgn = if lambda > 0.0 {
        1.0
    } else if lambda < 0.0 {
        -1.0
    } else {
        0.0
    };
    Ok(sgn * (2.0 * lambda.abs() - delta.abs()) / a)
}

/// Mobility-edge report for whatever family `spec` belongs to. AAH and
/// `Δ = 0` yield empty edge lists.
pub fn mobility_report(spec: &ModelSpec) -> Result<MobilityEdgeReport> {
    match spec.kind {
        ModelKind::Mosaic { kappa } if spec.delta != 0.0 => mobility_edges(kappa, spec.delta),
        ModelKind::Mosaic { kappa } => Ok(MobilityEdgeReport {
            model: EdgeModel::Mosaic { kappa },
            delta: spec.delta,
            edges: Vec::new(),
            asymptotic_edges: asymptotic_edges(kappa)?,
        }),
        ModelKind::Aah => Ok(MobilityEdgeReport {
            model: EdgeModel::Mosaic { kappa: 1 },
            delta: spec.delta,
            edges: Vec::new(),
            asymptotic_edges: Vec::new(),
        }),
        ModelKind::Gaah { a } => Ok(MobilityEdgeReport {
            model: EdgeModel::Gaah {
                a,
                lambda: spec.lambda,
            },
            delta: spec.delta,
            edges: if a == 0.0 {
                Vec::new()
            } else {
                vec![gaah_mobility_edge(a, spec.lambda, spec.delta)?]
            },
            asymptotic_edges: Vec::new(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelIpr {
    /// Descending-order level index, 0-based.
    pub j: usize,
    pub energy: f64,
    pub ipr: f64,
}

pub fn ipr_spectrum_of(es: &EigenSystem) -> Vec<LevelIpr> {
    (0..es.len())
        .map(|j| LevelIpr {
            j,
            energy: es.eigenvalues[j],
            ipr: es.eigenvectors.column(j).iter().map(|x| x.powi(4)).sum(),
        })
        .collect()
}

pub fn ipr_spectrum(spec: &ModelSpec) -> Result<Vec<LevelIpr>> {
    let es = eigendecompose(&build_hamiltonian(spec)?)?;
    Ok(ipr_spectrum_of(&es))
}
