// SPDX-License-Identifier: Apache-2.0

//! Laplace-domain solution of the single-excitation dynamics.
//!
//! With the full-line Lorentzian `J(ω) = ηω_c²/(ω² + ω_c²)` the bath enters
//! only through the self-energy `Σ(z) = πηω_c/(z + iω_c)` acting on the
//! uniform vector `u = (1, …, 1)`. The poles of the amplitude transform are
//! the zeros of
//!
//! ```text
//! D(z) = (z + iω_c)·det(z − H) − πηω_c·uᵀ adj(z − H) u,
//! ```
//!
//! a polynomial of degree `N + 1`. They coincide with the eigenvalues of the
//! complex-symmetric augmented generator
//!
//! ```text
//! A = [[H, g u], [g uᵀ, −iω_c]],   g = √(πηω_c),
//! ```
//!
//! whose extra row is the pseudomode of the Lorentzian bath. Poles come from
//! the eigenvalues of `A`, refined by Newton on the secular function, and
//! residues from its (unconjugated) right eigenvectors:
//! `c_{n,i} = V_i(n)·(V_iᵀψ₀)/(V_iᵀV_i)` with `ψ₀ = [α(0); 0]`.
//!
//! Eigenvectors are formed in the eigenbasis of `H`, where `A` is an
//! arrowhead matrix. Levels orthogonal to `u` (after rotating each
//! degenerate cluster so that at most one member couples) never see the
//! bath; their energies are exact, dissipationless poles.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::HamiltonianMatrix;
use crate::localization::{eigendecompose, EigenSystem};
use crate::parallel;
use crate::poly;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Default `|Im z|` below which a pole counts as steady.
pub const DEFAULT_TOL_STEADY: f64 = 1e-10;
/// Pole pairs closer than this are flagged as near-degenerate.
pub const NEAR_DEGENERATE_SEP: f64 = 1e-8;
/// Pole pairs closer than this are treated as a multiple pole.
pub const MULTIPLE_POLE_SEP: f64 = 1e-12;
/// Levels whose bath coupling `g·|uᵀv|` falls below this are decoupled.
pub const DECOUPLED_TOL: f64 = 1e-12;

/// Lorentzian bath `J(ω) = ηω_c²/(ω² + ω_c²)` on the full frequency line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensityParams {
    pub eta: f64,
    pub omega_c: f64,
}

impl SpectralDensityParams {
    pub fn new(eta: f64, omega_c: f64) -> Result<Self> {
        let p = SpectralDensityParams { eta, omega_c };
        p.validate()?;
        Ok(p)
    }

    /// `η = 0` is accepted as the decoupled limit; `ω_c` must be positive.
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::domain(format!(
                "eta must be finite and >= 0, got {}",
                self.eta
            )));
        }
        if !(self.omega_c > 0.0) || !self.omega_c.is_finite() {
            return Err(Error::domain(format!(
                "omega_c must be finite and > 0, got {}",
                self.omega_c
            )));
        }
        Ok(())
    }

    pub fn spectral_density(&self, omega: f64) -> f64 {
        self.eta * self.omega_c * self.omega_c / (omega * omega + self.omega_c * self.omega_c)
    }

    /// `πηω_c = ∫ J(ω) dω`.
    pub fn weight(&self) -> f64 {
        std::f64::consts::PI * self.eta * self.omega_c
    }

    /// Pseudomode coupling `g = √(πηω_c)`.
    pub fn coupling(&self) -> f64 {
        self.weight().sqrt()
    }
}

/// `Σ(z) = ∫ J(ω)/(z − ω) dω = πηω_c/(z + iω_c)` for `Im z > −ω_c`, continued
/// analytically below.
pub fn self_energy(z: Complex64, params: &SpectralDensityParams) -> Result<Complex64> {
    params.validate()?;
    let denom = z + I * params.omega_c;
    if denom.norm() == 0.0 {
        return Err(Error::domain(format!(
            "self-energy has a pole at z = -i*omega_c = {z}"
        )));
    }
    Ok(params.weight() / denom)
}

/// The `(N+1)×(N+1)` complex-symmetric generator `[[H, g u], [g uᵀ, −iω_c]]`.
#[derive(Debug, Clone)]
pub struct AugmentedGenerator {
    pub matrix: DMatrix<Complex64>,
    pub g: f64,
    pub hamiltonian: HamiltonianMatrix,
    pub params: SpectralDensityParams,
}

impl AugmentedGenerator {
    /// Number of lattice sites `N`.
    pub fn sites(&self) -> usize {
        self.hamiltonian.dim()
    }
}

pub fn build_augmented(
    h: &HamiltonianMatrix,
    params: &SpectralDensityParams,
) -> Result<AugmentedGenerator> {
    params.validate()?;
    let n = h.dim();
    let g = params.coupling();
    let mut a = DMatrix::<Complex64>::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = Complex64::new(h.matrix()[(i, j)], 0.0);
        }
        a[(i, n)] = Complex64::new(g, 0.0);
        a[(n, i)] = Complex64::new(g, 0.0);
    }
    a[(n, n)] = Complex64::new(0.0, -params.omega_c);
    Ok(AugmentedGenerator {
        matrix: a,
        g,
        hamiltonian: h.clone(),
        params: *params,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pole {
    pub z: Complex64,
    /// `|Im z| < tol_steady`.
    pub steady: bool,
    /// The pole whose eigenvector has the largest pseudomode share.
    pub pseudomode: bool,
    /// `|V_aux|² / ‖V‖²` of the right eigenvector.
    pub aux_weight: f64,
    /// Another pole lies within [`NEAR_DEGENERATE_SEP`].
    pub near_degenerate: bool,
    /// The level is orthogonal to the bath coupling (exact eigenvalue of `H`).
    pub decoupled: bool,
}

/// All `N + 1` poles with their right eigenvectors, sorted by descending `Re z`.
#[derive(Debug, Clone)]
pub struct PoleSet {
    pub poles: Vec<Pole>,
    /// Column `i`: right eigenvector of the augmented generator for pole `i`,
    /// lattice sites first, pseudomode last.
    pub vectors: DMatrix<Complex64>,
    /// `V_iᵀV_i` (no conjugation).
    pub bilinear_norms: Vec<Complex64>,
    pub params: SpectralDensityParams,
    /// Index pairs of coupled poles closer than [`MULTIPLE_POLE_SEP`].
    pub multiple: Vec<(usize, usize)>,
}

impl PoleSet {
    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn sites(&self) -> usize {
        self.vectors.nrows() - 1
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.poles.iter().map(|p| p.z).collect()
    }

    pub fn steady_count(&self) -> usize {
        self.poles.iter().filter(|p| p.steady).count()
    }

    pub fn pseudomode_index(&self) -> Option<usize> {
        self.poles.iter().position(|p| p.pseudomode)
    }
}

/// Spectral representation of `H` with degenerate clusters rotated so that
/// each cluster has at most one member coupled to `u`.
struct ArrowheadBasis {
    energies: Vec<f64>,
    basis: DMatrix<f64>,
    /// `uᵀq_j`.
    weights: Vec<f64>,
    coupled: Vec<bool>,
}

fn arrowhead_basis(es: &EigenSystem, g: f64) -> ArrowheadBasis {
    let n = es.len();
    let scale = es.eigenvalues.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    let cluster_tol = 1e-10 * scale;

    let mut basis = es.eigenvectors.clone();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (es.eigenvalues[end - 1] - es.eigenvalues[end]).abs() <= cluster_tol {
            end += 1;
        }
        if end - start > 1 {
            concentrate_coupling(&mut basis, start, end);
        }
        start = end;
    }

    let weights: Vec<f64> = (0..n).map(|j| basis.column(j).sum()).collect();
    let coupled = weights
        .iter()
        .map(|w| g * w.abs() > DECOUPLED_TOL)
        .collect();
    ArrowheadBasis {
        energies: es.eigenvalues.clone(),
        basis,
        weights,
        coupled,
    }
}

/// Householder-rotate columns `start..end` so the whole overlap with `u`
/// lands on column `start`.
fn concentrate_coupling(basis: &mut DMatrix<f64>, start: usize, end: usize) {
    let w: Vec<f64> = (start..end).map(|j| basis.column(j).sum()).collect();
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let sign = if w[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut h = w.clone();
    h[0] += sign * norm;
    let hh: f64 = h.iter().map(|x| x * x).sum();
    if hh == 0.0 {
        return;
    }
    let block = basis.columns(start, end - start).into_owned();
    // block · (I − 2 h hᵀ / hᵀh)
    let bh = &block * DVector::from_vec(h.clone());
    let mut rotated = block.clone();
    for (k, &hk) in h.iter().enumerate() {
        let coef = 2.0 * hk / hh;
        let mut col = rotated.column_mut(k);
        col.axpy(-coef, &bh, 1.0);
    }
    basis.columns_mut(start, end - start).copy_from(&rotated);
}

/// `R(z) = z + iω_c − g² Σ_{coupled k ≠ skip} w_k²/(z − E_k)`, `R'(z)`, the
/// magnitude scale of its terms and its rounding noise (dominated by the
/// cancellation in `z − E_k` near a level).
fn secular_rest(
    z: Complex64,
    ab: &ArrowheadBasis,
    params: &SpectralDensityParams,
    skip: Option<usize>,
) -> (Complex64, Complex64, f64, f64) {
    let g2 = params.weight();
    let mut f = z + I * params.omega_c;
    let mut df = Complex64::new(1.0, 0.0);
    let mut mag = z.norm() + params.omega_c;
    let mut noise = mag;
    for k in 0..ab.energies.len() {
        if !ab.coupled[k] || Some(k) == skip {
            continue;
        }
        let w2 = ab.weights[k] * ab.weights[k];
        let d = z - ab.energies[k];
        let inv = 1.0 / d;
        let t = g2 * w2 * inv;
        f -= t;
        df += t * inv;
        mag += t.norm();
        noise += t.norm() * (1.0 + (z.norm() + ab.energies[k].abs()) / d.norm());
    }
    (f, df, mag, noise * f64::EPSILON)
}

/// Newton on the secular equation, written relative to the coupled level
/// `E_j` nearest the seed: `G(δ) = δ R(E_j + δ) − g² w_j²` with the `j` term
/// left out of `R`. This stays well conditioned when the pole sits
/// arbitrarily close to `E_j`.
/// A refined coupled pole `z = E_anchor + delta`, with `delta` kept
/// separately because it can be far below the resolution of `z`.
#[derive(Debug, Clone, Copy)]
struct SecularRoot {
    z: Complex64,
    anchor: Option<usize>,
    delta: Complex64,
}

fn newton_secular(
    seed: Complex64,
    ab: &ArrowheadBasis,
    params: &SpectralDensityParams,
) -> Result<SecularRoot> {
    let nearest = (0..ab.energies.len())
        .filter(|&k| ab.coupled[k])
        .min_by(|&a, &b| {
            (seed - ab.energies[a])
                .norm()
                .total_cmp(&(seed - ab.energies[b]).norm())
        });
    let (anchor, c) = match nearest {
        Some(j) => (
            ab.energies[j],
            params.weight() * ab.weights[j] * ab.weights[j],
        ),
        None => (0.0, 0.0),
    };
    let eval = |delta: Complex64| {
        let z = delta + anchor;
        let (r, dr, mag, noise) = secular_rest(z, ab, params, nearest);
        if nearest.is_some() {
            (
                delta * r - c,
                r + delta * dr,
                delta.norm() * mag + c,
                delta.norm() * noise + f64::EPSILON * c,
            )
        } else {
            (r, dr, mag, noise)
        }
    };

    let mut delta = seed - anchor;
    for _ in 0..100 {
        let (g, dg, _, _) = eval(delta);
        let step = g / dg;
        if !step.re.is_finite() || !step.im.is_finite() {
            return Err(Error::numerical(format!(
                "Newton refinement produced a non-finite step from seed {seed}"
            )));
        }
        delta -= step;
        // relative to delta: near a level the pole offset can be far below ulp(z)
        if step.norm() <= 4.0 * f64::EPSILON * delta.norm() {
            break;
        }
    }
    let z = delta + anchor;
    let (g, _, mag, noise) = eval(delta);
    if !(g.norm() <= (1e-9 * mag).max(100.0 * noise)) {
        return Err(Error::numerical(format!(
            "Newton refinement from seed {seed} stalled at {z} with residual {:.3e}",
            g.norm()
        )));
    }
    if (z - seed).norm() > 1e-4 * seed.norm().max(1.0) {
        return Err(Error::numerical(format!(
            "Newton refinement drifted from eigenvalue seed {seed} to {z}"
        )));
    }
    Ok(SecularRoot {
        z,
        anchor: nearest,
        delta,
    })
}

/// Locate all `N + 1` poles of the augmented generator.
pub fn find_poles(aug: &AugmentedGenerator) -> Result<PoleSet> {
    let es = eigendecompose(&aug.hamiltonian)?;
    find_poles_with(aug, &es)
}

/// As [`find_poles`], reusing an eigensystem of the same Hamiltonian.
pub fn find_poles_with(aug: &AugmentedGenerator, es: &EigenSystem) -> Result<PoleSet> {
    let n = aug.sites();
    if es.len() != n {
        return Err(Error::domain(
            "eigensystem size does not match the generator",
        ));
    }
    let params = aug.params;
    let ab = arrowhead_basis(es, aug.g);

    let mut raw = poly::complex_eigenvalues(aug.matrix.clone())?;
    if raw.len() != n + 1 {
        return Err(Error::numerical(
            "augmented eigensolve returned a wrong count",
        ));
    }

    // (pole, Some(level) for decoupled levels, None for coupled poles)
    let mut found: Vec<(Complex64, Option<usize>, Option<SecularRoot>)> = Vec::with_capacity(n + 1);
    for j in (0..n).filter(|&j| !ab.coupled[j]) {
        let e = Complex64::new(ab.energies[j], 0.0);
        let k = raw
            .iter()
            .enumerate()
            .min_by(|a, b| (*a.1 - e).norm().total_cmp(&(*b.1 - e).norm()))
            .map(|(k, _)| k)
            .ok_or_else(|| Error::numerical("ran out of eigenvalue seeds"))?;
        let dist = (raw[k] - e).norm();
        if dist > 1e-6 * (1.0 + e.norm()) {
            log::warn!(
                "decoupled level {e} matched eigenvalue {} at distance {dist:.2e}",
                raw[k]
            );
        }
        raw.swap_remove(k);
        found.push((e, Some(j), None));
    }
    for seed in raw {
        let root = newton_secular(seed, &ab, &params)?;
        found.push((root.z, None, Some(root)));
    }

    found.sort_by(|a, b| b.0.re.total_cmp(&a.0.re).then(b.0.im.total_cmp(&a.0.im)));

    // Eigenvectors in the arrowhead basis, then rotated back to sites.
    let mut vectors = DMatrix::<Complex64>::zeros(n + 1, n + 1);
    let mut bilinear_norms = Vec::with_capacity(n + 1);
    let mut poles = Vec::with_capacity(n + 1);
    for (i, &(z, level, root)) in found.iter().enumerate() {
        let mut y = DVector::<Complex64>::zeros(n);
        let aux;
        match level {
            Some(j) => {
                y[j] = Complex64::new(1.0, 0.0);
                aux = Complex64::new(0.0, 0.0);
            }
            None => {
                for j in (0..n).filter(|&j| ab.coupled[j]) {
                    let d = match root {
                        Some(r) if r.anchor == Some(j) => r.delta,
                        _ => z - ab.energies[j],
                    };
                    y[j] = aug.g * ab.weights[j] / d;
                }
                aux = Complex64::new(1.0, 0.0);
            }
        }
        let bilinear = y.iter().map(|v| v * v).sum::<Complex64>() + aux * aux;
        let herm = y.iter().map(|v| v.norm_sqr()).sum::<f64>() + aux.norm_sqr();
        let sites = ab.basis.map(|x| Complex64::new(x, 0.0)) * &y;
        for r in 0..n {
            vectors[(r, i)] = sites[r];
        }
        vectors[(n, i)] = aux;
        bilinear_norms.push(bilinear);
        poles.push(Pole {
            z,
            steady: z.im.abs() < DEFAULT_TOL_STEADY,
            pseudomode: false,
            aux_weight: aux.norm_sqr() / herm,
            near_degenerate: false,
            decoupled: level.is_some(),
        });
    }

    let mut multiple = Vec::new();
    for a in 0..poles.len() {
        for b in a + 1..poles.len() {
            let sep = (poles[a].z - poles[b].z).norm();
            if sep < NEAR_DEGENERATE_SEP {
                poles[a].near_degenerate = true;
                poles[b].near_degenerate = true;
                // Decoupled levels stay bilinear-orthogonal even when degenerate.
                if sep < MULTIPLE_POLE_SEP && !(poles[a].decoupled && poles[b].decoupled) {
                    multiple.push((a, b));
                }
            }
        }
    }

    let mut set = PoleSet {
        poles,
        vectors,
        bilinear_norms,
        params,
        multiple,
    };
    classify_steady(&mut set, DEFAULT_TOL_STEADY)?;
    Ok(set)
}

/// Re-flag steady poles at `tol_steady` and mark the pseudomode pole.
pub fn classify_steady(set: &mut PoleSet, tol_steady: f64) -> Result<()> {
    if !(tol_steady > 0.0) {
        return Err(Error::domain("tol_steady must be positive"));
    }
    let pseudo = set
        .poles
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.aux_weight.total_cmp(&b.1.aux_weight))
        .map(|(i, _)| i);
    for (i, p) in set.poles.iter_mut().enumerate() {
        p.steady = p.z.im.abs() < tol_steady;
        p.pseudomode = Some(i) == pseudo;
    }
    Ok(())
}

/// Coefficients (lowest first) of the degree-`N+1` pole polynomial
/// `D(z) = (z + iω_c) Π_j (z − E_j) − πηω_c Σ_j w_j Π_{k≠j} (z − E_k)`,
/// `w_j = (uᵀv_j)²`.
pub fn pole_polynomial(es: &EigenSystem, params: &SpectralDensityParams) -> Vec<Complex64> {
    let n = es.len();
    let roots: Vec<Complex64> = es
        .eigenvalues
        .iter()
        .map(|&e| Complex64::new(e, 0.0))
        .collect();
    let full = poly::from_roots(roots.iter().copied());
    let mut d = poly::mul(&full, &[I * params.omega_c, Complex64::new(1.0, 0.0)]);
    for j in 0..n {
        let w = es.uniform_overlap(j);
        let partial = poly::from_roots(
            roots
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &r)| r),
        );
        let term = poly::scale(&partial, Complex64::new(-params.weight() * w * w, 0.0));
        d = poly::add(&d, &term);
    }
    d
}

/// Independent pole route: companion-matrix roots of [`pole_polynomial`],
/// sorted by descending real part.
pub fn find_poles_polynomial(
    h: &HamiltonianMatrix,
    params: &SpectralDensityParams,
) -> Result<Vec<Complex64>> {
    params.validate()?;
    let es = eigendecompose(h)?;
    let mut r = poly::roots(&pole_polynomial(&es, params))?;
    r.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(r)
}

/// Residue table for one initial state, plus the poles it expands over.
#[derive(Debug, Clone)]
pub struct PoleDecomposition {
    pub poles: Vec<Pole>,
    /// `c_{n,i}`: row `n` (site), column `i` (pole).
    pub residues: DMatrix<Complex64>,
    pub alpha0: DVector<Complex64>,
}

impl PoleDecomposition {
    pub fn sites(&self) -> usize {
        self.residues.nrows()
    }

    /// `α_n(t) = Σ_i c_{n,i} e^{−i z_i t}`; exact for the Lorentzian bath.
    pub fn amplitudes_at(&self, t: f64) -> DVector<Complex64> {
        let phases = DVector::from_iterator(
            self.poles.len(),
            self.poles.iter().map(|p| (-I * p.z * t).exp()),
        );
        &self.residues * phases
    }

    /// `max_n |Σ_i c_{n,i} − α_n(0)|`.
    pub fn completeness_error(&self) -> f64 {
        let sums = self.residues.column_sum();
        (sums - &self.alpha0)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// `Σ_n α_n(0)* c_{n,i}` per pole.
    pub fn projections(&self) -> Vec<Complex64> {
        (0..self.poles.len())
            .map(|i| {
                self.residues
                    .column(i)
                    .iter()
                    .zip(self.alpha0.iter())
                    .map(|(c, a)| a.conj() * c)
                    .sum()
            })
            .collect()
    }
}

/// Free-function form of [`PoleDecomposition::amplitudes_at`].
pub fn reconstruct_amplitudes(decomp: &PoleDecomposition, t: f64) -> DVector<Complex64> {
    decomp.amplitudes_at(t)
}

/// Residues `c_{n,i}` of the amplitude transform for initial state `alpha0`.
pub fn residues(set: &PoleSet, alpha0: &DVector<Complex64>) -> Result<PoleDecomposition> {
    let n = set.sites();
    if alpha0.len() != n {
        return Err(Error::domain(format!(
            "initial state has {} components, lattice has {n}",
            alpha0.len()
        )));
    }
    let norm = alpha0.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::domain(format!(
            "initial state must be normalized, |alpha0| = {norm}"
        )));
    }
    if let Some(&(a, b)) = set.multiple.first() {
        return Err(Error::IllConditioned {
            index: a,
            detail: format!(
                "poles {a} and {b} coincide ({} vs {}); use direct integration",
                set.poles[a].z, set.poles[b].z
            ),
        });
    }

    let mut table = DMatrix::<Complex64>::zeros(n, set.len());
    for i in 0..set.len() {
        let v = set.vectors.column(i);
        let herm = v.iter().map(|x| x.norm_sqr()).sum::<f64>();
        let bil = set.bilinear_norms[i];
        if bil.norm() < 1e-10 * herm {
            return Err(Error::IllConditioned {
                index: i,
                detail: format!(
                    "|V^T V| = {:.3e} against |V|^2 = {herm:.3e} at z = {}",
                    bil.norm(),
                    set.poles[i].z
                ),
            });
        }
        let proj: Complex64 = (0..n).map(|r| v[r] * alpha0[r]).sum();
        let coef = proj / bil;
        for r in 0..n {
            table[(r, i)] = v[r] * coef;
        }
    }
    Ok(PoleDecomposition {
        poles: set.poles.clone(),
        residues: table,
        alpha0: alpha0.clone(),
    })
}

/// `O[j][i] = |Σ_n v_j(n)* c_{n,i}|²` with `α(0) = v_j`, for every level `j`.
pub fn overlap_matrix(es: &EigenSystem, set: &PoleSet) -> Result<DMatrix<f64>> {
    let n = es.len();
    if set.sites() != n {
        return Err(Error::domain("eigensystem and pole set sizes differ"));
    }
    let levels: Vec<usize> = (0..n).collect();
    let rows = parallel::map(&levels, |&j| -> Result<Vec<f64>> {
        let d = residues(set, &es.state(j))?;
        Ok(d.projections().iter().map(|p| p.norm_sqr()).collect())
    });
    let mut o = DMatrix::<f64>::zeros(n, set.len());
    for (j, row) in rows.into_iter().enumerate() {
        for (i, v) in row?.into_iter().enumerate() {
            o[(j, i)] = v;
        }
    }
    Ok(o)
}

/// Convenience: Hamiltonian and bath straight to poles.
pub fn poles_for(h: &HamiltonianMatrix, params: &SpectralDensityParams) -> Result<PoleSet> {
    find_poles(&build_augmented(h, params)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{alternating_odd_state, build_hamiltonian, ModelSpec};

    fn table1(kappa: usize) -> (HamiltonianMatrix, SpectralDensityParams) {
        (
            build_hamiltonian(&ModelSpec::mosaic(kappa, 12, 2.0, 0.0)).unwrap(),
            SpectralDensityParams::new(0.1, 1.0).unwrap(),
        )
    }

    /// Trapezoid on `ω = ω_c tan θ`, principal-value free because Im z ≠ 0.
    fn quadrature_self_energy(z: Complex64, p: &SpectralDensityParams) -> Complex64 {
        let m = 200_000;
        let h = std::f64::consts::PI / m as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 1..m {
            let theta = -std::f64::consts::FRAC_PI_2 + k as f64 * h;
            let w = p.omega_c * theta.tan();
            let jac = p.omega_c / theta.cos().powi(2);
            acc += p.spectral_density(w) * jac / (z - w);
        }
        acc * h
    }

    #[test]
    fn self_energy_examples() {
        let p = SpectralDensityParams::new(0.1, 1.0).unwrap();
        let s0 = self_energy(Complex64::new(0.0, 0.0), &p).unwrap();
        assert!((s0 - Complex64::new(0.0, -0.1 * std::f64::consts::PI)).norm() < 1e-15);
        let far = self_energy(Complex64::new(1e8, 0.0), &p).unwrap();
        assert!((far * 1e8 - Complex64::new(p.weight(), 0.0)).norm() < 1e-6);
        for &e in &[-5.0, -1.0, 0.0, 0.3, 2.0, 40.0] {
            assert!(self_energy(Complex64::new(e, 0.0), &p).unwrap().im < 0.0);
        }
        assert!(self_energy(Complex64::new(0.0, -1.0), &p).is_err());
    }

    #[test]
    fn self_energy_matches_quadrature_in_upper_half_plane() {
        let p = SpectralDensityParams::new(0.1, 1.0).unwrap();
        for z in [
            Complex64::new(0.0, 0.05),
            Complex64::new(1.5, 0.2),
            Complex64::new(-2.0, 1.0),
        ] {
            let q = quadrature_self_energy(z, &p);
            let s = self_energy(z, &p).unwrap();
            assert!((q - s).norm() < 1e-6, "z={z}: {q} vs {s}");
        }
    }

    #[test]
    fn augmented_block_structure() {
        let (h, p) = table1(2);
        let a = build_augmented(&h, &p).unwrap();
        let g = (std::f64::consts::PI * 0.1f64).sqrt();
        assert_eq!(a.matrix, a.matrix.transpose());
        assert_eq!(a.matrix[(12, 12)], Complex64::new(0.0, -1.0));
        for i in 0..12 {
            assert_eq!(a.matrix[(i, 12)], Complex64::new(g, 0.0));
            for j in 0..12 {
                assert_eq!(a.matrix[(i, j)].re, h.matrix()[(i, j)]);
            }
        }
    }

    #[test]
    fn single_site_quadratic() {
        let h = HamiltonianMatrix::from_matrix(DMatrix::zeros(1, 1)).unwrap();
        let p = SpectralDensityParams::new(0.1, 1.0).unwrap();
        let set = poles_for(&h, &p).unwrap();
        // z² + iω_c z − πηω_c = 0
        let disc = (Complex64::new(-1.0, 0.0) + 4.0 * p.weight()).sqrt();
        let r1 = (-I + disc) / 2.0;
        let r2 = (-I - disc) / 2.0;
        for r in [r1, r2] {
            assert!(r.im < 0.0);
            assert!(set.values().iter().any(|z| (z - r).norm() < 1e-12), "{r}");
        }
    }

    #[test]
    fn decoupled_limit() {
        let (h, _) = table1(2);
        let p = SpectralDensityParams::new(0.0, 1.0).unwrap();
        let set = poles_for(&h, &p).unwrap();
        let es = eigendecompose(&h).unwrap();
        let mut want: Vec<Complex64> = es
            .eigenvalues
            .iter()
            .map(|&e| Complex64::new(e, 0.0))
            .collect();
        want.push(Complex64::new(0.0, -1.0));
        for w in want {
            assert!(set.values().iter().any(|z| (z - w).norm() < 1e-10), "{w}");
        }
        let d = residues(&set, &es.state(4)).unwrap();
        for i in 0..set.len() {
            let col_norm: f64 = d.residues.column(i).iter().map(|c| c.norm()).sum();
            if (set.poles[i].z.re - es.eigenvalues[4]).abs() < 1e-12 && set.poles[i].z.im == 0.0 {
                for r in 0..12 {
                    assert!((d.residues[(r, i)].re - es.eigenvectors[(r, 4)]).abs() < 1e-12);
                }
            } else {
                assert!(col_norm < 1e-12);
            }
        }
    }

    #[test]
    fn table1_k2_headline_poles() {
        let (h, p) = table1(2);
        let set = poles_for(&h, &p).unwrap();
        assert_eq!(set.len(), 13);
        assert!(set.poles[5].z.norm() < 1e-9);
        assert!(set.poles[5].steady && set.poles[5].decoupled);
        assert_eq!(set.steady_count(), 1);
        let broad: Vec<_> = set.poles.iter().filter(|q| q.z.im < -0.5).collect();
        assert_eq!(broad.len(), 1);
        assert!((broad[0].z - Complex64::new(-1.13266, -0.608806)).norm() < 1e-5);
        assert!(broad[0].pseudomode);
    }

    #[test]
    fn table1_k3_steady_pair() {
        let (h, p) = table1(3);
        let set = poles_for(&h, &p).unwrap();
        let steady: Vec<_> = set.poles.iter().filter(|q| q.steady).collect();
        assert_eq!(steady.len(), 2);
        assert!((steady[0].z.re - 1.0).abs() < 1e-9 && steady[0].z.im.abs() < 1e-12);
        assert!((steady[1].z.re + 1.0).abs() < 1e-9 && steady[1].z.im.abs() < 1e-12);
    }

    #[test]
    fn polynomial_route_agrees() {
        for kappa in [1, 2, 3] {
            let (h, p) = table1(kappa);
            let eig: Vec<Complex64> = poles_for(&h, &p).unwrap().values();
            let poly_route = find_poles_polynomial(&h, &p).unwrap();
            for (a, b) in eig.iter().zip(&poly_route) {
                assert!((a - b).norm() < 1e-8, "kappa={kappa}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn completeness_and_steady_residue() {
        let (h, p) = table1(2);
        let es = eigendecompose(&h).unwrap();
        let set = poles_for(&h, &p).unwrap();
        for j in 0..12 {
            let d = residues(&set, &es.state(j)).unwrap();
            assert!(d.completeness_error() < 1e-10);
        }
        let alt = alternating_odd_state(12)
            .unwrap()
            .map(|x| Complex64::new(x, 0.0));
        let d = residues(&set, &alt).unwrap();
        let weights: Vec<f64> = d.projections().iter().map(|c| c.norm()).collect();
        let best = weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!(set.poles[best].steady);
        for t in [0.0, 3.3, 17.0, 50.0] {
            let a = d.amplitudes_at(t);
            assert!((a.norm_squared() - 1.0).abs() < 1e-8);
            for r in 0..12 {
                assert!((a[r].norm() - alt[r].norm()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn reconstruction_at_zero_is_initial_state() {
        let (h, p) = table1(3);
        let es = eigendecompose(&h).unwrap();
        let set = poles_for(&h, &p).unwrap();
        let d = residues(&set, &es.state(0)).unwrap();
        assert!((reconstruct_amplitudes(&d, 0.0) - &d.alpha0).camax() < 1e-10);
    }

    #[test]
    fn residues_reject_bad_input() {
        let (h, p) = table1(2);
        let set = poles_for(&h, &p).unwrap();
        let short = DVector::from_element(5, Complex64::new(1.0, 0.0));
        assert!(residues(&set, &short).is_err());
        let unnormalized = DVector::from_element(12, Complex64::new(1.0, 0.0));
        assert!(residues(&set, &unnormalized).is_err());
    }

    #[test]
    fn overlap_examples() {
        let (h, p) = table1(2);
        let es = eigendecompose(&h).unwrap();
        let set = poles_for(&h, &p).unwrap();
        let o = overlap_matrix(&es, &set).unwrap();
        let j0 = es.nearest_level(0.0);
        let row = o.row(j0);
        let imax = (0..13).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
        assert!(set.poles[imax].steady);

        let p0 = SpectralDensityParams::new(0.0, 1.0).unwrap();
        let set0 = poles_for(&h, &p0).unwrap();
        let o0 = overlap_matrix(&es, &set0).unwrap();
        for j in 0..12 {
            let lvl = (0..13)
                .find(|&i| {
                    (set0.poles[i].z.re - es.eigenvalues[j]).abs() < 1e-12
                        && set0.poles[i].decoupled
                })
                .unwrap();
            for i in 0..13 {
                let want = if i == lvl { 1.0 } else { 0.0 };
                assert!((o0[(j, i)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_ring_levels_decouple() {
        // Clean ring: every cos/sin pair is degenerate; only the uniform
        // level couples, so N − 1 levels stay steady.
        let h = build_hamiltonian(&ModelSpec::aah(8, 0.0, 0.0)).unwrap();
        let p = SpectralDensityParams::new(0.1, 1.0).unwrap();
        let set = poles_for(&h, &p).unwrap();
        assert_eq!(set.len(), 9);
        assert_eq!(set.steady_count(), 7);
        let es = eigendecompose(&h).unwrap();
        let psi = es.state(3);
        let d = residues(&set, &psi).unwrap();
        assert!(d.completeness_error() < 1e-10);
    }

    #[test]
    fn classify_steady_rejects_nonpositive_tol() {
        let (h, p) = table1(2);
        let mut set = poles_for(&h, &p).unwrap();
        assert!(classify_steady(&mut set, 0.0).is_err());
        classify_steady(&mut set, 1e-3).unwrap();
        assert!(set.steady_count() >= 1);
    }

    #[test]
    fn weakly_coupled_levels_resolve_below_ulp() {
        // a level whose coupling is eigenvector roundoff, next to a strongly coupled one
        let h = build_hamiltonian(&ModelSpec::mosaic(
            2,
            4,
            0.750251029917485,
            5.62917589380977,
        ))
        .unwrap();
        let p = SpectralDensityParams::new(0.10914977804025791, 2.6111024974006667).unwrap();
        let set = poles_for(&h, &p).unwrap();
        assert_eq!(set.len(), 5);
        // nearly clean ring: pole offsets from the levels sit below ulp(E)
        let h2 = build_hamiltonian(&ModelSpec::gaah(
            0.8290015267501479,
            10,
            1.6066480361406378e-4,
            1.8332988576132194,
        ))
        .unwrap();
        let set2 = poles_for(&h2, &SpectralDensityParams::new(0.01, 0.3).unwrap()).unwrap();
        for (s, n) in [(&set, 4), (&set2, 10)] {
            for site in 0..n {
                let mut a = DVector::zeros(n);
                a[site] = Complex64::new(1.0, 0.0);
                let d = residues(s, &a).unwrap();
                assert!(d.completeness_error() < 1e-12, "{}", d.completeness_error());
            }
        }
    }
}
