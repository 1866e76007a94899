// SPDX-License-Identifier: Apache-2.0

//! Time-domain integration of the memory-kernel equation
//!
//! ```text
//! dα_n/dt = −i (Hα)_n − ∫_0^t f(t − τ) Σ_m α_m(τ) dτ,   f(τ) = πηω_c e^{−ω_c τ},
//! ```
//!
//! two independent ways: a trapezoid/Heun Volterra scheme that keeps the
//! full history, and RK4 on the equivalent local `(N+1)`-dimensional system
//! obtained by carrying the convolution as one auxiliary amplitude.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laplace::{build_augmented, PoleDecomposition, SpectralDensityParams};
use crate::lattice::HamiltonianMatrix;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Volterra,
    AuxiliaryOde,
    ResidueReconstruction,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Volterra => "volterra",
            Method::AuxiliaryOde => "auxiliary_ode",
            Method::ResidueReconstruction => "residue_reconstruction",
        }
    }
}

/// Horizon `T`, step `h`, and storage decimation (keep every k-th step).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationOptions {
    pub horizon: f64,
    pub step: f64,
    pub decimation: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            horizon: 50.0,
            step: 1e-3,
            decimation: 10,
        }
    }
}

impl IntegrationOptions {
    pub fn new(horizon: f64, step: f64, decimation: usize) -> Self {
        IntegrationOptions {
            horizon,
            step,
            decimation,
        }
    }

    /// Number of full-resolution steps.
    pub fn steps(&self) -> Result<usize> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::domain(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(Error::domain(format!(
                "horizon must be finite and >= 0, got {}",
                self.horizon
            )));
        }
        if self.decimation == 0 {
            return Err(Error::domain("decimation must be >= 1"));
        }
        let ratio = self.horizon / self.step;
        if ratio > MAX_STEPS as f64 {
            return Err(Error::domain(format!(
                "T/h = {ratio:.0} exceeds the {MAX_STEPS} step guard"
            )));
        }
        Ok(ratio.round() as usize)
    }

    /// Full-resolution step indices that are stored (always includes the last).
    fn stored(&self, k: usize, steps: usize) -> bool {
        k.is_multiple_of(self.decimation) || k == steps
    }
}

/// Amplitudes `α(t)` on a uniform grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub amplitudes: Vec<DVector<Complex64>>,
    pub method: Method,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sites(&self) -> usize {
        self.amplitudes.first().map_or(0, |a| a.len())
    }

    /// `Σ_n |α_n(t_k)|²`.
    pub fn norm_at(&self, k: usize) -> f64 {
        self.amplitudes[k].norm_squared()
    }

    /// `max_k max_n |α_n − β_n|` over a shared grid.
    pub fn max_abs_diff(&self, other: &Trajectory) -> Result<f64> {
        if self.times.len() != other.times.len()
            || self
                .times
                .iter()
                .zip(&other.times)
                .any(|(a, b)| (a - b).abs() > 1e-9 * a.abs().max(1.0))
        {
            return Err(Error::domain("trajectories are on different time grids"));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).iter().map(|c| c.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max))
    }
}

/// `f(τ) = πηω_c e^{−ω_c τ}`, the Fourier transform of the full-line Lorentzian.
pub fn memory_kernel(tau: f64, params: &SpectralDensityParams) -> Result<f64> {
    params.validate()?;
    if !(tau >= 0.0) {
        return Err(Error::domain(format!(
            "memory kernel is causal; tau = {tau} < 0"
        )));
    }
    Ok(params.weight() * (-params.omega_c * tau).exp())
}

fn check_initial(h: &HamiltonianMatrix, alpha0: &DVector<Complex64>) -> Result<()> {
    if alpha0.len() != h.dim() {
        return Err(Error::domain(format!(
            "initial state has {} components, lattice has {}",
            alpha0.len(),
            h.dim()
        )));
    }
    let norm = alpha0.norm_squared();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!(
            "initial state must be normalized, |alpha0|^2 = {norm}"
        )));
    }
    Ok(())
}

fn stability_check(h: &HamiltonianMatrix, params: &SpectralDensityParams, step: f64) {
    let m = h.matrix();
    let row_sum = (0..m.nrows())
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let bound = row_sum + params.coupling() * (m.nrows() as f64).sqrt() + params.omega_c;
    if step * row_sum > 0.5 {
        log::warn!(
            "step h = {step} with |H| ~ {row_sum:.3} gives h|H| > 0.5; results may be inaccurate"
        );
    } else if step * bound > 2.0 {
        log::warn!("step h = {step} is large against the augmented spectral bound {bound:.3}");
    }
}

fn nan_guard(state: &DVector<Complex64>, k: usize, t: f64, method: Method) -> Result<()> {
    if state.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::numerical(format!(
            "{} integration produced non-finite amplitudes at step {k} (t = {t})",
            method.tag()
        )));
    }
    Ok(())
}

fn complexify(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Heun predictor-corrector with trapezoidal convolution: `O(h²)` accurate,
/// `O((T/h)²)` work.
pub fn integrate_volterra(
    h: &HamiltonianMatrix,
    params: &SpectralDensityParams,
    alpha0: &DVector<Complex64>,
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    params.validate()?;
    check_initial(h, alpha0)?;
    let steps = opts.steps()?;
    let dt = opts.step;
    stability_check(h, params, dt);

    let hc = complexify(h.matrix());
    let kernel: Vec<f64> = (0..=steps + 1)
        .map(|k| params.weight() * (-params.omega_c * k as f64 * dt).exp())
        .collect();
    let rhs = |a: &DVector<Complex64>, conv: Complex64| -> DVector<Complex64> {
        let mut r = &hc * a * (-I);
        r.add_scalar_mut(-conv);
        r
    };

    let mut sums: Vec<Complex64> = Vec::with_capacity(steps + 1);
    let mut alpha = alpha0.clone();
    sums.push(alpha.sum());
    let mut conv = Complex64::new(0.0, 0.0);

    let mut times = vec![0.0];
    let mut amplitudes = vec![alpha.clone()];

    for k in 0..steps {
        let r0 = rhs(&alpha, conv);
        let predicted = &alpha + &r0 * re(dt);
        // h [ f_{k+1} S_0 / 2 + Σ_{j=1..k} f_{k+1−j} S_j ]
        let history: Complex64 = sums[1..=k]
            .iter()
            .zip(kernel[1..=k].iter().rev())
            .map(|(s, f)| s * f)
            .sum();
        let partial = (sums[0] * (0.5 * kernel[k + 1]) + history) * dt;
        let conv_pred = partial + predicted.sum() * (0.5 * dt * kernel[0]);
        let r1 = rhs(&predicted, conv_pred);
        alpha += (r0 + r1) * re(0.5 * dt);

        let s = alpha.sum();
        sums.push(s);
        conv = partial + s * (0.5 * dt * kernel[0]);

        let t = (k + 1) as f64 * dt;
        if opts.stored(k + 1, steps) {
            nan_guard(&alpha, k + 1, t, Method::Volterra)?;
            times.push(t);
            amplitudes.push(alpha.clone());
        }
    }
    Ok(Trajectory {
        times,
        amplitudes,
        method: Method::Volterra,
    })
}

/// Classic RK4 on `i d/dt [α; b] = A [α; b]` with the augmented generator
/// `A`, `b(0) = 0`. `O(h⁴)` accurate.
pub fn integrate_auxiliary(
    h: &HamiltonianMatrix,
    params: &SpectralDensityParams,
    alpha0: &DVector<Complex64>,
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    check_initial(h, alpha0)?;
    let steps = opts.steps()?;
    let dt = opts.step;
    stability_check(h, params, dt);

    let n = h.dim();
    let gen = build_augmented(h, params)?.matrix * (-I);
    let mut y = DVector::<Complex64>::zeros(n + 1);
    y.rows_mut(0, n).copy_from(alpha0);

    let mut times = vec![0.0];
    let mut amplitudes = vec![alpha0.clone()];
    for k in 0..steps {
        let k1 = &gen * &y;
        let k2 = &gen * (&y + &k1 * re(0.5 * dt));
        let k3 = &gen * (&y + &k2 * re(0.5 * dt));
        let k4 = &gen * (&y + &k3 * re(dt));
        y += (k1 + (k2 + k3) * re(2.0) + k4) * re(dt / 6.0);

        let t = (k + 1) as f64 * dt;
        if opts.stored(k + 1, steps) {
            let alpha = y.rows(0, n).into_owned();
            nan_guard(&alpha, k + 1, t, Method::AuxiliaryOde)?;
            times.push(t);
            amplitudes.push(alpha);
        }
    }
    Ok(Trajectory {
        times,
        amplitudes,
        method: Method::AuxiliaryOde,
    })
}

/// Evaluates the residue sum on the same stored grid the integrators use.
pub fn sample_reconstruction(
    decomp: &PoleDecomposition,
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    let steps = opts.steps()?;
    let (times, amplitudes) = (0..=steps)
        .filter(|&k| opts.stored(k, steps))
        .map(|k| {
            let t = k as f64 * opts.step;
            (t, decomp.amplitudes_at(t))
        })
        .unzip();
    Ok(Trajectory {
        times,
        amplitudes,
        method: Method::ResidueReconstruction,
    })
}
