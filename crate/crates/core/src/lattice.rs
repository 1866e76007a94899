// SPDX-License-Identifier: Apache-2.0

//! Closed-system tight-binding Hamiltonians on a ring.
//!
//! Three quasiperiodic families share the hopping ring and differ only in
//! the on-site potential:
//!
//! * mosaic: `Δ cos(2πβn + φ)` on every κ-th site, zero elsewhere;
//! * GAAH: `Δ cos(2πβn + φ) / (1 − a cos(2πβn + φ))` on every site;
//! * AAH: the common special case (κ = 1, a = 0).
//!
//! Sites are labelled `1..=N` at every public interface.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(√5 − 1)/2`, the inverse golden ratio.
pub fn golden_beta() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// Fibonacci approximant `F_{m−1}/F_m` of [`golden_beta`], with `F_1 = F_2 = 1`.
pub fn fibonacci_beta(m: u32) -> Result<f64> {
    if m < 2 {
        return Err(Error::domain("fibonacci approximant needs m >= 2"));
    }
    let (mut prev, mut cur) = (1u64, 1u64);
    for _ in 2..m {
        let next = prev
            .checked_add(cur)
            .ok_or_else(|| Error::domain("fibonacci index overflows u64"))?;
        prev = cur;
        cur = next;
    }
    Ok(prev as f64 / cur as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    /// Potential on sites `n = jκ` only.
    Mosaic {
        kappa: usize,
    },
    /// Generalized Aubry-André-Harper with shape parameter `a ∈ (−1, 1)`.
    Gaah {
        a: f64,
    },
    Aah,
}

/// A fully specified lattice instance (always periodic boundary conditions).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n: usize,
    pub delta: f64,
    pub phi: f64,
    pub lambda: f64,
    pub beta: f64,
}

impl ModelSpec {
    pub fn mosaic(kappa: usize, n: usize, delta: f64, phi: f64) -> Self {
        Self::new(ModelKind::Mosaic { kappa }, n, delta, phi)
    }

    pub fn gaah(a: f64, n: usize, delta: f64, phi: f64) -> Self {
        Self::new(ModelKind::Gaah { a }, n, delta, phi)
    }

    pub fn aah(n: usize, delta: f64, phi: f64) -> Self {
        Self::new(ModelKind::Aah, n, delta, phi)
    }

    /// Unit hopping and the irrational golden β.
    pub fn new(kind: ModelKind, n: usize, delta: f64, phi: f64) -> Self {
        ModelSpec {
            kind,
            n,
            delta,
            phi,
            lambda: 1.0,
            beta: golden_beta(),
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::domain(format!(
                "lattice needs N >= 2, got {}",
                self.n
            )));
        }
        for (name, v) in [
            ("delta", self.delta),
            ("phi", self.phi),
            ("lambda", self.lambda),
            ("beta", self.beta),
        ] {
            if !v.is_finite() {
                return Err(Error::domain(format!("{name} must be finite, got {v}")));
            }
        }
        match self.kind {
            ModelKind::Mosaic { kappa } => {
                if kappa < 1 || kappa > self.n {
                    return Err(Error::domain(format!(
                        "mosaic kappa must lie in 1..={}, got {kappa}",
                        self.n
                    )));
                }
            }
            ModelKind::Gaah { a } => {
                if !(a.abs() < 1.0) {
                    return Err(Error::domain(format!("GAAH requires |a| < 1, got {a}")));
                }
            }
            ModelKind::Aah => {}
        }
        Ok(())
    }
}

/// On-site energy of site `n` (1-based).
pub fn onsite_potential(spec: &ModelSpec, n: usize) -> Result<f64> {
    spec.validate()?;
    if n == 0 || n > spec.n {
        return Err(Error::Index {
            index: n,
            len: spec.n,
        });
    }
    Ok(potential_unchecked(spec, n))
}

fn potential_unchecked(spec: &ModelSpec, n: usize) -> f64 {
    let x = std::f64::consts::TAU * spec.beta * n as f64 + spec.phi;
    match spec.kind {
        ModelKind::Mosaic { kappa } if !n.is_multiple_of(kappa) => 0.0,
        ModelKind::Mosaic { .. } | ModelKind::Aah => spec.delta * x.cos(),
        ModelKind::Gaah { a } => {
            let c = x.cos();
            spec.delta * c / (1.0 - a * c)
        }
    }
}

/// Real symmetric lattice Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    entries: DMatrix<f64>,
    spec: Option<ModelSpec>,
}

impl HamiltonianMatrix {
    /// Wraps an arbitrary real symmetric matrix (e.g. a single site or a test fixture).
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || !entries.is_square() {
            return Err(Error::domain(
                "Hamiltonian must be a non-empty square matrix",
            ));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("Hamiltonian has non-finite entries"));
        }
        for i in 0..entries.nrows() {
            for j in 0..i {
                if entries[(i, j)] != entries[(j, i)] {
                    return Err(Error::domain(format!(
                        "Hamiltonian not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(HamiltonianMatrix {
            entries,
            spec: None,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn spec(&self) -> Option<&ModelSpec> {
        self.spec.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Diagonal as a vector (site `n` at index `n − 1`).
    pub fn diagonal(&self) -> DVector<f64> {
        self.entries.diagonal()
    }
}

/// Ring Hamiltonian for `spec`.
///
/// For `N = 2` the nearest-neighbour bond and the periodic closure name the
/// same pair; the entry is set to `λ` once rather than doubled.
pub fn build_hamiltonian(spec: &ModelSpec) -> Result<HamiltonianMatrix> {
    spec.validate()?;
    let n = spec.n;
    let mut h = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = potential_unchecked(spec, i + 1);
        let j = (i + 1) % n;
        h[(i, j)] = spec.lambda;
        h[(j, i)] = spec.lambda;
    }
    Ok(HamiltonianMatrix {
        entries: h,
        spec: Some(*spec),
    })
}

/// Normalized 2-periodic state supported on odd sites with alternating sign,
/// `(1, 0, −1, 0, 1, …)/√(N/2)`. Requires `N ≡ 0 (mod 4)` to close on the ring.
pub fn alternating_odd_state(n: usize) -> Result<DVector<f64>> {
    if n == 0 || !n.is_multiple_of(4) {
        return Err(Error::domain(format!(
            "alternating odd-site state needs N divisible by 4, got {n}"
        )));
    }
    let norm = ((n / 2) as f64).sqrt();
    Ok(DVector::from_fn(n, |i, _| match i % 4 {
        0 => 1.0 / norm,
        2 => -1.0 / norm,
        _ => 0.0,
    }))
}

/// The two 3-periodic states living on sites `n ≢ 0 (mod 3)`: pattern
/// `(+1, +1, 0, −1, −1, 0)` (eigenvalue `+λ`) and `(+1, −1, 0, +1, −1, 0)`
/// (eigenvalue `−λ`), each normalized. Requires `N ≡ 0 (mod 6)`.
pub fn three_periodic_states(n: usize) -> Result<(DVector<f64>, DVector<f64>)> {
    if n == 0 || !n.is_multiple_of(6) {
        return Err(Error::domain(format!(
            "3-periodic states need N divisible by 6, got {n}"
        )));
    }
    let norm = ((2 * n / 3) as f64).sqrt();
    const PLUS: [f64; 6] = [1.0, 1.0, 0.0, -1.0, -1.0, 0.0];
    const MINUS: [f64; 6] = [1.0, -1.0, 0.0, 1.0, -1.0, 0.0];
    Ok((
        DVector::from_fn(n, |i, _| PLUS[i % 6] / norm),
        DVector::from_fn(n, |i, _| MINUS[i % 6] / norm),
    ))
}
