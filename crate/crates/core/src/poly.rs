// SPDX-License-Identifier: Apache-2.0

//! Dense polynomial helpers: Horner evaluation, products, and all roots via
//! companion-matrix eigenvalues polished with Newton steps.
//!
//! Coefficients are stored lowest degree first: `c[0] + c[1] z + …`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;
const NEWTON_MAX_ITER: usize = 200;

/// Eigenvalues of a general complex square matrix (complex Schur form).
pub fn complex_eigenvalues(m: DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::numerical("matrix has non-finite entries"));
    }
    let schur = nalgebra::Schur::try_new(m, SCHUR_EPS, SCHUR_MAX_ITER).ok_or_else(|| {
        Error::numerical(format!(
            "complex Schur iteration did not converge for a {n}x{n} matrix"
        ))
    })?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// `(p(z), p'(z))` by Horner's rule.
pub fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

pub fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

pub fn scale(a: &[Complex64], s: Complex64) -> Vec<Complex64> {
    a.iter().map(|&x| x * s).collect()
}

/// `Π (z − r_k)`.
pub fn from_roots<I: IntoIterator<Item = Complex64>>(roots: I) -> Vec<Complex64> {
    roots
        .into_iter()
        .fold(vec![Complex64::new(1.0, 0.0)], |acc, r| {
            mul(&acc, &[-r, Complex64::new(1.0, 0.0)])
        })
}

fn trim(coeffs: &[Complex64]) -> &[Complex64] {
    let mut len = coeffs.len();
    while len > 0 && coeffs[len - 1] == Complex64::new(0.0, 0.0) {
        len -= 1;
    }
    &coeffs[..len]
}

/// Newton iteration on `p` from `z0`; stops when the step falls below
/// `1e-15·max(1,|z|)` or stalls.
pub fn newton_polish(coeffs: &[Complex64], z0: Complex64) -> Complex64 {
    let mut z = z0;
    let (mut best, mut best_abs) = (z0, horner(coeffs, z0).0.norm());
    for _ in 0..NEWTON_MAX_ITER {
        let (p, dp) = horner(coeffs, z);
        if p.norm() == 0.0 || dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        z -= step;
        let val = horner(coeffs, z).0.norm();
        if val <= best_abs {
            best = z;
            best_abs = val;
        }
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    best
}

/// All complex roots of the polynomial, with multiplicity.
pub fn roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let c = trim(coeffs);
    if c.is_empty() {
        return Err(Error::domain("zero polynomial has no isolated roots"));
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = c[deg];
    let mut comp = DMatrix::<Complex64>::zeros(deg, deg);
    for k in 0..deg {
        comp[(0, k)] = -c[deg - 1 - k] / lead;
    }
    for k in 1..deg {
        comp[(k, k - 1)] = Complex64::new(1.0, 0.0);
    }
    let seeds = complex_eigenvalues(comp)?;
    Ok(seeds.into_iter().map(|z| newton_polish(c, z)).collect())
}

/// Real roots of a real polynomial: roots with `|Im| < imag_tol` after
/// polishing, merged when closer than `merge_tol`, sorted descending.
pub fn real_roots(coeffs: &[f64], imag_tol: f64, merge_tol: f64) -> Result<Vec<f64>> {
    let c: Vec<Complex64> = coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut reals: Vec<f64> = roots(&c)?
        .into_iter()
        .filter(|z| z.im.abs() < imag_tol)
        .map(|z| z.re)
        .collect();
    reals.sort_by(|a, b| b.total_cmp(a));
    let mut out: Vec<f64> = Vec::with_capacity(reals.len());
    for r in reals {
        match out.last() {
            Some(&last) if (last - r).abs() < merge_tol => {}
            _ => out.push(r),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn quadratic_roots() {
        // z^2 + 1
        let mut r = roots(&[c(1.0), c(0.0), c(1.0)]).unwrap();
        r.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((r[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn roots_round_trip_through_product() {
        let want = [
            Complex64::new(3.0, -0.5),
            Complex64::new(-1.2, 0.0),
            Complex64::new(0.25, 2.0),
            Complex64::new(0.0, -1.0),
        ];
        let p = from_roots(want);
        let mut got = roots(&p).unwrap();
        for w in want {
            let (k, _) = got
                .iter()
                .enumerate()
                .min_by(|a, b| (*a.1 - w).norm().total_cmp(&(*b.1 - w).norm()))
                .unwrap();
            assert!((got[k] - w).norm() < 1e-12, "{:?} vs {:?}", got[k], w);
            got.remove(k);
        }
    }

    #[test]
    fn double_real_root_is_merged() {
        // E^3 - 2E^2 = E^2 (E - 2)
        let r = real_roots(&[0.0, 0.0, -2.0, 1.0], 1e-9, 1e-9).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] - 2.0).abs() < 1e-12);
        assert!(r[1].abs() < 1e-9);
    }

    #[test]
    fn horner_derivative() {
        // 1 + 2z + 3z^2 at z = 2: p = 17, p' = 14
        let (p, dp) = horner(&[c(1.0), c(2.0), c(3.0)], c(2.0));
        assert_eq!(p, c(17.0));
        assert_eq!(dp, c(14.0));
    }

    #[test]
    fn constant_and_zero_polynomials() {
        assert!(roots(&[c(2.0)]).unwrap().is_empty());
        assert!(roots(&[c(0.0), c(0.0)]).is_err());
    }
}
