// SPDX-License-Identifier: Apache-2.0

use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

use mosaic_qme::laplace::{poles_for, residues, SpectralDensityParams};
use mosaic_qme::lattice::{build_hamiltonian, ModelSpec};
use mosaic_qme::localization::{eigendecompose, ipr};

fn spec_strategy() -> impl Strategy<Value = ModelSpec> {
    let mosaic = (1usize..=4, 4usize..=14, 0.0f64..6.0, 0.0f64..6.3)
        .prop_filter("kappa <= n", |(k, n, _, _)| k <= n)
        .prop_map(|(k, n, d, phi)| ModelSpec::mosaic(k, n, d, phi));
    let gaah = (-0.9f64..0.9, 4usize..=14, 0.0f64..6.0, 0.0f64..6.3)
        .prop_map(|(a, n, d, phi)| ModelSpec::gaah(a, n, d, phi));
    prop_oneof![3 => mosaic, 1 => gaah]
}

fn state(parts: &[(f64, f64)]) -> DVector<Complex64> {
    let v = DVector::from_iterator(
        parts.len(),
        parts.iter().map(|&(r, i)| Complex64::new(r, i)),
    );
    let n = v.norm();
    v.map(|c| c / n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hamiltonian_is_symmetric(spec in spec_strategy()) {
        let h = build_hamiltonian(&spec).unwrap();
        prop_assert_eq!(h.matrix().clone(), h.matrix().transpose());
    }

    #[test]
    fn ipr_is_bounded(parts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..40)) {
        prop_assume!(parts.iter().any(|&(r, i)| r.abs() + i.abs() > 1e-3));
        let a = state(&parts);
        let v = ipr(a.as_slice()).unwrap();
        let n = parts.len() as f64;
        prop_assert!(v >= 1.0 / n - 1e-12 && v <= 1.0 + 1e-12);
    }

    #[test]
    fn poles_are_dissipative_and_residues_complete(
        spec in spec_strategy(),
        eta in 0.01f64..0.5,
        omega_c in 0.3f64..3.0,
        seed in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 14),
    ) {
        let h = build_hamiltonian(&spec).unwrap();
        let params = SpectralDensityParams::new(eta, omega_c).unwrap();
        let set = poles_for(&h, &params).unwrap();
        prop_assert_eq!(set.len(), spec.n + 1);
        prop_assert!(set.poles.iter().all(|p| p.z.im <= 1e-10));
        prop_assert_eq!(set.poles.iter().filter(|p| p.pseudomode).count(), 1);
        let parts = &seed[..spec.n];
        prop_assume!(parts.iter().any(|&(r, i)| r.abs() + i.abs() > 1e-3));
        match residues(&set, &state(parts)) {
            Ok(d) => prop_assert!(d.completeness_error() < 1e-9, "{}", d.completeness_error()),
            // a coupled multiple pole is reported, not mis-expanded
            Err(e) => prop_assert!(!set.multiple.is_empty(), "{}", e),
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal(spec in spec_strategy()) {
        let es = eigendecompose(&build_hamiltonian(&spec).unwrap()).unwrap();
        let gram = es.eigenvectors.transpose() * &es.eigenvectors;
        for i in 0..spec.n {
            for j in 0..spec.n {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((gram[(i, j)] - want).abs() < 1e-10);
            }
        }
        prop_assert!(es.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }
}
