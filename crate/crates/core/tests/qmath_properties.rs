use invlab::qmath::{
    c, expectation, hermitian_eigendecomposition, project_probabilities, r, ComplexMatrix,
    DensityOperator, Observable,
};
use invlab::random::{random_density, random_hermitian, random_observable, random_pure, rng};
use invlab::Error;
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn probabilities_sum_to_one(seed in any::<u64>(), d in 2usize..=4, pure in any::<bool>()) {
        let mut g = rng(seed);
        let obs = random_observable(d, &mut g).unwrap();
        let rho = if pure {
            random_pure(d, &mut g).unwrap().density()
        } else {
            random_density(d, &mut g).unwrap()
        };
        let p = project_probabilities(&rho, &obs).unwrap();
        prop_assert_eq!(p.len(), d);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
    }
}

proptest! {
    #![proptest_config(config(300))]

    #[test]
    fn expectation_is_spectral_average(seed in any::<u64>(), d in 1usize..=5) {
        let mut g = rng(seed);
        let obs = random_observable(d, &mut g).unwrap();
        let rho = random_density(d, &mut g).unwrap();
        let p = project_probabilities(&rho, &obs).unwrap();
        let spectral: f64 = obs.eigenvalues().iter().zip(&p).map(|(l, q)| l * q).sum();
        prop_assert!((expectation(&rho, &obs).unwrap() - spectral).abs() <= 1e-12);
    }

    #[test]
    fn eigendecomposition_recomposes(seed in any::<u64>(), d in 1usize..=6) {
        let h = random_hermitian(d, &mut rng(seed));
        let e = hermitian_eigendecomposition(&h).unwrap();
        prop_assert!(e.recompose().max_abs_diff(&h) <= 1e-12);
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(e.eigenvectors.isometry_deviation() <= 1e-12);
        // Deterministic: a second run is bit-identical.
        prop_assert_eq!(hermitian_eigendecomposition(&h).unwrap(), e.clone());
        // Phase convention: first significant component is real positive.
        for j in 0..d {
            let col = e.eigenvectors.column(j);
            let first = col.iter().find(|z| z.norm() > 1e-9).unwrap();
            prop_assert!(first.im == 0.0 && first.re > 0.0);
        }
    }

    #[test]
    fn observable_from_its_own_basis(seed in any::<u64>(), d in 2usize..=4) {
        let obs = random_observable(d, &mut rng(seed)).unwrap();
        let again = Observable::with_eigenbasis(obs.matrix().clone(), obs.eigenbasis().clone()).unwrap();
        for (a, b) in again.eigenvalues().iter().zip(obs.eigenvalues()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn density_rejects_perturbations(seed in any::<u64>(), d in 2usize..=4, eps in 1e-6f64..1e-2) {
        let rho = random_density(d, &mut rng(seed)).unwrap();
        let m = rho.matrix();

        let mut skew = m.to_row_major();
        skew[1] += c(0.0, eps);
        let err = DensityOperator::new(ComplexMatrix::from_row_major(d, d, skew).unwrap()).unwrap_err();
        prop_assert!(matches!(err, Error::NotHermitian { .. }), "{:?}", err);

        let shifted = m.add(&ComplexMatrix::identity(d).scale(r(eps)));
        let err = DensityOperator::new(shifted).unwrap_err();
        prop_assert!(matches!(err, Error::TraceNotOne { .. }), "{:?}", err);

        // Push the smallest eigenvalue below zero while keeping the trace.
        let e = hermitian_eigendecomposition(m).unwrap();
        let v0 = e.eigenvectors.column(0);
        let vd = e.eigenvectors.column(d - 1);
        let shift = e.eigenvalues[0] + eps;
        let bent = m
            .sub(&ComplexMatrix::outer(&v0, &v0).scale(r(shift)))
            .add(&ComplexMatrix::outer(&vd, &vd).scale(r(shift)));
        let err = DensityOperator::new(bent).unwrap_err();
        prop_assert!(matches!(err, Error::NotPositive { .. }), "{:?}", err);
    }
}
