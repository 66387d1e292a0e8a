use invlab::channels::{random_channel, random_free_channel, KrausChannel, UnitaryGenerator};
use invlab::estimation::{
    closed_form_alpha_family, fisher_information, invasiveness_quantifier, probability_derivatives,
    quantum_fisher_information, DerivativeMode, ParametricScenario,
};
use invlab::qmath::{classical_state, DensityOperator, Observable};
use invlab::random::{
    commuting_hermitian, random_density, random_hermitian, random_observable, random_pure, random_weights, rng,
};
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn random_scenario(seed: u64, d: usize, pure: bool) -> ParametricScenario {
    let mut g = rng(seed);
    let obs = random_observable(d, &mut g).unwrap();
    let rho = if pure {
        random_pure(d, &mut g).unwrap().density()
    } else {
        random_density(d, &mut g).unwrap()
    };
    let a = UnitaryGenerator::new(random_hermitian(d, &mut g)).unwrap();
    let env = 1 + (seed % 3) as usize;
    let phi = random_channel(d, env, seed ^ 0x5eed).unwrap();
    ParametricScenario::new(rho, a, phi, obs, 0.1 + 2.9 * ((seed >> 16) % 1000) as f64 / 1000.0).unwrap()
}

/// Qubit state-vector oracle for input |0⟩, A = cosα σ_x + sinα σ_z, Q = σ_z:
/// `A² = I`, so `U = cos θ I − i sin θ A` and `P(|1⟩) = sin²θ cos²α`.
fn alpha_family_true(theta: f64, alpha: f64) -> f64 {
    let p = (theta.sin() * alpha.cos()).powi(2);
    let dp = 2.0 * theta.sin() * theta.cos() * alpha.cos().powi(2);
    dp * dp / p + dp * dp / (1.0 - p)
}

fn alpha_scenario(theta: f64, alpha: f64) -> ParametricScenario {
    ParametricScenario::new(
        DensityOperator::basis(2, 0).unwrap(),
        UnitaryGenerator::alpha_family(alpha).unwrap(),
        KrausChannel::identity(2).unwrap(),
        Observable::pauli_z(),
        theta,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(config(300))]

    #[test]
    fn classical_fisher_below_quantum(seed in any::<u64>(), d in 2usize..=4, pure in any::<bool>()) {
        let s = random_scenario(seed, d, pure);
        let f = fisher_information(&s, DerivativeMode::Analytic).unwrap().value;
        let fq = quantum_fisher_information(&s).unwrap();
        prop_assert!(f >= 0.0);
        prop_assert!(f <= fq + 1e-8, "F = {f}, F_Q = {fq}");
    }

    #[test]
    fn pure_state_qfi_is_four_variances(seed in any::<u64>(), d in 2usize..=3) {
        // Without a channel, the pure-state QFI is 4 Var(A), independent of θ.
        let mut g = rng(seed);
        let psi = random_pure(d, &mut g).unwrap();
        let h = random_hermitian(d, &mut g);
        let a = UnitaryGenerator::new(h.clone()).unwrap();
        let obs = random_observable(d, &mut g).unwrap();
        let s = ParametricScenario::new(psi.density(), a, KrausChannel::identity(d).unwrap(), obs, 0.4).unwrap();
        let v = psi.amplitudes();
        let hv = h.apply_vec(v);
        let mean: f64 = v.iter().zip(&hv).map(|(x, y)| (x.conj() * y).re).sum();
        let second: f64 = hv.iter().map(|z| z.norm_sqr()).sum();
        let expected = 4.0 * (second - mean * mean);
        prop_assert!((quantum_fisher_information(&s).unwrap() - expected).abs() <= 1e-9 * expected.max(1.0));
        prop_assert!((quantum_fisher_information(&s.with_theta(1.3)).unwrap() - expected).abs() <= 1e-9 * expected.max(1.0));
    }
}

proptest! {
    #![proptest_config(config(100))]

    #[test]
    fn analytic_and_finite_difference_agree(seed in any::<u64>(), d in 2usize..=4) {
        let s = random_scenario(seed, d, false);
        let analytic = probability_derivatives(&s, DerivativeMode::Analytic).unwrap();
        let fd = probability_derivatives(&s, DerivativeMode::finite_difference()).unwrap();
        for (a, b) in analytic.iter().zip(&fd) {
            prop_assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
        prop_assert!(analytic.iter().sum::<f64>().abs() <= 1e-12);
    }

    #[test]
    fn commuting_generator_on_classical_input_is_silent(seed in any::<u64>(), d in 2usize..=4, theta in 0.0f64..3.0) {
        let mut g = rng(seed);
        let obs = random_observable(d, &mut g).unwrap();
        let tau = classical_state(&obs, &random_weights(d, &mut g)).unwrap();
        let a = UnitaryGenerator::new(commuting_hermitian(&obs, &mut g)).unwrap();
        let phi = random_free_channel(&obs, 2, seed).unwrap();
        let s = ParametricScenario::new(tau, a, phi, obs, theta).unwrap();
        prop_assert!(invasiveness_quantifier(&s).unwrap() <= 1e-9);
    }

    #[test]
    fn alpha_family_matches_state_vector_oracle(theta in 0.05f64..1.52, alpha in 0.0f64..1.52) {
        let numeric = invasiveness_quantifier(&alpha_scenario(theta, alpha)).unwrap();
        let oracle = alpha_family_true(theta, alpha);
        prop_assert!((numeric - oracle).abs() <= 1e-9 * oracle.max(1.0), "{numeric} vs {oracle}");
    }
}

#[test]
fn alpha_family_is_nonincreasing_in_alpha() {
    for i in 0..21 {
        let theta = 0.05 + (FRAC_PI_2 - 0.1) * i as f64 / 20.0;
        let values: Vec<f64> = (0..=40)
            .map(|k| invasiveness_quantifier(&alpha_scenario(theta, FRAC_PI_2 * k as f64 / 40.0)).unwrap())
            .collect();
        for w in values.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "theta = {theta}: {w:?}");
        }
        assert!((values[0] - 4.0).abs() < 1e-9);
        assert!(values[40].abs() < 1e-9);
    }
}

#[test]
fn closed_form_matches_numeric_on_symmetric_diagonal() {
    // The closed form and the scenario coincide where sin²θ = cos²θ.
    for k in 0..=20 {
        let alpha = 0.05 + 1.4 * k as f64 / 20.0;
        let theta = std::f64::consts::FRAC_PI_4;
        let numeric = invasiveness_quantifier(&alpha_scenario(theta, alpha)).unwrap();
        assert!((numeric - closed_form_alpha_family(theta, alpha).unwrap()).abs() < 1e-9);
    }
}
