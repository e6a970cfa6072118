//! Cross-module invariants over the canonical fixtures.

use bresse_core::evolve::{EnergyTrace, TraceSample};
use bresse_core::fem::{apply_generator, assemble, dissipation_rate, energy, DiscreteOperator, StateVector};
use bresse_core::fitting::fit_decay;
use bresse_core::fixtures::{damped_corpus, table_row, undamped, viscous_local};
use bresse_core::par::Execution;
use bresse_core::spectral::{classify_decay, resolvent_envelope, resolvent_norm};
use bresse_core::table::TABLE_SAMPLES;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn asymmetry(a: &DMatrix<f64>) -> f64 {
    (a - a.transpose()).amax() / a.amax().max(f64::MIN_POSITIVE)
}

fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    a.clone().symmetric_eigenvalues().min()
}

#[test]
fn assembled_forms_are_symmetric_and_semidefinite() {
    let mut corpus = damped_corpus(20);
    corpus.push(("undamped".into(), undamped(20)));
    for (name, cfg) in corpus {
        let op = assemble(&cfg).unwrap();
        let m = op.mass.to_dense();
        let k = op.stiffness.to_dense();
        let c = op.damping.to_dense();
        for (what, a) in [("M", &m), ("K", &k), ("C", &c)] {
            assert!(asymmetry(a) <= 1e-13, "{name}: {what} asymmetric");
        }
        assert!(m.clone().cholesky().is_some(), "{name}: M not positive definite");
        assert!(k.clone().cholesky().is_some(), "{name}: K not positive definite");
        assert!(min_eigenvalue(&c) >= -1e-12 * c.amax().max(1.0), "{name}: C indefinite");
    }
}

#[test]
fn resolvent_norm_is_even_in_lambda() {
    let op = assemble(&table_row(3, 30).config).unwrap();
    for lambda in [0.4, 2.5, 9.0] {
        let a = resolvent_norm(&op, lambda).unwrap().norm;
        let b = resolvent_norm(&op, -lambda).unwrap().norm;
        assert!((a - b).abs() <= 1e-8 * a, "λ={lambda}: {a} vs {b}");
    }
}

fn random_state(op: &DiscreteOperator, coeffs: &[f64]) -> StateVector {
    let n = op.dim();
    let pick = |k: usize| coeffs[k % coeffs.len()] * (1.0 + (k / coeffs.len()) as f64).sin();
    StateVector {
        u: (0..n).map(pick).collect(),
        v: (n..2 * n).map(pick).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generator_dissipates_exactly_the_damping_form(
        coeffs in prop::collection::vec(-1.0f64..1.0, 7),
        row in 1usize..=4,
    ) {
        let op = assemble(&table_row(row, 16).config).unwrap();
        let s = random_state(&op, &coeffs);
        prop_assume!(!s.is_zero());
        let growth = op.gram_inner(&apply_generator(&op, &s).unwrap(), &s);
        let d = dissipation_rate(&op, &s).unwrap();
        let scale = op.gram_inner(&s, &s);
        prop_assert!(growth <= 1e-12 * scale);
        prop_assert!((growth + d).abs() <= 1e-10 * scale);
    }

    #[test]
    fn energy_is_quadratic(coeffs in prop::collection::vec(-1.0f64..1.0, 5), alpha in -8.0f64..8.0) {
        let op = assemble(&table_row(2, 12).config).unwrap();
        let s = random_state(&op, &coeffs);
        let e = energy(&op, &s).unwrap();
        let scaled = energy(&op, &s.scaled(alpha)).unwrap();
        prop_assert!((scaled - alpha * alpha * e).abs() <= 1e-12 * (1.0 + alpha * alpha) * e.max(1e-300));
    }

    #[test]
    fn decay_fit_ignores_amplitude(rate in 0.05f64..2.0, amplitude in 1e-6f64..1e6) {
        let trace = |a: f64| EnergyTrace {
            samples: (0..200)
                .map(|k| {
                    let t = 0.1 * k as f64;
                    TraceSample { t, energy: a * (-rate * t).exp(), dissipation: a * rate * (-rate * t).exp() }
                })
                .collect(),
            dt: 0.1,
            scheme: "synthetic",
            scenario_hash: String::new(),
            max_balance_residual: 0.0,
            max_energy_increase: 0.0,
        };
        let base = fit_decay(&trace(1.0), 0.6).unwrap();
        let scaled = fit_decay(&trace(amplitude), 0.6).unwrap();
        prop_assert_eq!(base.model.label(), scaled.model.label());
        prop_assert!((base.model.rate() - scaled.model.rate()).abs() <= 1e-9 * rate);
    }
}

#[test]
fn viscous_local_damping_sweeps_flat() {
    let cfg = viscous_local(100);
    let op = assemble(&cfg).unwrap();
    let cap = cfg.resolved_frequency_cap();
    let sweep = resolvent_envelope(&op, cap / 100.0, cap, TABLE_SAMPLES, Execution::Parallel).unwrap();
    let c = classify_decay(&sweep).unwrap();
    assert!(c.slope.abs() <= 0.3, "viscous slope {}", c.slope);
}

/// Slopes on a fixed band, set by the coarsest mesh, must not fall as the
/// mesh is refined beyond fit noise.
#[test]
fn polynomial_rows_do_not_lose_growth_under_refinement() {
    let meshes = [50, 100, 200];
    let cap = table_row(4, meshes[0]).config.resolved_frequency_cap();
    for row in [3, 4] {
        let slopes: Vec<f64> = meshes
            .iter()
            .map(|&n| {
                let op = assemble(&table_row(row, n).config).unwrap();
                let sweep = resolvent_envelope(&op, cap / 100.0, cap, TABLE_SAMPLES, Execution::Parallel).unwrap();
                classify_decay(&sweep).unwrap().slope
            })
            .collect();
        for w in slopes.windows(2) {
            assert!(w[1] >= w[0] - 0.2, "row {row}: slopes {slopes:?}");
        }
    }
}
