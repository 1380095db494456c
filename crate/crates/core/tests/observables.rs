mod common;

use nhresponse::greens::Framework;
use nhresponse::matrix::{c, inner, ComplexMatrix};
use nhresponse::observables::{expectation, nhts_density, occupation, phqm_weights, select_ground_state};
use nhresponse::spectral::{eig_biortho, pseudo_metric, BiorthoSystem, PseudoMetric};
use nhresponse::tachyon::{hamiltonian, TachyonParams};
use nhresponse::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn system_with(eigenvalues: Vec<Complex64>) -> BiorthoSystem {
    eig_biortho(&ComplexMatrix::diagonal(&eigenvalues)).unwrap()
}

#[test]
fn hermitian_two_level_fills_lower_state() {
    let occ = occupation(&ComplexMatrix::sigma_z(), &Framework::standard(1e-6)).unwrap();
    assert!(occ.entries[(0, 0)].norm() < 1e-6);
    assert!((occ.entries[(1, 1)] - 1.0).norm() < 1e-6);
}

#[test]
fn phqm_weights_become_a_step() {
    let h = hamiltonian(0.4, &TachyonParams::new(0.6, 0.0));
    let w = phqm_weights(&h, &Framework::phqm(0.0)).unwrap();
    assert!((w[0] - 1.0).abs() < 1e-6 && w[1].abs() < 1e-6, "{w:?}");
    let b = eig_biortho(&h).unwrap();
    let o = ComplexMatrix::sigma_z();
    let lower = o.sandwich(&b.left_vectors[0], &b.right_vectors[0]);
    assert!((expectation(&o, &h, &Framework::phqm(0.0)).unwrap() - lower).norm() < 1e-6);
}

#[test]
fn standard_occupation_of_tachyon_at_k0() {
    let h = hamiltonian(0.0, &TachyonParams::new(0.6, 1.5));
    let fw = Framework::standard(1.5);
    let occ = occupation(&h, &fw).unwrap();
    assert!(occ.entries.hermiticity_residual() < 1e-10);
    let n = occ.particle_number();
    assert!(n.im.abs() < 1e-12 && (0.0..=2.0).contains(&n.re), "{n}");
    assert!((&occ.entries - &common::occupation_by_quadrature(&h, &fw)).frobenius_norm() < 1e-6);
}

#[test]
fn particle_number_with_one_level_filled() {
    let h = hamiltonian(0.4, &TachyonParams::new(0.6, 0.0));
    let n = expectation(&ComplexMatrix::identity(2), &h, &Framework::phqm(0.0)).unwrap();
    assert!((n - 1.0).norm() < 1e-6);
}

#[test]
fn postselected_expectation_in_tachyonic_phase() {
    let h = hamiltonian(0.0, &TachyonParams::new(1.2, 0.0));
    let b = eig_biortho(&h).unwrap();
    let ground = select_ground_state(&b).unwrap();
    assert!((b.eigenvalues[ground] - c(0.0, 0.44f64.sqrt())).norm() < 1e-12);
    // Right eigenvector (1, −(m + √(m² − Δ²))) by hand.
    let x = 1.2 + 0.44f64.sqrt();
    let expected = (1.0 - x * x) / (1.0 + x * x);
    let v = expectation(&ComplexMatrix::sigma_z(), &h, &Framework::postselected()).unwrap();
    assert!((v - expected).norm() < 1e-12, "{v} vs {expected}");
}

#[test]
fn frameworks_disagree_away_from_hermitian_limit() {
    let h = hamiltonian(0.3, &TachyonParams::new(0.6, 1.5));
    let s = expectation(&ComplexMatrix::sigma_z(), &h, &Framework::standard(1.5)).unwrap();
    let p = expectation(&ComplexMatrix::sigma_z(), &h, &Framework::phqm(1.5)).unwrap();
    assert!((s - p).norm() > 1e-6);
}

#[test]
fn ground_state_selection_rules() {
    assert_eq!(select_ground_state(&system_with(vec![c(-1.0, 0.0), c(1.0, 0.0)])).unwrap(), 0);
    let b = system_with(vec![c(0.2, 0.5), c(0.1, -0.5)]);
    assert!((b.eigenvalues[select_ground_state(&b).unwrap()] - c(0.2, 0.5)).norm() < 1e-15);
    let b = system_with(vec![c(1.0, 0.0), c(-1.0, 0.0)]);
    assert!((b.eigenvalues[select_ground_state(&b).unwrap()] - c(-1.0, 0.0)).norm() < 1e-15);
}

#[test]
fn thermal_state_of_hermitian_input_is_gibbs() {
    let h = ComplexMatrix::sigma_z().scale_real(0.7);
    let rho = nhts_density(&h, &PseudoMetric::identity(2), 1.0).unwrap();
    let z = (0.7f64).exp() + (-0.7f64).exp();
    assert!((rho[(0, 0)].re - (-0.7f64).exp() / z).abs() < 1e-12);
    assert!((rho[(1, 1)].re - (0.7f64).exp() / z).abs() < 1e-12);
}

#[test]
fn thermal_state_of_tachyon() {
    let h = hamiltonian(0.0, &TachyonParams::new(0.6, 1.5));
    let eta = pseudo_metric(&eig_biortho(&h).unwrap()).unwrap();
    let rho = nhts_density(&h, &eta, 2.0).unwrap();
    assert!(rho.hermiticity_residual() < 1e-12);
    assert!(rho.min_hermitian_eigenvalue() > 0.0);
    assert!((rho.trace() - 1.0).norm() < 1e-12);
}

#[test]
fn thermal_state_freezes_into_ground_state() {
    let h = hamiltonian(0.0, &TachyonParams::new(0.6, 1.5));
    let b = eig_biortho(&h).unwrap();
    let eta = pseudo_metric(&b).unwrap();
    let rho = nhts_density(&h, &eta, 50.0 / 1.6).unwrap();
    let r0 = &b.right_vectors[0];
    let target = ComplexMatrix::outer(r0, r0).scale(1.0 / inner(r0, r0));
    assert!((&rho - &target).frobenius_norm() < 1e-6);
}

#[test]
fn thermal_state_needs_real_spectrum() {
    let h = hamiltonian(0.0, &TachyonParams::new(1.2, 1.5));
    let err = nhts_density(&h, &PseudoMetric::identity(2), 1.0).unwrap_err();
    assert!(matches!(err, Error::ComplexSpectrum { .. }), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn standard_occupation_matches_quadrature(seed in any::<u64>(), n in 2usize..=3) {
        let (h, gamma) = common::random_dissipative(&mut common::rng(seed), n);
        let fw = Framework::standard(gamma);
        let occ = occupation(&h, &fw).unwrap();
        prop_assert!((&occ.entries - &common::occupation_by_quadrature(&h, &fw)).frobenius_norm() < 1e-6);
    }

    #[test]
    fn phqm_occupation_matches_quadrature(seed in any::<u64>(), n in 2usize..=3, gamma in 0.05f64..2.0) {
        let h = common::random_pseudo_hermitian(&mut common::rng(seed), n);
        let fw = Framework::phqm(gamma);
        let occ = occupation(&h, &fw).unwrap();
        prop_assert!((&occ.entries - &common::occupation_by_quadrature(&h, &fw)).frobenius_norm() < 1e-6);
    }

    #[test]
    fn expectation_agrees_with_occupation(seed in any::<u64>(), n in 2usize..=3) {
        let mut rng = common::rng(seed);
        let (h, gamma) = common::random_dissipative(&mut rng, n);
        let o = common::random_hermitian(&mut rng, n);
        let fw = Framework::standard(gamma);
        let direct = expectation(&o, &h, &fw).unwrap();
        prop_assert!((direct - occupation(&h, &fw).unwrap().expectation(&o)).norm() < 1e-10);
        // Standard expectation values of Hermitian observables are real.
        prop_assert!(direct.im.abs() < 1e-10);
    }

    #[test]
    fn thermal_state_invariants(seed in any::<u64>(), n in 2usize..=4, beta in 0.1f64..5.0) {
        let h = common::random_pseudo_hermitian(&mut common::rng(seed), n);
        let eta = pseudo_metric(&eig_biortho(&h).unwrap()).unwrap();
        let rho = nhts_density(&h, &eta, beta).unwrap();
        prop_assert!(rho.hermiticity_residual() < 1e-9 * rho.frobenius_norm());
        let stationarity = (&(&h * &rho) - &(&rho * &h.dagger())).frobenius_norm();
        prop_assert!(stationarity < 1e-9 * h.frobenius_norm() * rho.frobenius_norm());
        prop_assert!((rho.trace() - 1.0).norm() < 1e-10);
    }
}
