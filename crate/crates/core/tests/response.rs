mod common;

use std::f64::consts::PI;

use nhresponse::greens::{Framework, FrameworkKind};
use nhresponse::matrix::{c, ComplexMatrix};
use nhresponse::response::{
    chi_local, chi_phqm_clean, integrate, kramers_kronig, optical_sum, sigma_dc, sigma_optical, ClosureModel, Domain,
    QuadratureSpec,
};
use nhresponse::spectral::eig_biortho;
use nhresponse::tachyon::{
    current_j, hamiltonian, osr_closed, sigma_dc_closed, DcFormula, OsrForm, TachyonCurrent, TachyonModel,
    TachyonParams,
};
use nhresponse::Error;
use num_complex::Complex64;

fn spec() -> QuadratureSpec {
    QuadratureSpec { rel_tol: 1e-7, ..Default::default() }
}

fn model(m: f64, gamma: f64, current: TachyonCurrent) -> (TachyonModel, TachyonParams) {
    let p = TachyonParams::new(m, gamma);
    (TachyonModel::new(p, current), p)
}

#[test]
fn quadrature_reference_integrals() {
    let q = QuadratureSpec { rel_tol: 1e-12, abs_tol: 1e-14, ..Default::default() };
    let r = integrate(|x| c(1.0 / (1.0 + x * x), 0.0), Domain::RealLine(0.0), &[], &q).unwrap();
    assert!((r.value.re - PI).abs() < 1e-10);
    let r = integrate(|x| c(1.0 / (1.0 + x * x).powi(2), 0.0), Domain::RealLine(0.0), &[], &q).unwrap();
    assert!((r.value.re - PI / 2.0).abs() < 1e-10);
    let err = integrate(|x| c(x, 0.0), Domain::UpperHalfLine(0.0), &[], &q).unwrap_err();
    assert!(matches!(err, Error::NonConvergent(_)), "{err}");
}

#[test]
fn dc_conductivity_examples() {
    let (standard, p) = model(0.0, 1.5, TachyonCurrent::J);
    let v = sigma_dc(&standard, &p.framework(FrameworkKind::Standard), 0.0, &spec()).unwrap().value.re;
    assert!((v - 2.25 / 3.25f64.powf(1.5)).abs() < 1e-4 * v);
    assert!((v - 0.38402).abs() < 1e-5);

    let (m09, p) = model(0.9, 1.5, TachyonCurrent::J);
    let v = sigma_dc(&m09, &p.framework(FrameworkKind::Standard), 0.0, &spec()).unwrap().value.re;
    assert!((v / (1.44 / 2.44f64.powf(1.5)) - 1.0).abs() < 1e-4);
    let v = sigma_dc(&m09, &p.framework(FrameworkKind::Phqm), 0.0, &spec()).unwrap().value.re;
    assert!((v / (2.25 / 2.44f64.powf(1.5)) - 1.0).abs() < 1e-4);
}

#[test]
fn dc_conductivity_of_isospectral_current() {
    let (iso, p) = model(0.6, 1.5, TachyonCurrent::Tilde);
    let v = sigma_dc(&iso, &p.framework(FrameworkKind::Phqm), 0.0, &spec()).unwrap().value.re;
    let closed = sigma_dc_closed(DcFormula::IsospectralExact, &p).unwrap();
    assert!((v / closed - 1.0).abs() < 1e-4, "{v} vs {closed}");
}

#[test]
fn dc_conductivity_at_finite_temperature_approaches_zero_temperature() {
    let (standard, p) = model(0.6, 1.5, TachyonCurrent::J);
    let fw = p.framework(FrameworkKind::Standard);
    let cold = sigma_dc(&standard, &fw, 0.0, &spec()).unwrap().value.re;
    let warm = sigma_dc(&standard, &fw, 0.02, &spec()).unwrap().value.re;
    assert!((warm - cold).abs() < 1e-3 * cold, "{warm} vs {cold}");
}

#[test]
fn optical_sum_rules() {
    for kind in [FrameworkKind::Standard, FrameworkKind::Phqm] {
        let (standard, p) = model(0.6, 1.5, TachyonCurrent::J);
        let v = optical_sum(&standard, &p.framework(kind), &spec()).unwrap().value.re;
        assert!((v - 1.0).abs() < 1e-4, "{kind:?}: {v}");
    }
    let (iso, p) = model(0.9, 0.5, TachyonCurrent::Tilde);
    let v = optical_sum(&iso, &p.framework(FrameworkKind::Phqm), &spec()).unwrap().value.re;
    let closed = osr_closed(&p, OsrForm::Exact).unwrap();
    assert!((v / closed - 1.0).abs() < 1e-4, "{v} vs {closed}");
}

#[test]
fn postselected_has_no_kubo_response() {
    let (m, _) = model(0.6, 1.5, TachyonCurrent::J);
    assert!(sigma_dc(&m, &Framework::postselected(), 0.0, &spec()).is_err());
    assert!(chi_local(&m, &Framework::postselected(), 1.0, 0.0, &spec()).is_err());
}

#[test]
fn response_decays_at_high_frequency() {
    let (standard, p) = model(0.6, 1.5, TachyonCurrent::J);
    let fw = p.framework(FrameworkKind::Standard);
    let chi = |w: f64| chi_local(&standard, &fw, w, 0.0, &spec()).unwrap().value;
    let (a, b) = (chi(100.0), chi(400.0));
    // Lorentzian broadening leaves σ′ ~ 1/Ω², so Im χ = Ωσ′/2π falls as 1/Ω.
    assert!(b.norm() < a.norm() / 3.0, "{a} {b}");
    assert!((b.norm() * 400.0 / (a.norm() * 100.0) - 1.0).abs() < 0.05);
    assert!(b.re.abs() * 400.0 < 0.1);
}

#[test]
fn real_part_is_even_in_frequency() {
    let (standard, p) = model(0.6, 1.5, TachyonCurrent::J);
    let fw = p.framework(FrameworkKind::Standard);
    let up = sigma_optical(&standard, &fw, 0.7, 0.0, &spec()).unwrap().value;
    let down = sigma_optical(&standard, &fw, -0.7, 0.0, &spec()).unwrap().value;
    assert!((up.re - down.re).abs() < 1e-8);
    assert!((up.im + down.im).abs() < 1e-8);
}

#[test]
fn low_frequency_conductivity_meets_dc_value() {
    let (standard, p) = model(0.0, 1.5, TachyonCurrent::J);
    let fw = p.framework(FrameworkKind::Standard);
    let near = sigma_optical(&standard, &fw, 1e-3, 0.0, &spec()).unwrap().value.re;
    let closed = sigma_dc_closed(DcFormula::Standard, &p).unwrap();
    assert!((near / closed - 1.0).abs() < 1e-4, "{near} vs {closed}");
}

#[test]
fn integrated_conductivity_matches_sum_rule() {
    let (standard, p) = model(0.6, 1.5, TachyonCurrent::J);
    let fw = p.framework(FrameworkKind::Standard);
    let sigma_re = |w: f64| sigma_optical(&standard, &fw, w, 0.0, &spec()).unwrap().value.re;
    let window = 200.0;
    let q = QuadratureSpec { rel_tol: 1e-6, ..Default::default() };
    let body = integrate(|w| c(sigma_re(w), 0.0), Domain::Finite(0.0, window), &[1.0, 2.0, 4.0, 10.0], &q)
        .unwrap()
        .value
        .re;
    // σ′ ≈ C/Ω² beyond the window.
    let tail = sigma_re(window) * window;
    // Units e²v_F/(2π): ∫_{−∞}^{∞} σ′ dΩ = 2π · (−π Re χ(0)).
    let integrated = 2.0 * (body + tail) / (2.0 * PI);
    let osr = optical_sum(&standard, &fw, &spec()).unwrap().value.re;
    assert!((integrated / osr - 1.0).abs() < 1e-3, "{integrated} vs {osr}");
}

#[test]
fn kramers_kronig_reconstructs_imaginary_part() {
    let (standard, p) = model(0.6, 1.5, TachyonCurrent::J);
    let fw = p.framework(FrameworkKind::Standard);
    let q = QuadratureSpec { rel_tol: 1e-6, ..Default::default() };
    let mut grid: Vec<f64> = (0..=160).map(|i| 0.05 * i as f64).collect();
    let mut w = 8.0;
    while w < 300.0 {
        w *= 1.06;
        grid.push(w);
    }
    let sampled: Vec<Complex64> = grid
        .iter()
        .map(|&w| {
            if w == 0.0 {
                c(sigma_dc(&standard, &fw, 0.0, &q).unwrap().value.re, 0.0)
            } else {
                sigma_optical(&standard, &fw, w, 0.0, &q).unwrap().value
            }
        })
        .collect();
    let real: Vec<(f64, f64)> = grid.iter().zip(&sampled).map(|(&w, s)| (w, s.re)).collect();
    let kk = kramers_kronig(&real).unwrap();
    for i in [10, 20, 40, 80, 120] {
        assert!((kk[i].sigma_imag - sampled[i].im).abs() < 1e-2, "omega = {}", grid[i]);
    }
}

#[test]
fn clean_lehmann_response_of_hermitian_dirac_matches_kubo() {
    let p = TachyonParams::new(0.0, 0.0);
    let delta0 = 1e-3;
    let q = QuadratureSpec { rel_tol: 1e-8, ..Default::default() };
    let lehmann = |w: f64| {
        chi_phqm_clean(|k| eig_biortho(&hamiltonian(k, &p)), |_| current_j(&p), |_| current_j(&p), w, 0.0, 0.0, delta0, &q)
            .unwrap()
            .value
    };
    let dirac = TachyonModel::new(p, TachyonCurrent::J);
    let fw = Framework::standard(delta0);
    for w in [0.0, 0.5] {
        let kubo = chi_local(&dirac, &fw, w, 0.0, &q).unwrap().value;
        let l = lehmann(w);
        assert!((l - kubo).norm() < 1e-3 * kubo.norm(), "Omega = {w}: {l} vs {kubo}");
        if w == 0.0 {
            assert!(l.re <= 0.0);
        }
    }
}

#[test]
fn clean_lehmann_response_of_two_level_toy() {
    // One k-independent two-level system; the vertex carries a Gaussian so the
    // momentum integral gives the factor ∫e^{−k²}dk/2π = 1/(2√π).
    let h = ComplexMatrix::from_rows([[c(-0.7, 0.0), c(0.2, 0.1)], [c(0.3, -0.2), c(0.9, 0.0)]]);
    let a = ComplexMatrix::from_rows([[c(0.1, 0.0), c(1.0, 0.3)], [c(0.5, -0.1), c(-0.2, 0.0)]]);
    let sys = eig_biortho(&h).unwrap();
    let (delta0, w) = (1e-2, 0.4);
    let q = QuadratureSpec { rel_tol: 1e-12, abs_tol: 1e-15, ..Default::default() };
    let chi = chi_phqm_clean(
        |_| eig_biortho(&h),
        |k| a.scale_real((-k * k / 2.0).exp()),
        |k| a.scale_real((-k * k / 2.0).exp()),
        w,
        0.0,
        0.0,
        delta0,
        &q,
    )
    .unwrap()
    .value;
    let (l, r, xi) = (&sys.left_vectors, &sys.right_vectors, &sys.eigenvalues);
    let m01 = a.sandwich(&l[0], &r[1]) * a.sandwich(&l[1], &r[0]);
    let toy = m01 * (1.0 / (c(w, delta0) + xi[0] - xi[1]) - 1.0 / (c(w, delta0) + xi[1] - xi[0]));
    let expected = toy / (2.0 * PI.sqrt());
    assert!((chi - expected).norm() < 1e-10 * expected.norm(), "{chi} vs {expected}");
}

#[test]
fn closure_model_reproduces_tachyon() {
    let p = TachyonParams::new(0.6, 1.5);
    let closure = ClosureModel::new(move |k| hamiltonian(k, &p), move |_| current_j(&p), move |_| current_j(&p));
    let fw = p.framework(FrameworkKind::Phqm);
    let a = sigma_optical(&closure, &fw, 1.0, 0.0, &spec()).unwrap().value;
    let b = sigma_optical(&TachyonModel::new(p, TachyonCurrent::J), &fw, 1.0, 0.0, &spec()).unwrap().value;
    assert!((a - b).norm() < 1e-6 * b.norm());
}

#[test]
fn temperature_must_be_non_negative() {
    let (m, p) = model(0.6, 1.5, TachyonCurrent::J);
    let err = sigma_dc(&m, &p.framework(FrameworkKind::Standard), -1.0, &spec()).unwrap_err();
    assert!(matches!(err, Error::Domain { .. }));
}
