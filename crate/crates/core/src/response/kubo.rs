use std::cell::{Cell, RefCell};
use std::f64::consts::PI;

use num_complex::Complex64;

use super::quadrature::{integrate, Domain, QuadratureSpec};
use super::{BandModel, ResponseResult};
use crate::error::{Error, Result};
use crate::greens::{Framework, FrameworkKind};
use crate::matrix::{c, trace_product, ComplexMatrix, I, ZERO};
use crate::spectral::{eig_biortho, eigenvalues, BiorthoSystem};

/// Inner (frequency) integrals run with tolerances tightened by this factor
/// so that their error stays below the outer (momentum) tolerance.
const INNER_TIGHTENING: f64 = 0.1;

fn fermi(omega: f64, t: f64) -> f64 {
    if t == 0.0 {
        return if omega < 0.0 {
            1.0
        } else if omega > 0.0 {
            0.0
        } else {
            0.5
        };
    }
    let x = omega / t;
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// `∂_ω n_F`.
fn fermi_derivative(omega: f64, t: f64) -> f64 {
    let n = fermi(omega, t);
    -n * (1.0 - n) / t
}

/// Resolvents of one `H(k)` under a framework.
struct Resolvents {
    neg_h: ComplexMatrix,
    /// `G_A⁻¹ − G_R⁻¹`, so that `G_R − G_A = G_R (G_A⁻¹ − G_R⁻¹) G_A` without
    /// cancellation far from the poles.
    inverse_gap: ComplexMatrix,
    broadening: f64,
    kind: FrameworkKind,
}

impl Resolvents {
    fn new(h: &ComplexMatrix, fw: &Framework) -> Self {
        let g = fw.broadening();
        let hermitian_part_gap = match fw.kind {
            FrameworkKind::Standard => h - &h.dagger(),
            _ => ComplexMatrix::zeros(h.dim()),
        };
        Self { neg_h: -h, inverse_gap: hermitian_part_gap.shift(c(0.0, -2.0 * g)), broadening: g, kind: fw.kind }
    }

    fn spectral(&self, gr: &ComplexMatrix, ga: &ComplexMatrix) -> ComplexMatrix {
        &(gr * &self.inverse_gap) * ga
    }

    /// `(ω − H + iγ)⁻¹`.
    fn retarded(&self, omega: f64) -> Result<ComplexMatrix> {
        self.neg_h.shift(c(omega, self.broadening)).inverse()
    }

    /// `G_R†` (standard) or `(ω − H − iγ)⁻¹ = η⁻¹G_R†η` (PHQM).
    fn advanced(&self, omega: f64) -> Result<ComplexMatrix> {
        match self.kind {
            FrameworkKind::Standard => Ok(self.retarded(omega)?.dagger()),
            _ => self.neg_h.shift(c(omega, -self.broadening)).inverse(),
        }
    }
}

/// Radius (relative to `|y|`) inside which divided differences of `Log(−x)`
/// are summed as a Taylor series instead of evaluated directly.
const SERIES_RADIUS: f64 = 0.1;

/// `Σ_{n≥n0} (−1)^{n−1} dⁿ⁻ⁿ⁰ / (n yⁿ)`, the tail of the Taylor series of
/// `Log(−x)` about `y` divided by `dⁿ⁰`, with `d = x − y`.
fn log_taylor_tail(d: Complex64, y: Complex64, n0: u32) -> Complex64 {
    let ratio = d / y;
    let sign = if n0 % 2 == 1 { 1.0 } else { -1.0 };
    let mut term = sign / y.powu(n0);
    let mut acc = ZERO;
    for n in n0..n0 + 40 {
        acc += term / n as f64;
        term *= -ratio;
        if term.norm() < 1e-18 * acc.norm() {
            break;
        }
    }
    acc
}

/// `+1` for a pole below the real axis, `−1` above: `Log(ω − x) → ln|ω| + iπ·side(x)`
/// as `ω → −∞`.
fn side(x: Complex64) -> f64 {
    if x.im < 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `∫_{−∞}^0 dω / ((ω − x)(ω − y))` for `x`, `y` off the real axis.
fn pole_product_integral(x: Complex64, y: Complex64) -> Complex64 {
    let d = x - y;
    if side(x) == side(y) && d.norm() < SERIES_RADIUS * y.norm() {
        return log_taylor_tail(d, y, 1);
    }
    ((-x).ln() - (-y).ln() - I * PI * (side(x) - side(y))) / d
}

/// `∫_{−∞}^0 dω / ((ω − x)(ω − y)²)` for `x`, `y` off the real axis on the
/// same side.
fn pole_pair_integral(x: Complex64, y: Complex64) -> Complex64 {
    let d = x - y;
    if d.norm() < SERIES_RADIUS * y.norm() {
        return log_taylor_tail(d, y, 2);
    }
    ((-x).ln() - (-y).ln()) / (d * d) - 1.0 / (d * y)
}

/// `G_R = Σ P_α/(ω − r_α)` and `G_A = Σ Q_α/(ω − a_α)` from the biorthogonal
/// decomposition of `H`. Zero-temperature frequency integrals then reduce to
/// logarithms. Far from the band bottom the traces in the Kubo formula are
/// each small while their frequency integrands are of order one, which is
/// beyond the reach of quadrature.
struct PoleExpansion {
    p: Vec<ComplexMatrix>,
    r: Vec<Complex64>,
    q: Vec<ComplexMatrix>,
    a: Vec<Complex64>,
}

impl PoleExpansion {
    fn new(res: &Resolvents) -> Result<Self> {
        let sys = eig_biortho(&-&res.neg_h)?;
        let g = c(0.0, res.broadening);
        let p: Vec<ComplexMatrix> = (0..sys.dim()).map(|a| sys.projector(a)).collect();
        let r: Vec<Complex64> = sys.eigenvalues.iter().map(|z| z - g).collect();
        let (q, a) = match res.kind {
            FrameworkKind::Standard => (p.iter().map(|m| m.dagger()).collect(), r.iter().map(|z| z.conj()).collect()),
            _ => (p.clone(), sys.eigenvalues.iter().map(|z| z + g).collect()),
        };
        Ok(Self { p, r, q, a })
    }

    /// `Σ_αβ tr[X_α A Y_β B] f(α, β)`.
    fn sum(
        &self,
        x: &[ComplexMatrix],
        y: &[ComplexMatrix],
        kp: &KPoint,
        f: impl Fn(usize, usize) -> Complex64,
    ) -> Complex64 {
        let mut acc = ZERO;
        for (i, xi) in x.iter().enumerate() {
            let xa = xi * &kp.a;
            for (j, yj) in y.iter().enumerate() {
                acc += trace_product(&xa, &(yj * &kp.b)) * f(i, j);
            }
        }
        acc
    }

    /// Sea term `∫_{−∞}^0 tr[G_R A G_R² B + G_A² A G_A B] dω` of the DC conductivity.
    fn dc_sea(&self, kp: &KPoint) -> Complex64 {
        self.sum(&self.p, &self.p, kp, |i, j| pole_pair_integral(self.r[i], self.r[j]))
            + self.sum(&self.q, &self.q, kp, |i, j| pole_pair_integral(self.a[j], self.a[i]))
    }

    /// `∫_{−∞}^0 kubo_trace(ω, Ω) dω`.
    fn kubo(&self, kp: &KPoint, big_omega: f64) -> Complex64 {
        let (p, q, r, a) = (&self.p, &self.q, &self.r, &self.a);
        let k = pole_product_integral;
        self.sum(p, p, kp, |i, j| k(r[i], r[j] - big_omega))
            - self.sum(q, p, kp, |i, j| k(a[i], r[j] - big_omega))
            + self.sum(q, p, kp, |i, j| k(a[i] + big_omega, r[j]))
            - self.sum(q, q, kp, |i, j| k(a[i] + big_omega, a[j]))
    }
}

/// A pole of `G_R` at `centre − i·width`.
struct Pole {
    centre: f64,
    width: f64,
}

struct KPoint {
    res: Resolvents,
    a: ComplexMatrix,
    b: ComplexMatrix,
    poles: Vec<Pole>,
}

fn require_dynamic_framework(fw: &Framework) -> Result<()> {
    if fw.kind == FrameworkKind::Postselected {
        return Err(Error::Unsupported("Kubo response"));
    }
    if !(fw.gamma >= 0.0) || !(fw.broadening() > 0.0) {
        return Err(Error::FrameworkViolation(format!(
            "the response needs a positive broadening: gamma > 0 or delta0 > 0 (got gamma = {}, delta0 = {})",
            fw.gamma, fw.delta0
        )));
    }
    Ok(())
}

fn k_point<M: BandModel + ?Sized>(model: &M, fw: &Framework, k: f64) -> Result<KPoint> {
    let h = model.hamiltonian(k);
    fw.check(&h)?;
    let scale = h.frobenius_norm().max(f64::MIN_POSITIVE);
    let poles = eigenvalues(&h)?
        .iter()
        .map(|z| Pole { centre: z.re, width: (fw.broadening() - z.im).abs().max(1e-12 * scale) })
        .collect();
    Ok(KPoint { res: Resolvents::new(&h, fw), a: model.vertex_a(k)?, b: model.vertex_b(k)?, poles })
}

/// `tr[(G_R−G_A)(ω) A G_R(ω+Ω) B + G_A(ω−Ω) A (G_R−G_A)(ω) B]`.
fn kubo_trace(kp: &KPoint, omega: f64, big_omega: f64) -> Result<Complex64> {
    let gr = kp.res.retarded(omega)?;
    let ga = kp.res.advanced(omega)?;
    let spectral = kp.res.spectral(&gr, &ga);
    let (gr_up, ga_down) = if big_omega == 0.0 {
        (gr, ga)
    } else {
        (kp.res.retarded(omega + big_omega)?, kp.res.advanced(omega - big_omega)?)
    };
    let first = trace_product(&(&spectral * &kp.a), &(&gr_up * &kp.b));
    let second = trace_product(&(&ga_down * &kp.a), &(&spectral * &kp.b));
    Ok(first + second)
}

/// `kubo_trace(ω, Ω) − kubo_trace(ω, 0)` through the resolvent identity
/// `G(z₁) − G(z₂) = (z₂ − z₁) G(z₁) G(z₂)`, free of cancellation.
fn kubo_trace_difference(kp: &KPoint, omega: f64, big_omega: f64) -> Result<Complex64> {
    let gr = kp.res.retarded(omega)?;
    let ga = kp.res.advanced(omega)?;
    let spectral = kp.res.spectral(&gr, &ga);
    let dgr = (&kp.res.retarded(omega + big_omega)? * &gr).scale_real(-big_omega);
    let dga = (&kp.res.advanced(omega - big_omega)? * &ga).scale_real(big_omega);
    let first = trace_product(&(&spectral * &kp.a), &(&dgr * &kp.b));
    let second = trace_product(&(&dga * &kp.a), &(&spectral * &kp.b));
    Ok(first + second)
}

/// Bookkeeping shared by the nested integrals: the first error raised inside
/// an integrand, total evaluation count and the worst inner relative error.
struct Nested {
    error: RefCell<Option<Error>>,
    evaluations: Cell<usize>,
    inner_rel_error: Cell<f64>,
    /// Largest inner value seen so far; inner tolerances are relative to it,
    /// since far-off momenta contribute values the absolute floor cannot resolve.
    inner_scale: Cell<f64>,
}

impl Nested {
    fn new() -> Self {
        Self { error: RefCell::new(None), evaluations: Cell::new(0), inner_rel_error: Cell::new(0.0), inner_scale: Cell::new(0.0) }
    }

    fn failed(&self) -> bool {
        self.error.borrow().is_some()
    }

    fn record(&self, e: Error) {
        let mut slot = self.error.borrow_mut();
        if slot.is_none() {
            *slot = Some(e);
        }
    }

    fn absorb(&self, r: &ResponseResult) {
        self.evaluations.set(self.evaluations.get() + r.evaluations);
        self.inner_scale.set(self.inner_scale.get().max(r.value.norm()));
        let rel = r.est_error / r.value.norm().max(self.inner_scale.get()).max(f64::MIN_POSITIVE);
        if r.value.norm() > 0.0 && rel > self.inner_rel_error.get() {
            self.inner_rel_error.set(rel);
        }
    }

    /// Integrates a per-k quantity over the real line with measure `dk/2π`.
    fn k_integral<M, F>(&self, model: &M, spec: &QuadratureSpec, per_k: F) -> Result<ResponseResult>
    where
        M: BandModel + ?Sized,
        F: Fn(f64) -> Result<Complex64>,
    {
        let outer_spec = spec.with_scale(model.k_scale());
        let outcome = integrate(
            |k| {
                if self.failed() {
                    return ZERO;
                }
                match per_k(k) {
                    Ok(v) => v,
                    Err(e) => {
                        self.record(e);
                        ZERO
                    }
                }
            },
            Domain::RealLine(0.0),
            &model.k_breakpoints(),
            &outer_spec,
        );
        if let Some(e) = self.error.borrow_mut().take() {
            return Err(e);
        }
        let finish = |r: ResponseResult| {
            let value = r.value / (2.0 * PI);
            let inner = self.inner_rel_error.get() * value.norm();
            ResponseResult {
                value,
                est_error: r.est_error / (2.0 * PI) + inner,
                evaluations: r.evaluations + self.evaluations.get(),
            }
        };
        match outcome {
            Ok(r) => Ok(finish(r)),
            Err(Error::NonConvergent(r)) => Err(Error::NonConvergent(finish(r))),
            Err(e) => Err(e),
        }
    }

    fn omega_integral<F>(&self, f: F, t: f64, breakpoints: &[f64], spec: &QuadratureSpec) -> Result<Complex64>
    where
        F: Fn(f64) -> Result<Complex64>,
    {
        let slot: RefCell<Option<Error>> = RefCell::new(None);
        let inner_spec = spec.tightened(INNER_TIGHTENING);
        let domain = if t == 0.0 { Domain::LowerHalfLine(0.0) } else { Domain::RealLine(0.0) };
        let r = integrate(
            |w| {
                if slot.borrow().is_some() {
                    return ZERO;
                }
                f(w).unwrap_or_else(|e| {
                    *slot.borrow_mut() = Some(e);
                    ZERO
                })
            },
            domain,
            breakpoints,
            &inner_spec,
        );
        if let Some(e) = slot.into_inner() {
            return Err(e);
        }
        let r = match r {
            Err(Error::NonConvergent(r)) if r.est_error <= inner_spec.rel_tol * self.inner_scale.get() => r,
            other => other?,
        };
        self.absorb(&r);
        Ok(r.value)
    }
}

/// Ratio between successive graded breakpoints around a pole.
const GRADING: f64 = 6.0;
/// Enough levels to span from a width of 1e-12 to 1e20.
const GRADING_LEVELS: i32 = 45;

/// Breakpoints at every shifted pole, graded geometrically outwards in units
/// of the pole width. Without the grading, a Lorentzian far from the origin
/// occupies a sliver of the mapped interval that the quadrature nodes can
/// step over entirely.
fn frequency_breakpoints(poles: &[Pole], shifts: &[f64], t: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut graded = |centre: f64, width: f64| {
        out.push(centre);
        let mut d = width;
        for _ in 0..GRADING_LEVELS {
            out.push(centre - d);
            out.push(centre + d);
            if d > centre.abs().max(width) {
                break;
            }
            d *= GRADING;
        }
    };
    for p in poles {
        for &s in shifts {
            graded(p.centre + s, p.width);
        }
    }
    if t > 0.0 {
        graded(0.0, t);
    }
    out.extend_from_slice(shifts);
    out
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain { value: t, domain: "T >= 0" });
    }
    Ok(())
}

/// Local (`q → 0`) response function
/// `χ(Ω) = −∫dk/2π ∫dω/2πi n_F(ω) tr[(G_R−G_A)A G_R(ω+Ω)B + G_A(ω−Ω)A(G_R−G_A)B]`
/// with the framework's advanced function. Units: `e²v_F` for current vertices.
pub fn chi_local<M: BandModel + ?Sized>(
    model: &M,
    fw: &Framework,
    big_omega: f64,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<ResponseResult> {
    require_dynamic_framework(fw)?;
    check_temperature(t)?;
    let nested = Nested::new();
    nested.k_integral(model, spec, |k| {
        let kp = k_point(model, fw, k)?;
        if t == 0.0 {
            if let Ok(poles) = PoleExpansion::new(&kp.res) {
                return Ok(poles.kubo(&kp, big_omega) * I / (2.0 * PI));
            }
        }
        let shifts = [0.0, big_omega, -big_omega];
        let bps = frequency_breakpoints(&kp.poles, &shifts, t);
        let inner = nested.omega_integral(
            |w| Ok(fermi(w, t) * kubo_trace(&kp, w, big_omega)?),
            t,
            &bps,
            spec,
        )?;
        Ok(inner * I / (2.0 * PI))
    })
}

/// Optical conductivity `σ(Ω) = (i/Ω)[χ(Ω) − χ(0)]` in units `e²v_F/(2π)`.
///
/// Both response functions are integrated together so that the subtraction
/// happens inside the integrand.
pub fn sigma_optical<M: BandModel + ?Sized>(
    model: &M,
    fw: &Framework,
    big_omega: f64,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<ResponseResult> {
    require_dynamic_framework(fw)?;
    check_temperature(t)?;
    if big_omega == 0.0 || !big_omega.is_finite() {
        return Err(Error::Domain { value: big_omega, domain: "Omega != 0" });
    }
    let nested = Nested::new();
    let chi_diff = nested.k_integral(model, spec, |k| {
        let kp = k_point(model, fw, k)?;
        if t == 0.0 {
            if let Ok(poles) = PoleExpansion::new(&kp.res) {
                return Ok((poles.kubo(&kp, big_omega) - poles.kubo(&kp, 0.0)) * I / (2.0 * PI));
            }
        }
        let shifts = [0.0, big_omega, -big_omega];
        let bps = frequency_breakpoints(&kp.poles, &shifts, t);
        let inner = nested.omega_integral(
            |w| {
                Ok(fermi(w, t) * kubo_trace_difference(&kp, w, big_omega)?)
            },
            t,
            &bps,
            spec,
        )?;
        Ok(inner * I / (2.0 * PI))
    });
    let scale = |r: ResponseResult| ResponseResult {
        value: r.value * I / big_omega * (2.0 * PI),
        est_error: r.est_error / big_omega.abs() * (2.0 * PI),
        evaluations: r.evaluations,
    };
    match chi_diff {
        Ok(r) => Ok(scale(r)),
        Err(Error::NonConvergent(r)) => Err(Error::NonConvergent(scale(r))),
        Err(e) => Err(e),
    }
}

/// DC conductivity in units `e²v_F/(2π)`.
///
/// At `T = 0`: `∫dk/2π {tr[G_A(0) A G_R(0) B] + ∫_{−∞}^0 tr[G_R A G_R² B + G_A² A G_A B] dω}`,
/// using `∂_ω G = −G²`. At `T > 0` the Fermi-surface term is smeared by
/// `−∂_ω n_F` and the sea term weighted by `n_F`. The sea term is skipped when
/// the model declares constant-velocity vertices, for which it integrates to
/// zero over momentum.
pub fn sigma_dc<M: BandModel + ?Sized>(
    model: &M,
    fw: &Framework,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<ResponseResult> {
    require_dynamic_framework(fw)?;
    check_temperature(t)?;
    let with_sea = !model.vertices_are_constant_velocity();
    let sea = |kp: &KPoint, w: f64| -> Result<Complex64> {
        let gr = kp.res.retarded(w)?;
        let ga = kp.res.advanced(w)?;
        let gr2 = &gr * &gr;
        let ga2 = &ga * &ga;
        Ok(trace_product(&(&gr * &kp.a), &(&gr2 * &kp.b)) + trace_product(&(&ga2 * &kp.a), &(&ga * &kp.b)))
    };
    let surface = |kp: &KPoint, w: f64| -> Result<Complex64> {
        let gr = kp.res.retarded(w)?;
        let ga = kp.res.advanced(w)?;
        Ok(trace_product(&(&ga * &kp.a), &(&gr * &kp.b)))
    };
    let nested = Nested::new();
    nested.k_integral(model, spec, |k| {
        let kp = k_point(model, fw, k)?;
        let bps = frequency_breakpoints(&kp.poles, &[0.0], t);
        if t == 0.0 {
            let mut v = surface(&kp, 0.0)?;
            if with_sea {
                v += match PoleExpansion::new(&kp.res) {
                    Ok(poles) => poles.dc_sea(&kp),
                    // Exceptional points have no pole expansion.
                    Err(_) => nested.omega_integral(|w| sea(&kp, w), 0.0, &bps, spec)?,
                };
            }
            Ok(v)
        } else {
            nested.omega_integral(
                |w| {
                    let mut v = -fermi_derivative(w, t) * surface(&kp, w)?;
                    if with_sea {
                        v += fermi(w, t) * sea(&kp, w)?;
                    }
                    Ok(v)
                },
                t,
                &bps,
                spec,
            )
        }
    })
}

/// Optical sum `−π χ(0)` at `T = 0` in units `e²v_F`. The real part is the
/// right-hand side of the conductivity sum rule; the imaginary part is a
/// numerical residual.
pub fn optical_sum<M: BandModel + ?Sized>(
    model: &M,
    fw: &Framework,
    spec: &QuadratureSpec,
) -> Result<ResponseResult> {
    let scale = |r: ResponseResult| ResponseResult {
        value: r.value * (-PI),
        est_error: r.est_error * PI,
        evaluations: r.evaluations,
    };
    match chi_local(model, fw, 0.0, 0.0, spec) {
        Ok(r) => Ok(scale(r)),
        Err(Error::NonConvergent(r)) => Err(Error::NonConvergent(scale(r))),
        Err(e) => Err(e),
    }
}

/// Clean pseudo-Hermitian Lehmann formula
/// `∫dk/2π Σ_αβ ⟨L_α|A|R_β⟩⟨L_β|B|R_α⟩ (n_F(ξ_α) − n_F(ξ_β)) / (Ω + ξ_α − ξ_β + iδ₀)`,
/// with occupations measured from `mu`.
#[allow(clippy::too_many_arguments)]
pub fn chi_phqm_clean<E, A, B>(
    eig_of_k: E,
    a_of_k: A,
    b_of_k: B,
    big_omega: f64,
    t: f64,
    mu: f64,
    delta0: f64,
    spec: &QuadratureSpec,
) -> Result<ResponseResult>
where
    E: Fn(f64) -> Result<BiorthoSystem>,
    A: Fn(f64) -> ComplexMatrix,
    B: Fn(f64) -> ComplexMatrix,
{
    check_temperature(t)?;
    if !(delta0 > 0.0) {
        return Err(Error::Domain { value: delta0, domain: "delta0 > 0" });
    }
    let slot: RefCell<Option<Error>> = RefCell::new(None);
    let per_k = |k: f64| -> Result<Complex64> {
        let sys = eig_of_k(k)?;
        let (a, b) = (a_of_k(k), b_of_k(k));
        let n = sys.dim();
        let occupation: Vec<f64> = sys.eigenvalues.iter().map(|z| fermi(z.re - mu, t)).collect();
        let mut acc = ZERO;
        for alpha in 0..n {
            for beta in 0..n {
                let dn = occupation[alpha] - occupation[beta];
                if dn == 0.0 {
                    continue;
                }
                let m = a.sandwich(&sys.left_vectors[alpha], &sys.right_vectors[beta])
                    * b.sandwich(&sys.left_vectors[beta], &sys.right_vectors[alpha]);
                let denom = c(big_omega, delta0) + sys.eigenvalues[alpha] - sys.eigenvalues[beta];
                acc += m * dn / denom;
            }
        }
        Ok(acc)
    };
    let r = integrate(
        |k| {
            if slot.borrow().is_some() {
                return ZERO;
            }
            per_k(k).unwrap_or_else(|e| {
                *slot.borrow_mut() = Some(e);
                ZERO
            })
        },
        Domain::RealLine(0.0),
        &[0.0],
        spec,
    );
    if let Some(e) = slot.into_inner() {
        return Err(e);
    }
    let r = r?;
    Ok(ResponseResult { value: r.value / (2.0 * PI), est_error: r.est_error / (2.0 * PI), evaluations: r.evaluations })
}
