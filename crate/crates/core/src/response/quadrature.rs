//! Globally adaptive Gauss–Kronrod quadrature on finite, half-infinite and
//! infinite domains.
//!
//! Infinite domains are compactified by a change of variables and then treated
//! like any finite interval. The 21-point Kronrod rule and the error
//! rescaling follow QUADPACK's `qk21`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ResponseResult;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailMap {
    /// `x = b − s tanθ` on `(−∞, b]`, `x = c + s tanθ` on the real line.
    TangentMap,
    /// `x = b + s ln t` on `(−∞, b]`; suited to exponentially decaying tails.
    ExponentialMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub tail_map: TailMap,
    /// Length scale `s` of the tail map.
    pub scale: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            tail_map: TailMap::TangentMap,
            scale: 1.0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::Domain { value: self.rel_tol.min(self.abs_tol), domain: "tolerances > 0" });
        }
        if self.max_subdivisions < 10 {
            return Err(Error::Domain {
                value: self.max_subdivisions as f64,
                domain: "max_subdivisions >= 10",
            });
        }
        if !(self.scale > 0.0) {
            return Err(Error::Domain { value: self.scale, domain: "tail-map scale > 0" });
        }
        Ok(())
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    /// Same budget, tolerances tightened by `factor`.
    pub fn tightened(mut self, factor: f64) -> Self {
        self.rel_tol *= factor;
        self.abs_tol *= factor;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Finite(f64, f64),
    /// `(−∞, b]`.
    LowerHalfLine(f64),
    /// `[a, ∞)`.
    UpperHalfLine(f64),
    /// `(−∞, ∞)`, centred on the given point.
    RealLine(f64),
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208067578330,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

/// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn check_finite(v: Complex64, x: f64) -> Result<Complex64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteIntegrand(x))
    }
}

/// One 21-point Kronrod panel. `g` is the integrand in the integration
/// variable and also returns the physical abscissa for error reporting.
fn kronrod21<G>(g: &G, a: f64, b: f64) -> Result<(Complex64, f64)>
where
    G: Fn(f64) -> Result<Complex64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = g(center)?;
    let mut kronrod = f_center * WGK[10];
    let mut gauss = Complex64::new(0.0, 0.0);
    let mut abs_sum = f_center.norm() * WGK[10];
    let mut values = [(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); 10];
    for (j, &x) in XGK[..10].iter().enumerate() {
        let dx = half * x;
        let f1 = g(center - dx)?;
        let f2 = g(center + dx)?;
        values[j] = (f1, f2);
        kronrod += (f1 + f2) * WGK[j];
        abs_sum += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut asc = WGK[10] * (f_center - mean).norm();
    for (j, (f1, f2)) in values.iter().enumerate() {
        asc += WGK[j] * ((f1 - mean).norm() + (f2 - mean).norm());
    }
    let result = kronrod * half;
    let abs_result = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).norm();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    let eps_floor = 50.0 * f64::EPSILON * abs_result;
    if abs_result > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && err < eps_floor {
        err = eps_floor;
    }
    Ok((result, err))
}

/// Successive bisections of an edge panel whose value grows by more than this
/// factor each time signal a non-integrable endpoint.
const EDGE_GROWTH: f64 = 1.2;
const EDGE_STREAK: usize = 3;

/// Adaptive integration over the consecutive panels `[cuts[i], cuts[i+1]]`
/// of the integration variable. `open_ends` marks panel ends that are images
/// of `±∞`, where the mapped integrand must stay integrable.
fn adaptive<G>(g: &G, cuts: &[f64], open_ends: [bool; 2], spec: &QuadratureSpec) -> Result<ResponseResult>
where
    G: Fn(f64) -> Result<Complex64>,
{
    spec.validate()?;
    let mut heap = BinaryHeap::new();
    let mut settled_value = Complex64::new(0.0, 0.0);
    let mut settled_error = 0.0;
    let mut total = Complex64::new(0.0, 0.0);
    let mut total_error = 0.0;
    let mut evaluations = 0usize;
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (value, error) = kronrod21(g, w[0], w[1])?;
        evaluations += 21;
        total += value;
        total_error += error;
        heap.push(Segment { a: w[0], b: w[1], value, error });
    }
    let mut subdivisions = heap.len();
    let ends = [cuts[0], cuts[cuts.len() - 1]];
    let mut streaks = [0usize; 2];
    loop {
        let tolerance = spec.abs_tol.max(spec.rel_tol * total.norm());
        if total_error <= tolerance {
            break;
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::NonConvergent(ResponseResult { value: total, est_error: total_error, evaluations }));
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval at the resolution of the floating-point grid.
            settled_value += worst.value;
            settled_error += worst.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1) = kronrod21(g, worst.a, mid)?;
        let (v2, e2) = kronrod21(g, mid, worst.b)?;
        evaluations += 42;
        subdivisions += 1;
        for (side, (edge, child)) in [(worst.a, v1), (worst.b, v2)].into_iter().enumerate() {
            if open_ends[side] && edge == ends[side] {
                // Panels below the tolerance are noise and never count.
                let parent = worst.value.norm();
                let floor = spec.abs_tol.max(spec.rel_tol * total.norm());
                let grows = parent > floor && child.norm() > EDGE_GROWTH * parent;
                streaks[side] = if grows { streaks[side] + 1 } else { 0 };
                if streaks[side] >= EDGE_STREAK {
                    return Err(Error::NonConvergent(ResponseResult { value: total, est_error: f64::INFINITY, evaluations }));
                }
            }
        }
        total += v1 + v2 - worst.value;
        total_error += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        // Re-sum periodically so the running totals do not drift.
        if subdivisions % 64 == 0 {
            let (v, e) = heap
                .iter()
                .fold((settled_value, settled_error), |(v, e), s| (v + s.value, e + s.error));
            total = v;
            total_error = e;
        }
    }
    let (value, est_error) = heap
        .iter()
        .fold((settled_value, settled_error), |(v, e), s| (v + s.value, e + s.error));
    let tolerance = spec.abs_tol.max(spec.rel_tol * value.norm());
    let result = ResponseResult { value, est_error, evaluations };
    if est_error > tolerance {
        return Err(Error::NonConvergent(result));
    }
    Ok(result)
}

/// Integrates `f` over `domain`. Breakpoints mark kinks or near-singular
/// features and are honoured after the change of variables.
pub fn integrate<F>(f: F, domain: Domain, breakpoints: &[f64], spec: &QuadratureSpec) -> Result<ResponseResult>
where
    F: Fn(f64) -> Complex64,
{
    integrate_dyn(&f, domain, breakpoints, spec)
}

fn integrate_dyn(
    f: &dyn Fn(f64) -> Complex64,
    domain: Domain,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<ResponseResult> {
    spec.validate()?;
    let s = spec.scale;
    let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|x| x.is_finite()).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    let half_pi = std::f64::consts::FRAC_PI_2;
    match (domain, spec.tail_map) {
        (Domain::Finite(a, b), _) => {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::Domain { value: a, domain: "finite interval" });
            }
            let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
            let mut cuts = vec![lo];
            cuts.extend(inner.iter().copied().filter(|&x| x > lo && x < hi));
            cuts.push(hi);
            let g = |x: f64| check_finite(f(x), x);
            let mut r = adaptive(&g, &cuts, [false, false], spec)?;
            r.value *= sign;
            Ok(r)
        }
        (Domain::LowerHalfLine(b), TailMap::TangentMap) => {
            // x = b − s tanθ, θ ∈ (0, π/2)
            let g = |t: f64| {
                let tan = t.tan();
                let x = b - s * tan;
                check_finite(f(x) * (s * (1.0 + tan * tan)), x)
            };
            let mut cuts = vec![0.0];
            let mut mapped: Vec<f64> =
                inner.iter().filter(|&&x| x < b).map(|&x| ((b - x) / s).atan()).collect();
            mapped.sort_by(f64::total_cmp);
            cuts.extend(mapped);
            cuts.push(half_pi);
            adaptive(&g, &cuts, [false, true], spec)
        }
        (Domain::LowerHalfLine(b), TailMap::ExponentialMap) => {
            // x = b + s ln u, u ∈ (0, 1)
            let g = |u: f64| {
                let x = b + s * u.ln();
                check_finite(f(x) * (s / u), x)
            };
            let mut cuts = vec![0.0];
            let mut mapped: Vec<f64> = inner.iter().filter(|&&x| x < b).map(|&x| ((x - b) / s).exp()).collect();
            mapped.sort_by(f64::total_cmp);
            cuts.extend(mapped);
            cuts.push(1.0);
            adaptive(&g, &cuts, [true, false], spec)
        }
        (Domain::UpperHalfLine(a), _) => {
            let mirrored: Vec<f64> = inner.iter().map(|x| -x).collect();
            integrate_dyn(&|x| f(-x), Domain::LowerHalfLine(-a), &mirrored, spec)
        }
        (Domain::RealLine(center), TailMap::TangentMap) => {
            // x = c + s tanθ, θ ∈ (−π/2, π/2), always split at θ = 0.
            let g = |t: f64| {
                let tan = t.tan();
                let x = center + s * tan;
                check_finite(f(x) * (s * (1.0 + tan * tan)), x)
            };
            let mut cuts = vec![-half_pi, 0.0, half_pi];
            cuts.extend(inner.iter().map(|&x| ((x - center) / s).atan()));
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            adaptive(&g, &cuts, [true, true], spec)
        }
        (Domain::RealLine(center), TailMap::ExponentialMap) => {
            let (left, right): (Vec<f64>, Vec<f64>) = inner.iter().partition(|&&x| x < center);
            let lower = integrate_dyn(f, Domain::LowerHalfLine(center), &left, spec)?;
            let upper = integrate_dyn(f, Domain::UpperHalfLine(center), &right, spec)?;
            Ok(ResponseResult {
                value: lower.value + upper.value,
                est_error: lower.est_error + upper.est_error,
                evaluations: lower.evaluations + upper.evaluations,
            })
        }
    }
}

/// `∫ f` over `(−∞, b]` or `(−∞, ∞)` without breakpoints.
pub fn integrate_semi_infinite<F>(f: F, domain: Domain, spec: &QuadratureSpec) -> Result<ResponseResult>
where
    F: Fn(f64) -> Complex64,
{
    integrate(f, domain, &[], spec)
}
