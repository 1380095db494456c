//! Kramers–Kronig reconstruction of `σ″` from sampled `σ′`.
//!
//! `σ″(Ω) = (1/π) P∫ σ′(x)/(Ω − x) dx`, with `σ′` interpolated linearly
//! between samples and continued beyond the last sample as `c/x²`. Each
//! linear segment is integrated exactly, so the principal value is handled
//! analytically and the only discretization error is the interpolation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KkPoint {
    pub omega: f64,
    pub sigma_imag: f64,
    /// Resolution error estimate from a half-resolution comparison.
    pub error_bound: f64,
}

const MIN_SAMPLES: usize = 8;
/// Largest admissible ratio between neighbouring grid spacings.
const MAX_SPACING_RATIO: f64 = 20.0;
/// The `c/x²` tail may carry at most this fraction of the total weight.
const MAX_TAIL_FRACTION: f64 = 0.05;

/// `ln|x|` with the convention `ln 0 = 0`; the discarded logarithms cancel
/// between adjacent segments (and between the outermost segment and the tail).
fn log_abs(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().ln()
    }
}

/// `∫_W^∞ dx / (x² (a − x))` for `0 < W`, `|a| ≤ W`, with the `ln|W − a|`
/// singularity dropped as in [`log_abs`].
fn tail_integral(a: f64, w: f64) -> f64 {
    if a.abs() < 1e-3 * w {
        // −Σ aⁿ / ((n+2) W^{n+2})
        let u = a / w;
        let mut acc = 0.0;
        let mut p = 1.0;
        for n in 0..12 {
            acc += p / (n as f64 + 2.0);
            p *= u;
        }
        return -acc / (w * w);
    }
    1.0 / (a * w) + (log_abs(w - a) - w.ln()) / (a * a)
}

fn transform(xs: &[f64], ys: &[f64], omega: f64) -> f64 {
    let n = xs.len();
    let mut acc = 0.0;
    for i in 0..n - 1 {
        let (x0, x1) = (xs[i], xs[i + 1]);
        let h = x1 - x0;
        let slope = (ys[i + 1] - ys[i]) / h;
        let f_at_omega = ys[i] + slope * (omega - x0);
        acc += f_at_omega * (log_abs(omega - x0) - log_abs(omega - x1)) - slope * h;
    }
    // Right tail: c/x² beyond x_max > 0.
    let (x_max, y_max) = (xs[n - 1], ys[n - 1]);
    if x_max > 0.0 {
        acc += y_max * x_max * x_max * tail_integral(omega, x_max);
    }
    // Left tail: substitute x → −x.
    let (x_min, y_min) = (xs[0], ys[0]);
    if x_min < 0.0 {
        acc -= y_min * x_min * x_min * tail_integral(-omega, -x_min);
    }
    acc / PI
}

fn validate(samples: &[(f64, f64)]) -> Result<()> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InsufficientGrid(format!(
            "{} samples, at least {MIN_SAMPLES} required",
            samples.len()
        )));
    }
    for w in samples.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::InsufficientGrid(format!(
                "frequencies must be strictly increasing ({} then {})",
                w[0].0, w[1].0
            )));
        }
    }
    if samples.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InsufficientGrid("non-finite sample".into()));
    }
    let spacings: Vec<f64> = samples.windows(2).map(|w| w[1].0 - w[0].0).collect();
    for s in spacings.windows(2) {
        let ratio = (s[1] / s[0]).max(s[0] / s[1]);
        if ratio > MAX_SPACING_RATIO {
            return Err(Error::InsufficientGrid(format!(
                "neighbouring spacings differ by a factor {ratio:.1} (limit {MAX_SPACING_RATIO})"
            )));
        }
    }
    Ok(())
}

/// Principal-value Hilbert transform of sampled `σ′(Ω)`.
///
/// Samples must be strictly increasing in `Ω`. If every `Ω ≥ 0` the input is
/// mirrored, using that `σ′` is even. The returned `σ″` is evaluated at the
/// input frequencies.
pub fn kramers_kronig(samples: &[(f64, f64)]) -> Result<Vec<KkPoint>> {
    validate(samples)?;
    let mirrored = samples[0].0 >= 0.0;
    let mut full: Vec<(f64, f64)> = Vec::with_capacity(2 * samples.len());
    if mirrored {
        full.extend(samples.iter().rev().filter(|(x, _)| *x > 0.0).map(|&(x, y)| (-x, y)));
    }
    full.extend_from_slice(samples);
    let xs: Vec<f64> = full.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = full.iter().map(|p| p.1).collect();

    // Weight carried by the interior versus the extrapolated tails.
    let interior: f64 = full.windows(2).map(|w| 0.5 * (w[0].1.abs() + w[1].1.abs()) * (w[1].0 - w[0].0)).sum();
    let last = full[full.len() - 1];
    let first = full[0];
    let tail = (last.1 * last.0).abs() + if first.0 < 0.0 { (first.1 * first.0).abs() } else { 0.0 };
    if interior > 0.0 && tail > MAX_TAIL_FRACTION * interior {
        return Err(Error::InsufficientGrid(format!(
            "tail carries {:.2}% of the weight (limit {:.0}%); extend the frequency window",
            100.0 * tail / interior,
            100.0 * MAX_TAIL_FRACTION
        )));
    }

    // Every other sample, keeping both endpoints, for the resolution estimate.
    let coarse_idx: Vec<usize> = {
        let mut v: Vec<usize> = (0..xs.len()).step_by(2).collect();
        if *v.last().unwrap() != xs.len() - 1 {
            v.push(xs.len() - 1);
        }
        v
    };
    let xc: Vec<f64> = coarse_idx.iter().map(|&i| xs[i]).collect();
    let yc: Vec<f64> = coarse_idx.iter().map(|&i| ys[i]).collect();

    Ok(samples
        .iter()
        .map(|&(omega, _)| {
            let fine = transform(&xs, &ys, omega);
            let coarse = transform(&xc, &yc, omega);
            KkPoint { omega, sigma_imag: fine, error_bound: (fine - coarse).abs() / 3.0 }
        })
        .collect())
}
