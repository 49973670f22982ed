//! Least-squares fits with bootstrap intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% bootstrap interval for the slope.
    pub slope_lo: f64,
    pub slope_hi: f64,
}

pub const BOOTSTRAP_SAMPLES: usize = 1000;

fn ls(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Ordinary least squares `y ~ slope x + intercept`, with a residual
/// bootstrap interval drawn from a fixed-seed stream.
pub fn line_fit(x: &[f64], y: &[f64], seed: u64) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData(format!("{} samples for a line fit", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("line fit samples"));
    }
    let (slope, intercept) = ls(x, y).ok_or_else(|| Error::InsufficientData("degenerate abscissae".into()))?;
    let resid: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - slope * a - intercept).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes = Vec::with_capacity(BOOTSTRAP_SAMPLES);
    let mut yb = vec![0.0; y.len()];
    for _ in 0..BOOTSTRAP_SAMPLES {
        for (k, v) in yb.iter_mut().enumerate() {
            *v = slope * x[k] + intercept + resid[rng.gen_range(0..resid.len())];
        }
        if let Some((s, _)) = ls(x, &yb) {
            slopes.push(s);
        }
    }
    slopes.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| slopes[((p * (slopes.len() - 1) as f64).round() as usize).min(slopes.len() - 1)];
    Ok(LineFit {
        slope,
        intercept,
        slope_lo: q(0.025),
        slope_hi: q(0.975),
    })
}

/// Observed order of `err ~ C h^p` from a refinement sequence.
pub fn refinement_order(h: &[f64], err: &[f64]) -> Result<f64> {
    if err.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InsufficientData("non-positive error in refinement study".into()));
    }
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    ls(&lx, &ly)
        .map(|(s, _)| s)
        .ok_or_else(|| Error::InsufficientData("degenerate refinement sequence".into()))
}

/// Centered derivative of a sampled series at interior indices.
pub fn centered_derivative(t: &[f64], y: &[f64]) -> Vec<Option<f64>> {
    (0..t.len())
        .map(|k| {
            if k == 0 || k + 1 >= t.len() {
                return None;
            }
            let w = super::terms::centered_weights(t[k - 1], t[k], t[k + 1]);
            Some(w[0] * y[k - 1] + w[1] * y[k] + w[2] * y[k + 1])
        })
        .collect()
}

/// Derivative of the five-point Lagrange interpolant through the nearest
/// window of records; three points when fewer than five exist.
pub fn five_point_derivative(t: &[f64], y: &[f64]) -> Vec<Option<f64>> {
    if t.len() < 5 {
        return centered_derivative(t, y);
    }
    (0..t.len())
        .map(|k| {
            if k == 0 || k + 1 == t.len() {
                return None;
            }
            let lo = k.saturating_sub(2).min(t.len() - 5);
            let nodes = lo..lo + 5;
            let mut acc = 0.0;
            for j in nodes.clone() {
                let w = if j == k {
                    nodes.clone().filter(|&m| m != k).map(|m| 1.0 / (t[k] - t[m])).sum::<f64>()
                } else {
                    let num: f64 = nodes.clone().filter(|&m| m != j && m != k).map(|m| t[k] - t[m]).product();
                    let den: f64 = nodes.clone().filter(|&m| m != j).map(|m| t[j] - t[m]).product();
                    num / den
                };
                acc += w * y[j];
            }
            Some(acc)
        })
        .collect()
}

/// Trapezoid rule.
pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2)
        .zip(y.windows(2))
        .map(|(tt, yy)| 0.5 * (tt[1] - tt[0]) * (yy[0] + yy[1]))
        .sum()
}
