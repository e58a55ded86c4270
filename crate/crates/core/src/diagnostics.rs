//! Post-hoc analysis of runs: certification of the doubly standardized
//! state, geometric-rate estimation, and the angle identity on the
//! `IJ`-sphere.

use serde::{Deserialize, Serialize};

use crate::drivers::Trace;
use crate::error::{NormError, Result};
use crate::matrix::Matrix;
use crate::standardize::{col_stats, row_stats, sum_of_squares};

pub const DEFAULT_FIT_WINDOW: usize = 10;
pub const DEFAULT_CERTIFY_TOLERANCE: f64 = 1e-4;

/// `Σ (a - b)²` over all entries.
pub fn frobenius_sq_diff(a: &Matrix, b: &Matrix) -> Result<f64> {
    a.ensure_same_shape(b)?;
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub ok: bool,
    pub max_abs_mean: f64,
    pub max_std_dev: f64,
}

/// Checks that every row and column has `|mean| <= tol` and `|std - 1| <= tol`.
pub fn certify_doubly_standardized(m: &Matrix, tol: f64) -> Certification {
    let (rs, cs) = (row_stats(m), col_stats(m));
    let max_abs_mean = rs.max_abs_mean().max(cs.max_abs_mean());
    let max_std_dev = rs.max_std_dev().max(cs.max_std_dev());
    Certification {
        ok: max_abs_mean <= tol && max_std_dev <= tol,
        max_abs_mean,
        max_std_dev,
    }
}

/// Ordinary least-squares line through `(x, y)` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square of the residuals.
    pub rms_residual: f64,
}

pub fn fit_line(points: &[(f64, f64)]) -> Result<LineFit> {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    // also catches fewer than two distinct abscissae
    if points.len() < 2 || sxx.is_nan() || sxx <= 0.0 {
        return Err(NormError::InsufficientData {
            needed: 2,
            available: points.len().min(1),
        });
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        rms_residual: (ss_res / n).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub iterations: usize,
    pub final_max_abs_mean: f64,
    pub final_max_std_dev: f64,
    /// Per-iteration ratio of successive squared steps, `exp(log_slope)`.
    /// Take the square root for the contraction factor of unsquared distances.
    pub rate_estimate: Option<f64>,
    pub log_slope: Option<f64>,
    pub fit_window: usize,
    pub fit_residual: Option<f64>,
}

/// Fits `ln(step_sq)` against the iteration index over the last `window`
/// records of `trace`.
pub fn estimate_rate(trace: &Trace, window: usize) -> Result<ConvergenceReport> {
    if window < 2 || trace.records.len() < window {
        return Err(NormError::InsufficientData {
            needed: window.max(2),
            available: trace.records.len(),
        });
    }
    let tail = &trace.records[trace.records.len() - window..];
    if let Some(r) = tail.iter().find(|r| r.step_sq.is_nan() || r.step_sq <= 0.0) {
        return Err(NormError::NonpositiveStep { iteration: r.index });
    }
    let points: Vec<(f64, f64)> = tail
        .iter()
        .map(|r| (r.index as f64, r.step_sq.ln()))
        .collect();
    let fit = fit_line(&points)?;
    let cert = certify_doubly_standardized(&trace.final_matrix, 0.0);
    Ok(ConvergenceReport {
        converged: trace.converged,
        iterations: trace.records.len(),
        final_max_abs_mean: cert.max_abs_mean,
        final_max_std_dev: cert.max_std_dev,
        rate_estimate: Some(fit.slope.exp()),
        log_slope: Some(fit.slope),
        fit_window: window,
        fit_residual: Some(fit.rms_residual),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleCheck {
    /// Iteration label; 0 when the check was made outside a trace.
    pub n: usize,
    /// `⟨x, z⟩ / (‖x‖‖z‖)`.
    pub cos_direct: f64,
    /// `1 - ‖x - z‖² / (2IJ)`; equals `cos_direct` only when both squared
    /// norms are `IJ`.
    pub cos_identity: f64,
    pub discrepancy: f64,
}

/// Compares the direct cosine between `x` and `z` with the form that
/// assumes both lie on the sphere of squared radius `IJ`.
pub fn angle_identity_check(x: &Matrix, z: &Matrix) -> Result<AngleCheck> {
    x.ensure_same_shape(z)?;
    let (nx, nz) = (sum_of_squares(x).sqrt(), sum_of_squares(z).sqrt());
    if nx == 0.0 || nz == 0.0 {
        return Err(NormError::ZeroMatrix);
    }
    let inner: f64 = x
        .as_slice()
        .iter()
        .zip(z.as_slice())
        .map(|(a, b)| a * b)
        .sum();
    let cos_direct = (inner / (nx * nz)).clamp(-1.0, 1.0);
    let cos_identity = 1.0 - frobenius_sq_diff(x, z)? / (2.0 * x.len() as f64);
    Ok(AngleCheck {
        n: 0,
        cos_direct,
        cos_identity,
        discrepancy: (cos_direct - cos_identity).abs(),
    })
}

/// Angle checks for every captured iterate of `trace` against its final
/// matrix. Empty when the run did not capture iterates.
pub fn angle_profile(trace: &Trace) -> Result<Vec<AngleCheck>> {
    trace
        .iterates
        .iter()
        .flatten()
        .enumerate()
        .map(|(k, x)| {
            angle_identity_check(x, &trace.final_matrix).map(|c| AngleCheck { n: k + 1, ..c })
        })
        .collect()
}
