//! Fixed points of the successive map, with tools specific to the 3×3 case.
//!
//! A 3×3 doubly standardized matrix has every row and column in the circle
//! `{x ∈ R³ : Σx = 0, Σx² = 3}`, so its first column pins down the whole
//! matrix up to the arrangement of three values. [`sample_ring`] traces that
//! circle by running the successive map from random starts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{certify_doubly_standardized, frobenius_sq_diff};
use crate::drivers::{iterate_once, run_successive, NormConfig, Order};
use crate::error::{NormError, Result};
use crate::io::{generate_gaussian, GenSpec};
use crate::matrix::Matrix;

/// `true` when one column-first iteration moves `m` by at most `tol` in
/// squared Frobenius norm and `m` is doubly standardized to `sqrt(tol)`.
pub fn is_fixed_point(m: &Matrix, tol: f64) -> Result<bool> {
    let step = frobenius_sq_diff(&iterate_once(m, Order::ColumnFirst)?, m)?;
    Ok(step <= tol && certify_doubly_standardized(m, tol.sqrt()).ok)
}

/// Single-linkage clusters of the entries of `m` at gap `tol`, returned as
/// ascending cluster means.
pub fn unique_values(m: &Matrix, tol: f64) -> Vec<f64> {
    let mut xs = m.as_slice().to_vec();
    xs.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=xs.len() {
        if k == xs.len() || xs[k] - xs[k - 1] > tol {
            let cluster = &xs[start..k];
            out.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
            start = k;
        }
    }
    out
}

/// `true` when `m` is square with side `values.len()` and every row and
/// every column holds each of `values` exactly once, matching within `tol`.
pub fn is_latin_arrangement(m: &Matrix, values: &[f64], tol: f64) -> bool {
    let n = values.len();
    if m.shape() != (n, n) {
        return false;
    }
    (0..n).all(|i| {
        covers_once(m.row(i).iter().copied(), values, tol) && covers_once(m.col(i), values, tol)
    })
}

fn covers_once(line: impl Iterator<Item = f64>, values: &[f64], tol: f64) -> bool {
    let mut seen = vec![false; values.len()];
    for x in line {
        match values.iter().position(|v| (x - v).abs() <= tol) {
            Some(k) if !seen[k] => seen[k] = true,
            _ => return false,
        }
    }
    seen.iter().all(|&s| s)
}

/// First column of a 3×3 limit matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingSample {
    pub column: [f64; 3],
    pub source_seed: u64,
    pub iterations_to_converge: usize,
}

impl RingSample {
    pub fn sum(&self) -> f64 {
        self.column.iter().sum()
    }

    pub fn sum_sq(&self) -> f64 {
        self.column.iter().map(|x| x * x).sum()
    }

    /// The column rescaled to unit Euclidean norm.
    pub fn unit(&self) -> [f64; 3] {
        let norm = self.sum_sq().sqrt();
        self.column.map(|x| x / norm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingSampling {
    /// Converged samples, ordered by seed.
    pub samples: Vec<RingSample>,
    /// Seeds whose runs did not converge.
    pub excluded: Vec<u64>,
}

impl RingSampling {
    /// Largest `|Σ column|` over all samples.
    pub fn max_abs_sum(&self) -> f64 {
        self.samples.iter().fold(0.0, |a, s| a.max(s.sum().abs()))
    }

    /// Largest `|Σ column² − 3|` over all samples.
    pub fn max_norm_deviation(&self) -> f64 {
        self.samples
            .iter()
            .fold(0.0, |a, s| a.max((s.sum_sq() - 3.0).abs()))
    }
}

/// The 3×3 standard Gaussian start used for ring sample `seed`.
pub fn ring_start(seed: u64) -> Matrix {
    generate_gaussian(&GenSpec::standard(3, 3, seed)).expect("standard normal draws are finite")
}

/// Runs the successive map from `count` standard Gaussian 3×3 starts with
/// seeds `seed, seed + 1, …` and keeps the first column of each converged
/// limit. Runs execute on the rayon pool; output order follows the seeds.
pub fn sample_ring(count: usize, seed: u64, cfg: &NormConfig) -> Result<RingSampling> {
    if count == 0 {
        return Err(NormError::InvalidConfig(
            "ring sample count must be at least 1".into(),
        ));
    }
    cfg.validate()?;
    let runs: Vec<(u64, Option<RingSample>)> = (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let s = seed.wrapping_add(k);
            let trace = run_successive(&ring_start(s), cfg)?;
            let sample = trace.converged.then(|| {
                let z = &trace.final_matrix;
                RingSample {
                    column: [z[(0, 0)], z[(1, 0)], z[(2, 0)]],
                    source_seed: s,
                    iterations_to_converge: trace.iterations(),
                }
            });
            Ok((s, sample))
        })
        .collect::<Result<_>>()?;

    let mut out = RingSampling {
        samples: Vec::with_capacity(count),
        excluded: Vec::new(),
    };
    for (s, sample) in runs {
        match sample {
            Some(sample) => out.samples.push(sample),
            None => out.excluded.push(s),
        }
    }
    Ok(out)
}
