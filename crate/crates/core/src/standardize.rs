//! Mean and standard-deviation polish of rows and columns.
//!
//! All statistics use the population divisor (the length of the row or
//! column), and standard deviations are the positive square root of the
//! population variance. A row or column whose standard deviation is at or
//! below [`ZERO_STD_THRESHOLD`] cannot be polished and yields
//! [`NormError::ZeroVariance`].

use serde::{Deserialize, Serialize};

use crate::error::{Axis, NormError, Result};
use crate::matrix::Matrix;

/// Standard deviations at or below this are treated as exact zeros.
pub const ZERO_STD_THRESHOLD: f64 = 1e-300;

/// Per-row or per-column means and population standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowColStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl RowColStats {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn max_abs_mean(&self) -> f64 {
        self.means.iter().fold(0.0, |acc, m| acc.max(m.abs()))
    }

    /// Largest `|std - 1|`.
    pub fn max_std_dev(&self) -> f64 {
        self.stds
            .iter()
            .fold(0.0, |acc, s| acc.max((s - 1.0).abs()))
    }

    fn first_zero(&self) -> Option<usize> {
        self.stds.iter().position(|&s| s <= ZERO_STD_THRESHOLD)
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let count = n as f64;
    let mean = values.clone().sum::<f64>() / count;
    let var = values.map(|x| (x - mean) * (x - mean)).sum::<f64>() / count;
    (mean, var.sqrt())
}

pub fn row_stats(m: &Matrix) -> RowColStats {
    let (means, stds) = m
        .row_iter()
        .map(|r| mean_std(r.iter().copied(), r.len()))
        .unzip();
    RowColStats { means, stds }
}

pub fn col_stats(m: &Matrix) -> RowColStats {
    let (means, stds) = (0..m.cols()).map(|j| mean_std(m.col(j), m.rows())).unzip();
    RowColStats { means, stds }
}

/// Subtracts each row's mean and divides by its standard deviation.
pub fn row_standardize(m: &Matrix) -> Result<Matrix> {
    let stats = row_stats(m);
    if let Some(index) = stats.first_zero() {
        return Err(NormError::ZeroVariance {
            axis: Axis::Row,
            index,
        });
    }
    let mut data = Vec::with_capacity(m.len());
    for (i, r) in m.row_iter().enumerate() {
        let (mean, std) = (stats.means[i], stats.stds[i]);
        data.extend(r.iter().map(|x| (x - mean) / std));
    }
    // dividing by a tiny but admissible std can still overflow
    Matrix::new(m.rows(), m.cols(), data)
}

/// Subtracts each column's mean and divides by its standard deviation.
pub fn col_standardize(m: &Matrix) -> Result<Matrix> {
    let stats = col_stats(m);
    if let Some(index) = stats.first_zero() {
        return Err(NormError::ZeroVariance {
            axis: Axis::Col,
            index,
        });
    }
    let mut data = Vec::with_capacity(m.len());
    for r in m.row_iter() {
        data.extend(
            r.iter()
                .zip(stats.means.iter().zip(&stats.stds))
                .map(|(x, (mean, std))| (x - mean) / std),
        );
    }
    // dividing by a tiny but admissible std can still overflow
    Matrix::new(m.rows(), m.cols(), data)
}

pub fn sum_of_squares(m: &Matrix) -> f64 {
    m.as_slice().iter().map(|x| x * x).sum()
}
