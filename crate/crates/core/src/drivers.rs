//! Iteration engines: successive standardization and the simultaneous
//! normalization contrast.

use serde::{Deserialize, Serialize};

use crate::diagnostics::frobenius_sq_diff;
use crate::error::{Axis, NormError, Result};
use crate::matrix::Matrix;
use crate::standardize::{
    col_standardize, col_stats, row_standardize, row_stats, sum_of_squares, ZERO_STD_THRESHOLD,
};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 1000;
pub const DEFAULT_DIVERGENCE_CEILING: f64 = 1e12;

/// Which axis is polished first within one iteration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    /// Columns, then rows.
    #[default]
    ColumnFirst,
    /// Rows, then columns.
    RowFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormConfig {
    pub order: Order,
    /// Stop once the squared Frobenius step falls strictly below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Keep every iterate in [`Trace::iterates`].
    pub capture_iterates: bool,
    /// Simultaneous loop only: a step or sum of squares above this counts as
    /// divergence.
    pub divergence_ceiling: f64,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig {
            order: Order::ColumnFirst,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            capture_iterates: false,
            divergence_ceiling: DEFAULT_DIVERGENCE_CEILING,
        }
    }
}

impl NormConfig {
    pub fn with_order(mut self, order: Order) -> Self {
        self.order = order;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_capture(mut self, capture: bool) -> Self {
        self.capture_iterates = capture;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(NormError::InvalidConfig(format!(
                "tolerance must be positive and finite, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(NormError::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if self.divergence_ceiling.is_nan() || self.divergence_ceiling <= 0.0 {
            return Err(NormError::InvalidConfig(
                "divergence_ceiling must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Diagnostics for one full iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub index: usize,
    /// Squared Frobenius distance to the previous iterate (the raw input for
    /// iteration 1).
    pub step_sq: f64,
    pub sum_sq: f64,
    /// Largest `|mean|` over all rows and columns.
    pub max_abs_mean: f64,
    /// Largest `|std - 1|` over all rows and columns.
    pub max_std_dev: f64,
}

impl IterationRecord {
    fn measure(index: usize, prev: &Matrix, next: &Matrix) -> Result<Self> {
        let (rs, cs) = (row_stats(next), col_stats(next));
        Ok(IterationRecord {
            index,
            step_sq: frobenius_sq_diff(next, prev)?,
            sum_sq: sum_of_squares(next),
            max_abs_mean: rs.max_abs_mean().max(cs.max_abs_mean()),
            max_std_dev: rs.max_std_dev().max(cs.max_std_dev()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Tolerance,
    MaxIterations,
    ZeroVariance,
    Diverged,
}

/// Full history of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub config: NormConfig,
    pub initial: Matrix,
    pub records: Vec<IterationRecord>,
    #[serde(rename = "final")]
    pub final_matrix: Matrix,
    pub converged: bool,
    pub stop_reason: StopReason,
    /// `iterates[k]` is the matrix after iteration `k + 1`; present only when
    /// the run captured iterates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterates: Option<Vec<Matrix>>,
}

impl Trace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn last_step_sq(&self) -> Option<f64> {
        self.records.last().map(|r| r.step_sq)
    }

    pub fn step_sizes(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.step_sq)
    }
}

/// One iteration of successive standardization: all four polishes.
pub fn iterate_once(m: &Matrix, order: Order) -> Result<Matrix> {
    m.ensure_min_dim()?;
    match order {
        Order::ColumnFirst => row_standardize(&col_standardize(m)?),
        Order::RowFirst => col_standardize(&row_standardize(m)?),
    }
}

/// One simultaneous update: both means subtracted and the result divided by
/// the product of the row and column standard deviations of `m`.
pub fn simultaneous_step(m: &Matrix) -> Result<Matrix> {
    let (rs, cs) = (row_stats(m), col_stats(m));
    if let Some(index) = rs.stds.iter().position(|&s| s <= ZERO_STD_THRESHOLD) {
        return Err(NormError::ZeroVariance {
            axis: Axis::Row,
            index,
        });
    }
    if let Some(index) = cs.stds.iter().position(|&s| s <= ZERO_STD_THRESHOLD) {
        return Err(NormError::ZeroVariance {
            axis: Axis::Col,
            index,
        });
    }
    let mut data = Vec::with_capacity(m.len());
    for (i, r) in m.row_iter().enumerate() {
        data.extend(
            r.iter()
                .enumerate()
                .map(|(j, x)| (x - rs.means[i] - cs.means[j]) / (rs.stds[i] * cs.stds[j])),
        );
    }
    Matrix::new(m.rows(), m.cols(), data)
}

struct Run {
    config: NormConfig,
    initial: Matrix,
    current: Matrix,
    records: Vec<IterationRecord>,
    iterates: Option<Vec<Matrix>>,
}

impl Run {
    fn start(m: &Matrix, cfg: &NormConfig) -> Result<Self> {
        cfg.validate()?;
        m.ensure_min_dim()?;
        Ok(Run {
            config: cfg.clone(),
            initial: m.clone(),
            current: m.clone(),
            records: Vec::new(),
            iterates: cfg.capture_iterates.then(Vec::new),
        })
    }

    fn push(&mut self, next: Matrix) -> Result<&IterationRecord> {
        let record = IterationRecord::measure(self.records.len() + 1, &self.current, &next)?;
        if let Some(its) = self.iterates.as_mut() {
            its.push(next.clone());
        }
        self.current = next;
        self.records.push(record);
        Ok(self.records.last().unwrap())
    }

    fn finish(self, stop_reason: StopReason) -> Trace {
        Trace {
            config: self.config,
            initial: self.initial,
            records: self.records,
            final_matrix: self.current,
            converged: stop_reason == StopReason::Tolerance,
            stop_reason,
            iterates: self.iterates,
        }
    }
}

/// Iterates [`iterate_once`] until the squared Frobenius step drops below
/// the tolerance or the iteration cap is hit.
///
/// A zero-variance row or column mid-run ends the run with
/// [`StopReason::ZeroVariance`] and keeps the partial history; only invalid
/// inputs (dimension, configuration) are returned as errors.
pub fn run_successive(m: &Matrix, cfg: &NormConfig) -> Result<Trace> {
    let mut run = Run::start(m, cfg)?;
    for _ in 0..cfg.max_iterations {
        let next = match iterate_once(&run.current, cfg.order) {
            Ok(next) => next,
            Err(NormError::ZeroVariance { .. }) => return Ok(run.finish(StopReason::ZeroVariance)),
            Err(e) => return Err(e),
        };
        if run.push(next)?.step_sq < cfg.tolerance {
            return Ok(run.finish(StopReason::Tolerance));
        }
    }
    Ok(run.finish(StopReason::MaxIterations))
}

/// Iterates [`simultaneous_step`]. Stops as diverged when a step or the sum
/// of squares exceeds `cfg.divergence_ceiling`, or the update overflows.
pub fn run_simultaneous(m: &Matrix, cfg: &NormConfig) -> Result<Trace> {
    let mut run = Run::start(m, cfg)?;
    for _ in 0..cfg.max_iterations {
        let next = match simultaneous_step(&run.current) {
            Ok(next) => next,
            Err(NormError::ZeroVariance { .. }) => return Ok(run.finish(StopReason::ZeroVariance)),
            Err(NormError::NonFinite { .. }) => return Ok(run.finish(StopReason::Diverged)),
            Err(e) => return Err(e),
        };
        let rec = run.push(next)?;
        let ceiling = cfg.divergence_ceiling;
        if !(rec.step_sq <= ceiling && rec.sum_sq <= ceiling) {
            return Ok(run.finish(StopReason::Diverged));
        }
        if rec.step_sq < cfg.tolerance {
            return Ok(run.finish(StopReason::Tolerance));
        }
    }
    Ok(run.finish(StopReason::MaxIterations))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed_point() -> Matrix {
        Matrix::from_rows(&[
            [-1.4137, 0.7407, 0.6730],
            [0.7407, 0.6730, -1.4137],
            [0.6730, -1.4137, 0.7407],
        ])
        .unwrap()
    }

    #[test]
    fn iterate_once_matches_composition() {
        let m = Matrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 10.0]]).unwrap();
        let got = iterate_once(&m, Order::ColumnFirst).unwrap();
        let want = row_standardize(&col_standardize(&m).unwrap()).unwrap();
        assert_eq!(got, want);
        let got = iterate_once(&m, Order::RowFirst).unwrap();
        let want = col_standardize(&row_standardize(&m).unwrap()).unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn iterate_once_rejects_small() {
        let m = Matrix::from_rows(&[[0.0, 1.0], [2.0, 5.0]]).unwrap();
        assert_eq!(
            iterate_once(&m, Order::ColumnFirst),
            Err(NormError::DimensionTooSmall { rows: 2, cols: 2 })
        );
        let tall = Matrix::new(5, 2, (0..10).map(f64::from).collect()).unwrap();
        assert!(matches!(
            run_successive(&tall, &NormConfig::default()),
            Err(NormError::DimensionTooSmall { .. })
        ));
    }

    #[test]
    fn fixed_point_is_stationary() {
        let fp = fixed_point();
        for order in [Order::ColumnFirst, Order::RowFirst] {
            let out = iterate_once(&fp, order).unwrap();
            assert!(out.max_abs_diff(&fp).unwrap() < 1e-3);
        }
        let trace = run_successive(&fp, &NormConfig::default()).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.iterations(), 1);
        assert!(trace.records[0].step_sq < 1e-5);
        assert_eq!(trace.stop_reason, StopReason::Tolerance);
    }

    #[test]
    fn cap_and_capture() {
        let m = crate::io::generate_gaussian(&crate::io::GenSpec::standard(4, 5, 3)).unwrap();
        let cfg = NormConfig::default()
            .with_max_iterations(2)
            .with_capture(true);
        let trace = run_successive(&m, &cfg).unwrap();
        assert_eq!(trace.iterations(), 2);
        assert_eq!(trace.stop_reason, StopReason::MaxIterations);
        assert!(!trace.converged);
        let its = trace.iterates.as_ref().unwrap();
        assert_eq!(its.len(), 2);
        assert_eq!(its[1], trace.final_matrix);
        assert_eq!(
            trace.records[0].step_sq,
            frobenius_sq_diff(&its[0], &m).unwrap()
        );
    }

    #[test]
    fn zero_variance_stops_run() {
        let mut m = Matrix::zeros(3, 3);
        m[(0, 0)] = 1.0;
        m[(1, 1)] = 2.0;
        // constant column 2 makes the first column polish degenerate
        let trace = run_successive(&m, &NormConfig::default()).unwrap();
        assert_eq!(trace.stop_reason, StopReason::ZeroVariance);
        assert!(trace.records.is_empty());
        assert_eq!(trace.final_matrix, m);
    }

    #[test]
    fn config_validation() {
        let m = fixed_point();
        for cfg in [
            NormConfig::default().with_tolerance(0.0),
            NormConfig::default().with_tolerance(f64::NAN),
            NormConfig::default().with_max_iterations(0),
        ] {
            assert!(matches!(
                run_successive(&m, &cfg),
                Err(NormError::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn simultaneous_moves_fixed_point() {
        let fp = fixed_point();
        let next = simultaneous_step(&fp).unwrap();
        // Hand oracle: the means are ~0 and stds ~1, so the update is close to
        // the identity, but the residual 4-decimal deviations are amplified
        // through the product of stds rather than removed.
        let rs = row_stats(&fp);
        let cs = col_stats(&fp);
        let mut want = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                want[(i, j)] = (fp[(i, j)] - rs.means[i] - cs.means[j]) / (rs.stds[i] * cs.stds[j]);
            }
        }
        assert_eq!(next, want);
        assert!(frobenius_sq_diff(&next, &fp).unwrap() > 0.0);
    }

    #[test]
    fn simultaneous_breaks_norm_conservation() {
        // zero row/column means, every std 1.1, sum of squares 10.89
        let m = Matrix::from_rows(&[[1.0, -1.0, 0.0], [0.0, 1.0, -1.0], [-1.0, 0.0, 1.0]])
            .unwrap()
            .scaled(1.1 * 1.5f64.sqrt())
            .unwrap();
        let before = sum_of_squares(&m);
        assert!((before - 10.89).abs() < 1e-12);
        // the update divides by 1.1^2 without restoring the norm
        let after = sum_of_squares(&simultaneous_step(&m).unwrap());
        assert!((after - before / 1.1f64.powi(4)).abs() < 1e-12);
        assert!((after - before).abs() > 1.0);
    }
}
