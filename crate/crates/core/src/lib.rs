//! Successive standardization of rectangular matrices.
//!
//! One iteration polishes one axis (subtract each mean, divide by each
//! population standard deviation) and then the other. Repeating it drives
//! almost every matrix with at least three rows and three columns to a
//! doubly standardized limit: every row and column has mean 0 and standard
//! deviation 1. Convergence is eventually geometric.
//!
//! ```
//! use matnorm::{generate_gaussian, run_successive, certify_doubly_standardized, GenSpec, NormConfig};
//!
//! let x = generate_gaussian(&GenSpec { rows: 5, cols: 5, mean: 2.0, variance: 4.0, seed: 42 })?;
//! let trace = run_successive(&x, &NormConfig::default())?;
//! assert!(trace.converged);
//! assert!(certify_doubly_standardized(&trace.final_matrix, 1e-4).ok);
//! # Ok::<(), matnorm::NormError>(())
//! ```
//!
//! The crate also carries the simultaneous-normalization contrast (which
//! does not converge), rate and angle diagnostics, 3×3 fixed-point tools and
//! the CSV/JSON formats used by the `matnorm` CLI.

pub mod diagnostics;
pub mod drivers;
pub mod error;
pub mod fixedpoint;
pub mod io;
pub mod matrix;
pub mod standardize;

pub use diagnostics::{
    angle_identity_check, angle_profile, certify_doubly_standardized, estimate_rate,
    frobenius_sq_diff, AngleCheck, Certification, ConvergenceReport,
};
pub use drivers::{
    iterate_once, run_simultaneous, run_successive, simultaneous_step, IterationRecord, NormConfig,
    Order, StopReason, Trace,
};
pub use error::{Axis, NormError, Result};
pub use fixedpoint::{
    is_fixed_point, is_latin_arrangement, sample_ring, unique_values, RingSample, RingSampling,
};
pub use io::{generate_gaussian, GenSpec, IoError, TraceFormat};
pub use matrix::Matrix;
pub use standardize::{
    col_standardize, col_stats, row_standardize, row_stats, sum_of_squares, RowColStats,
};
