//! Shared inputs for the criterion benches.

use matnorm::{generate_gaussian, GenSpec, Matrix};

/// Standard Gaussian start of the given shape, fixed seed.
pub fn start(rows: usize, cols: usize) -> Matrix {
    generate_gaussian(&GenSpec {
        rows,
        cols,
        mean: 2.0,
        variance: 4.0,
        seed: 0x5eed,
    })
    .expect("finite draws")
}

pub const SHAPES: &[(usize, usize)] = &[(3, 3), (5, 5), (10, 7), (50, 40), (100, 100)];
