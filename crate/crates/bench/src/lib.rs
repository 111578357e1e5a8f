//! Fixtures shared by the benchmarks.

use lsemix::{cones, LseDistribution};
use nalgebra::{DMatrix, DVector};

/// A bivariate skew-slash law with correlated scale.
pub fn ghss_pair_member(shift: f64) -> LseDistribution {
    LseDistribution::ghss(
        DVector::from_vec(vec![shift, 0.0]),
        DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 1.5]),
        DVector::from_vec(vec![0.3, 0.2]),
        3.0,
    )
    .expect("valid parameters")
}

/// Matrices spanning the cheap and expensive copositivity paths.
pub fn cone_fixtures() -> Vec<(&'static str, DMatrix<f64>)> {
    let indefinite = DMatrix::from_fn(6, 6, |i, j| if i == j { 1.0 } else { -0.15 * ((i + j) % 3) as f64 });
    vec![("horn5", cones::horn_matrix()), ("indefinite6", indefinite)]
}
