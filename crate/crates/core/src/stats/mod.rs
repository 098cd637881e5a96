//! Ensemble estimators and hypothesis tests.

mod horton;
mod hypothesis;
mod principal;
mod shapes;
mod tokunaga;

use thiserror::Error;

pub use horton::{fractal_dimension, horton_ratio_to_c, horton_report, HortonAccumulator, HortonReport, HortonToC};
pub use hypothesis::{
    chi_square_gof, chi_square_independence, geometric_order_gof, ChiSquareTest, DEFAULT_SIGNIFICANCE,
};
pub use principal::{
    principal_joint_law, principal_subtree_tests, principal_subtree_tests_with, PrincipalReport, PRINCIPAL_MAX_VERTICES,
};
pub use shapes::{shape_tv_distance, ShapeDistribution, DEFAULT_MAX_SHAPE_LEAVES};
pub use tokunaga::{
    estimate_tokunaga, fit_tokunaga_ac, tokunaga_depends_only_on_gap, DiagonalSpread, GapReport, TokunagaCell,
    TokunagaFit, TokunagaMatrix,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("the ensemble is empty")]
    EmptyEnsemble,
    #[error("tree of order {found} in an ensemble conditioned on order {expected}")]
    MixedOrders { expected: u32, found: u32 },
    #[error("Horton ratios need trees of order at least 4, got {0}")]
    OrderTooLow(u32),
    #[error("{0} edge-length records for {1} trees")]
    LengthMismatch(usize, usize),
    #[error("fit needs at least two positive diagonals, found {0}")]
    InsufficientDiagonals(usize),
    #[error("fractal dimension needs c > 1, got {0}")]
    Dimension(f64),
    #[error("Horton ratio R_b = {0} must exceed 2")]
    HortonRatio(f64),
    #[error("chi-square test needs at least two cells with positive expectation")]
    DegenerateTest,
    #[error("observed and expected vectors differ in length ({0} vs {1})")]
    CellMismatch(usize, usize),
}
