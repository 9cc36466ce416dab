//! Gamma operators on the second chaos: variances, pathwise values and contraction constants.

pub mod constants;
pub mod pathwise;
pub mod variance;

pub use constants::{admissible_tuples, gamma_constants, ConstantVariant, GammaConstantKey};
pub use pathwise::{centered_gamma_pathwise, gamma_pathwise, GammaPath};
pub use variance::{
    var_combined, var_gamma_diff_cumulant, var_gamma_diff_suboptimal, var_gamma_diff_trace, GammaVarianceTable,
};
