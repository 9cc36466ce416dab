//! Example sequences and convergence-rate experiments.

pub mod generators;
pub mod run;

pub use generators::{
    ar2_variance_brute, ar2_variance_closed, gen_ar1, gen_ar2, gen_holder_qf, gen_naive, gen_ustat, ustat_kernel,
    Ar2Instance, HolderBasis,
};
pub use run::{example_form, run_experiment, ExperimentName, ExperimentParams, ExperimentSpec, RateReport, RateRow, SlopeFit};
