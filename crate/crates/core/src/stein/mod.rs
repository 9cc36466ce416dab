//! Stein equation `2(x + nu) f' - x f = h - E h(G(nu))` of the centered Gamma law.

pub mod classical;
pub mod corpus;
pub mod fredholm;
pub mod operator;
mod solve;

pub use classical::gamma_stein_classical;
pub use corpus::{named_function, random_lipschitz_corpus};
pub use fredholm::{solve_functional_equation, DenseStein, FredholmSolution};
pub use operator::{SteinBasis, SteinEval};
pub use solve::{apply_s, default_grid, solve_stein, target_expectation, SteinSolution};
