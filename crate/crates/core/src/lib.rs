//! Gamma approximation on the second Wiener chaos.
//!
//! The crate computes cumulants and Gamma-operator variances of
//! `F = sum c_i (N_i^2 - 1)` exactly from its spectrum, solves the Stein
//! equation of the centered Gamma law `G(nu)`, and measures how far `F` is
//! from `G(nu)` in several metrics.
//!
//! Spectral algebra is generic over [`Scalar`] (`f32` or `f64`); the Stein
//! solver, distances and Monte Carlo work in `f64`; the combinatorial
//! constants use exact rationals.

pub mod bounds;
pub mod chaos;
pub mod distance;
pub mod error;
pub mod experiments;
pub mod gamma_ops;
pub mod grid;
pub mod quadrature;
pub mod scalar;
pub mod special;
pub mod stats;
pub mod stein;

pub use chaos::{GammaTarget, KernelMatrix, SampleBatch, SpectralForm};
pub use error::{Error, Result};
pub use grid::{GridFunction, GridSpec};
pub use scalar::Scalar;

/// Spectral form in single precision.
pub type SpectralForm32 = chaos::SpectralForm<f32>;
/// Spectral form in double precision.
pub type SpectralForm64 = chaos::SpectralForm<f64>;
/// Kernel matrix in single precision.
pub type KernelMatrix32 = chaos::KernelMatrix<f32>;
/// Kernel matrix in double precision.
pub type KernelMatrix64 = chaos::KernelMatrix<f64>;
/// Exact rational used by the contraction constants.
pub type Rational = num_rational::BigRational;
