//! Spectral representation of the second Wiener chaos.

pub mod charfn;
pub mod density;
mod gamma_law;
pub mod jacobi;
pub mod kernel;
pub mod sampling;
pub mod spectral;

pub use charfn::{char_function, target_char_function, target_inverse_square};
pub use density::{density_cf_inversion, CfDensity};
pub use kernel::{spectral_from_kernel, KernelMatrix};
pub use sampling::{fold_draws, map_draws, sample, SampleBatch};
pub use spectral::{cumulant_spectral, cumulant_target, GammaTarget, SpectralForm};
