//! Ill-conditioned symmetric Toeplitz systems generated by `|t|^θ`, their
//! τ-algebra (sine transform) preconditioners, and the tools used to study
//! the preconditioned spectra: block Toeplitz PSD checks, multi-step
//! preconditioning chains, PCG, and an experiment driver.

pub mod block_ops;
pub mod chain;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod pcg;
pub mod quad;
pub mod spectral;
pub mod symbols;
pub mod tau;
pub mod toeplitz;

pub use error::{Error, Result};
pub use symbols::{fourier_coeff, fourier_coeffs, grid_samples, FourierCoeffs, Symbol};
pub use tau::{dst1, TauOperator};
pub use toeplitz::{ToeplitzOperator, DEFAULT_DENSE_CAP};
