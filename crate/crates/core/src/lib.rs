//! # stein-core
//!
//! Numerics for binary quantum hypothesis testing between two density
//! operators `rho` (null) and `sigma` (alternative).
//!
//! | Module | Provides |
//! |--------|----------|
//! | [`operator`] | validated density operators, spectral decompositions, matrix powers, tensor powers |
//! | [`divergence`] | relative entropy, the cumulant function `psi(s) = log Tr rho^(1+s) sigma^(-s)` and its derivatives, the Golden-Thompson comparand |
//! | [`exponent`] | the Legendre transform `phi(lambda)` and the strong-converse exponent |
//! | [`neyman_pearson`] | threshold tests on `rho^n - e^(n lambda) sigma^n`, exact optimal type-II error, Stein sweeps |
//! | [`classical`] | tilted families, the classical strong-converse exponent, type-class optimal tests |
//! | [`verify`] | randomized property suites over all of the above |
//!
//! All logarithms are natural (nats).
//!
//! ```
//! use stein_core::{Config, DensityOperator, StatePair};
//!
//! let cfg = Config::default();
//! let rho = DensityOperator::diagonal(&[0.75, 0.25], &cfg).unwrap();
//! let sigma = DensityOperator::diagonal(&[0.5, 0.5], &cfg).unwrap();
//! let pair = StatePair::new(rho, sigma, &cfg).unwrap();
//! let d = pair.relative_entropy();
//! assert!((d - 0.130812035941137).abs() < 1e-12);
//! ```

#![forbid(unsafe_code)]

pub mod classical;
pub mod config;
pub mod divergence;
mod error;
pub mod exponent;
pub mod io;
pub mod neyman_pearson;
pub mod operator;
pub mod random;
mod roots;
pub mod verify;

pub use classical::Distribution;
pub use config::Config;
pub use divergence::StatePair;
pub use error::{Error, Result};
pub use operator::{BinaryTest, CMatrix, DensityOperator, HermitianOperator, C64};
