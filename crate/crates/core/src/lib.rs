//! Kriging-weight identifiability and sensitivity toolkit for the Matérn
//! covariance.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`]: modified Bessel function of the second kind, `K_ν(x)`.
//! * [`linalg`]: small dense SPD factorization and symmetric eigenvalues.
//! * [`kernel`]: Matérn correlation/covariance and kernel matrices.
//! * [`kriging`]: kriging weights, mean, variance and log-likelihood.
//! * [`identifiability`]: finite-difference sensitivities and collinearity
//!   indices over the `(ν, ρ)` plane.
//! * [`sensitivity`]: Latin hypercube designs and total-effect Sobol indices
//!   of kriging weights and kriging variance.
//! * [`classifier`]: latent-GP sign classifier with leave-one-out grid search.
//! * [`cli`]: the `krigesense` command-line front end.

pub mod classifier;
pub mod cli;
pub mod error;
pub mod identifiability;
pub mod kernel;
pub mod kriging;
pub mod linalg;
pub mod seed;
pub mod sensitivity;
pub mod specfun;

pub use error::{Error, Result};
