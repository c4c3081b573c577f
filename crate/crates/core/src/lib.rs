//! Monte Carlo toolkit for Gaussian multiplicative chaos on Wiener space:
//! mollified white noise, weighted Brownian path ensembles, endpoint measures,
//! the translation-quotient configuration space and the functionals and
//! dynamics defined on it.

pub mod cloud;
pub mod compact;
pub mod dynamics;
pub mod error;
pub mod free_energy;
pub mod functionals;
pub mod ito;
pub mod noise;
pub mod paths;
pub mod quadrature;
pub mod rng;
pub mod spatial;
pub mod stats;

pub use error::{Error, Result};
