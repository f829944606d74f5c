//! Weighted Bergman spaces H(nu) on model domains, the Gaussian analytic functions
//! they carry, and Monte Carlo checks of the convergence of (1/n) log |f_n| and of the
//! normalized zero sets.

pub mod bergman;
pub mod config;
pub mod error;
pub mod experiments;
pub mod gaf;
pub mod geometry;
pub mod quadrature;
pub mod run;
pub mod stats;
pub mod zeros;

pub use error::{Error, Result};
