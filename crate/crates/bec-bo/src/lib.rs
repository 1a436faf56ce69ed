//! Campaign orchestration, file formats and the command-line front end for
//! Bayesian optimization of condensate transport ramps.

pub mod bo;
pub mod campaign;
pub mod config;
mod error;
pub mod io;
pub mod simulate;

pub use error::{Error, Result};
