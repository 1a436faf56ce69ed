//! Core numerics for designing condensate transport ramps with Bayesian
//! optimization.
//!
//! The crate is `no_std` (it needs `alloc`). It contains the trap model, the
//! B-spline ramp, the centre-of-mass and Thomas-Fermi scaling dynamics, the
//! multi-output Gaussian-process surrogate and the acquisition machinery.
//! The companion `bec-bo` crate drives the optimization loop and owns all IO.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod acquisition;
pub mod constants;
pub mod design;
pub mod dynamics;
mod error;
pub mod linalg;
pub mod optim;
pub mod ramp;
pub mod surrogate;
pub mod trap;

pub use error::{Error, Result};
