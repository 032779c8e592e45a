//! Neural-network solvers and parametric surrogates for PDEs and integral
//! equations, classical reference solvers, and surrogate-accelerated
//! Metropolis-Hastings inference.

pub mod error;
pub mod mcmc;
pub mod nn;
pub mod problems;
pub mod reference;
pub mod trainer;

pub use error::{Error, Result};
