//! Fractional-order dynamical systems toolkit.

pub mod error;
pub mod basin;
pub mod cli;
pub mod fode;
pub mod lyapunov;
pub mod model;
pub mod stability;

pub use error::{Error, Result};
