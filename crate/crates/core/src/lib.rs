//! Fractional evolution equations in finite dimensions.

pub mod contour;
pub mod error;
pub mod fracops;
pub mod opalgebra;
pub mod solver;
pub mod specfun;

pub use error::{Error, Result};
