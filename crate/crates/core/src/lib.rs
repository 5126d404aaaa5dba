//! Numerical laboratory for radial and orthogonal projections of compactly
//! supported measures in R^2 and R^3.

pub mod cli;
pub mod energy;
pub mod error;
mod fft;
pub mod identity;
pub mod measure;
pub mod numeric;
pub mod output;
pub mod projections;
pub mod scanner;
pub mod sphere;

pub use error::{Error, Result};
