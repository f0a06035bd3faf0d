pub mod analytic;
pub mod cli;
pub mod darkbright;
pub mod error;
pub mod numerics;
pub mod protocol;
pub mod spectral;
pub mod state;

pub use error::{Error, Result};
