pub mod dyadic;
pub mod error;
pub mod linalg;
pub mod symbol;

pub use error::{Error, Result};
pub mod spectral;
pub mod boundary;
pub mod index;
pub mod homotopy;
