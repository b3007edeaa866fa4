pub mod abstract_cfs;
pub mod bessel;
pub mod chain;
pub mod em_perturb;
pub mod error;
pub mod integrate;
pub mod kernel;
pub mod linalg;
pub mod quadrature;
pub mod sea_variation;
pub mod spinor;
pub mod verify;

pub use error::{CfsError, Result};
