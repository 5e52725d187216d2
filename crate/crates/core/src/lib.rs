//! Fuchsian equations of second order in which all singular points except three are
//! apparent: accessory parameters, the Klein operator relating them to hypergeometric
//! equations, numerical monodromy and counts of spherical conic metrics.

pub mod cli;
pub mod difference;
pub mod error;
pub mod fuchsian;
pub mod klein;
pub mod linalg;
pub mod metrics;
pub mod monodromy;
pub mod ode;
pub mod poly;
pub mod ratfn;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64;
