//! Circle quotients of deformed spheres and Stiefel manifolds that are
//! isospectral but not isometric: construction of the deforming j-maps,
//! evaluation of the metrics, and numerical verification.

pub mod error;
pub mod geometry;
pub mod jmaps;
pub mod linalg;
pub mod nonisometry;
pub mod quotient;
pub mod spectral;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
