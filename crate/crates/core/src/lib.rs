//! Coupling matrices and concentration bounds for dependent random fields,
//! with exact and Monte Carlo verification.

pub mod bounds;
pub mod coupling;
pub mod error;
pub mod fields;
pub mod lattice;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
