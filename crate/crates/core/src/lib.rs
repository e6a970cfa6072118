//! Finite-element stability laboratory for the damped Bresse beam.

pub mod error;
pub mod evolve;
pub mod fem;
pub mod fitting;
pub mod fixtures;
pub mod linalg;
pub mod model;
pub mod par;
pub mod scenario;
pub mod spectral;
pub mod table;
pub mod witness;

pub use error::{BresseError, Result};
