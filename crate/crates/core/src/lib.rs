//! Numerical laboratory for undiscounted strategic experimentation with
//! two-armed Lévy bandits.

pub mod conjugate;
pub mod contour;
pub mod diagnostics;
pub mod equilibrium;
pub mod experiment;
pub mod error;
pub mod figures;
pub mod filtering;
pub mod grid;
pub mod hjb;
pub mod model;
pub mod montecarlo;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
