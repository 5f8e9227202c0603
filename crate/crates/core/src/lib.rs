//! Quantum and classical strategies for a family of d-dimensional
//! communication complexity games.
//!
//! The crate evaluates prepare-and-measure strategies (Alice sends a single
//! d-level system) and entanglement-assisted strategies (shared state plus a
//! d-valued classical message), optimizes both by see-saw, bounds classical
//! strategies exactly, and ships reference strategy data as fixtures.

pub mod classical;
pub mod dataio;
pub mod error;
pub mod game;
pub mod linalg;
pub mod optimize;
pub mod strategies;

pub use error::{Error, Result};
