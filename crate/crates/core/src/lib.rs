//! Finite-resolution analysis of weak shadowing properties.
//!
//! The crate discretises a compact metric space by a grid, approximates
//! chain recurrence through a transition graph, searches for exact orbits
//! that shadow, multishadow or subsequence-shadow a given pseudotrajectory,
//! and builds almost-invariant networks and approximately invariant
//! measures. Every positive result comes with a certificate that can be
//! re-verified independently.

pub mod error;
pub mod measures;
pub mod networks;
pub mod pseudo;
pub mod recurrence;
pub mod shadowing;
pub mod space;
pub mod systems;

pub use error::{Error, Result};
