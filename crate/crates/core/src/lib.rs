//! Phase-field approximation of triods moving by curve shortening flow.
//!
//! The crate builds every ingredient of a vector Allen-Cahn approximation
//! of a triple junction: a three-well potential and its geodesic weights,
//! heteroclinic profiles, the stationary triple junction, the triod flow,
//! signed distances, the glued ansatz, the residual audit and a parabolic
//! solver. The [`experiments`] module drives convergence studies on top.

pub mod ansatz;
pub mod curve;
pub mod experiments;
pub mod cutoff;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod heteroclinic;
pub mod io;
pub mod jet;
pub mod linalg;
pub mod par;
pub mod potential;
pub mod residual;
pub mod solver;
pub mod stationary;
pub mod triod;

pub use error::{Error, Result};
pub use linalg::Point;
