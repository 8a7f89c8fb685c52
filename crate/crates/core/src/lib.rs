//! Variational p-capacities, curvature functionals and inverse mean
//! curvature flow for convex and star-shaped bodies, together with a
//! harness that evaluates the capacity / area / volume / Willmore
//! inequalities on a corpus of bodies.

pub mod capacity;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod harness;
pub mod numfmt;

pub use error::{CapError, Result};
