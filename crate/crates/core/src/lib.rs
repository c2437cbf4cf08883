//! Diffractive geodesic flow on flat surfaces with conic singularities.
//!
//! The crate covers doubled polygon exteriors and branched covers
//! ([`surface`]), geodesic tracing with geometric and diffractive cone-point
//! continuations ([`flow`]), checkers for the non-trapping, collinearity and
//! conjugacy hypotheses ([`assumptions`]), the word and smoothing calculus for
//! the wave propagator ([`words`]), and a finite-difference wave solver used
//! to compare ray predictions with simulated wavefronts ([`fdtd`]).

pub mod error;
pub mod fdtd;
pub mod assumptions;
pub mod flow;
pub mod geom;
pub mod surface;
pub mod words;

pub use error::{Error, Result};
pub use geom::Vec2;
