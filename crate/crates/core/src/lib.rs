//! Modular functionals, their F-norm, and fixed points of contractions in
//! modular spaces.
//!
//! * [`modular`] evaluates the shipped modular families and the F-norm.
//! * [`checks`] samples the modular axioms, s-convexity, the doubling
//!   constant and a Fatou-type lower semicontinuity.
//! * [`solver`] verifies contraction constants and runs Picard iteration,
//!   directly or through a composed power of the map.
//! * [`chain`] builds finite chain certificates for the order argument.
//! * [`cli`], [`config`] and [`io`] back the `modfix` binary.

pub mod chain;
pub mod checks;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod map;
pub mod modular;
pub mod point;
pub mod sampler;
pub mod solver;
pub mod tolerance;

pub use error::{Error, Result};
pub use map::{ContractionClaim, MapKind, MapSpec, Power, ScalarMap, SelfMap};
pub use modular::{eval, f_norm, Modular, ModularSpec, Planted, Young};
pub use point::Point;
pub use sampler::PointSampler;
