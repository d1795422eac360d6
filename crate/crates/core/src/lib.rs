//! Numerical core for learning SPDE solution operators from regularity-structure
//! features.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`], [`ntensor`], [`rng`], [`spectral`]: discretisation, persistence,
//!   reproducible random streams and FFT plumbing.
//! * [`noise`]: space-time white noise, initial conditions and forcings.
//! * [`semigroup`]: the heat semigroup `e^{t ν Δ}` and its Duhamel integral.
//! * [`features`]: symbolic model generation with degree bookkeeping and
//!   memoised numeric evaluation.
//! * [`solve`]: ground-truth solvers and the on-disk dataset generator.

pub mod error;
pub mod features;
pub mod grid;
pub mod noise;
pub mod ntensor;
pub mod rng;
pub mod semigroup;
pub mod solve;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{Grid, SpaceTimeField, SpatialField};
pub use rng::RngStream;
