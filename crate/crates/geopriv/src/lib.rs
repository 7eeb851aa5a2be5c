//! Location obfuscation with distance-bounded distinguishability.
//!
//! The building blocks, bottom to top:
//!
//! * [`distinguishability`] — the budget function `ell(d)` limiting the
//!   log-ratio of output probabilities for inputs a distance `d` apart,
//!   with sampled structural predicates (regularity, super-additivity).
//! * [`radial`] — circular noise densities over noise magnitudes:
//!   normalization, expected loss, tail tightness, privacy checking, and
//!   circularization of non-circular densities.
//! * [`laplace`] — the planar Laplace noise function, exact inverse-CDF
//!   sampling, and the location-independent additive mechanism.
//! * [`grid`] — geographic regions projected to planar km grids.
//! * [`prior`] — check-in ingestion and per-user visit distributions.
//! * [`lp`] — the linear program whose solution is the minimum-loss
//!   cell-to-cell mechanism under the privacy constraints, plus checkers.
//! * [`remap`] — nearest-point and posterior-minimizing remaps of
//!   mechanism outputs onto a discrete cell set.
//! * [`experiment`] — sweep drivers comparing the additive and
//!   LP-built mechanisms across privacy levels.
//!
//! Distances are kilometers throughout; `epsilon` carries units of 1/km.
//!
//! With the default `parallel` feature the sweep drivers and Monte Carlo
//! row sampling run on rayon; building with `--no-default-features`
//! yields a dependency-free sequential build with identical outputs.

pub mod distinguishability;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod laplace;
pub mod loss;
pub mod lp;
pub mod mechanism;
pub mod prior;
pub mod quad;
pub mod radial;
pub mod remap;
pub mod rng;
pub mod simplex;
pub mod stats;

mod csvio;
mod par;

pub use distinguishability::{DistinguishabilityFn, Level, ProbeConfig};
pub use error::{Error, Result};
pub use grid::{GeoGrid, Point, Region};
pub use laplace::{NoiseVector, PlanarLaplace};
pub use loss::LossFn;
pub use lp::{LpInstance, LpSolution};
pub use mechanism::DiscreteMechanism;
pub use par::Execution;
pub use prior::{CheckIn, Prior};
pub use radial::{PolarField, Radial};
pub use rng::RngState;
