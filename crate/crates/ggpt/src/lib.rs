//! Frame-theoretic classification of measurements in geometric generalized
//! probabilistic theories (GGPTs).
//!
//! A GGPT is a finite-dimensional ordered vector space with a distinguished
//! interior state `m` and an inner product splitting the space into the
//! "traceless" subspace `V0` and the line through `m`. Measurements are
//! families of effects summing to the unit effect; their traceless parts form
//! a vector family in `V0` whose frame properties drive everything here:
//!
//! - [`frames`] — finite frame primitives: analysis/frame operators, frame
//!   bounds, canonical duals, the trace formula.
//! - [`scalable`] — deciding whether a frame can be rescaled to a tight one,
//!   via nonnegative least squares.
//! - [`model`] — the GGPT state space: coordinates, inner product,
//!   projections, effects, cone oracles.
//! - [`measurement`] — measurements and their classification: informationally
//!   complete, morphophoric, tight IC, s-tight IC, chi-ray.
//! - [`urgleichung`] — instruments, conditional probabilities, the primal
//!   equation in its C-matrix, K-matrix and total-probability forms, state
//!   reconstruction and statistics prediction.
//! - [`models`] — built-in quantum and classical models, named reference
//!   measurements, the three-parameter qubit POVM family and its sweep.
//! - [`io`] — JSON measurement files, CSV sweep output, deterministic
//!   12-significant-digit serialization.

pub mod frames;
pub mod io;
pub mod measurement;
pub mod model;
pub mod models;
pub mod scalable;
pub mod urgleichung;

pub use frames::{Frame, FrameBounds};
pub use measurement::{ClassificationReport, Measurement};
pub use model::{DualityClass, EffectFunctional, GgptModel};
pub use scalable::ScalabilityResult;
pub use urgleichung::{Instrument, UrgleichungData};
