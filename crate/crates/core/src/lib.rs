//! Numerical laboratory for random compositions of torus diffeomorphisms.
//!
//! The crate is organised bottom-up:
//!
//! * [`cocycle`]: torus points, map families, random words and the derivative
//!   cocycle in overflow-safe scaled form.
//! * [`cones`]: eigen-data of integer matrices, joint cone certificates and
//!   their robustness under perturbation, non-commuting hyperbolic words.
//! * [`lyapunov`]: exponents, Oseledec directions, truncated Lyapunov norms,
//!   stopping times and the stable-direction non-randomness score.
//! * [`stationary`]: empirical stationary measures, Fourier spectra, atoms,
//!   invariance distances and the classification verdict.
//! * [`unstable`]: local unstable curves, affine parameters, conditional
//!   slices and pointwise dimension estimates.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cocycle;
pub mod cones;
pub mod error;
pub mod lyapunov;
pub mod stationary;
pub mod unstable;

pub use cocycle::{
    cocycle_derivative, sample_word, DrivingMeasure, IntMat2, MapSpec, Perturbation, RationalPoint, RealMat2,
    ScaledMat2, SineTerm, TorusPoint, TrigTerm, Word,
};
pub use error::{Error, Result};
