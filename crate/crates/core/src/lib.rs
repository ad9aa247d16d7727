//! Numerical toolkit for boundary spectral asymptotics of the two-dimensional
//! magnetic Schrödinger operator.
//!
//! The half-line oscillator branches in [`oscillator`] feed everything else:
//! boundary-corrected eigenvalue counting, the half-plane model kernel and a
//! brute-force two-dimensional counting oracle. [`dynamics`] covers the
//! classical billiard.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod banded;
pub mod cache;
pub mod counting;
pub mod dynamics;
pub mod edge;
pub mod error;
pub mod model2d;
pub mod ode;
pub mod oscillator;
pub mod params;
pub mod quadrature;
pub mod roots;
pub mod tridiag;
pub mod validate;

pub use error::{Error, Result};
pub use oscillator::{EigenBranch, EigenPair, OscillatorGrid};
pub use params::{heaviside, BoundaryCondition, HeavisideConvention, ModelParams, PotentialField};
