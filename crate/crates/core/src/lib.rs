//! Doubly stochastic kernel learning.
//!
//! Stochastic gradient descent for least-squares regression in a reproducing
//! kernel Hilbert space, where every kernel evaluation `K(x_t, .)` is replaced
//! by a single random feature `phi_v(x_t) phi_v(.)`. Features are never stored:
//! feature `t` is regenerated on demand from a counter-derived seed.
//!
//! Alongside the learner the crate carries an exact spectral oracle. Synthetic
//! problems are built on a diagonal integral operator in the trigonometric
//! basis of `L^2[0,1]`, so excess risks, contraction products and trace terms
//! can be evaluated in closed form and compared against analytic bounds.
//!
//! Module map:
//!
//! - [`spectrum`]: diagonal operator model and its spectral quantities.
//! - [`features`]: Gaussian random Fourier features and spectral features.
//! - [`learner`]: the doubly stochastic update, the kernel online baseline,
//!   and the model file format.
//! - [`schedules`]: step-size / regularization presets and their validity checks.
//! - [`synthetic`]: problems with known regression function and risk evaluation.
//! - [`bounds`]: exact-versus-bound oracle for the convergence analysis.
//! - [`harness`]: replicated sweeps, log-log rate fits and rate verdicts.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod conventions;
pub mod error;
pub mod features;
pub mod harness;
pub mod learner;
pub mod rng;
pub mod schedules;
pub mod spectrum;
pub mod synthetic;

pub use error::{Error, Result};
pub use features::{FeatureHandle, FeatureMap, FeatureMapSpec};
pub use learner::{EvalMode, Model, Sample};
pub use schedules::Schedule;
pub use spectrum::{FunctionCoeffs, SpectralOperator};
pub use synthetic::SpectralProblem;
