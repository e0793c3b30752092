//! Emulation of deterministic ODE simulators through Gaussian-process
//! surrogates of the short-time flow map.
//!
//! The flow map sends a state `x` to the state reached after one fixed time
//! step `dt`. Each of its `d` scalar components is fitted by a Gaussian
//! process with a squared-exponential kernel and a linear trend, trained on
//! a space-filling set of initial conditions. The kernel is approximated
//! with random Fourier features, which turns the predictive mean into a
//! *random* function: every draw of frequencies and phases yields one
//! deterministic approximation of the flow map. Iterating a draw from an
//! initial condition produces one candidate trajectory; an ensemble of
//! draws produces a distribution over trajectories whose per-time mean and
//! standard deviation serve as the prediction and its uncertainty.
//!
//! Module map:
//! - [`design`]: Latin hypercube sampling and maximin improvement of designs.
//! - [`dynamics`]: the benchmark ODE systems and a fixed-step RK4 integrator.
//! - [`gp`]: exact GP regression per flow-map component (fit + predict).
//! - [`rff`]: random Fourier features and sampled predictor realisations.
//! - [`emulator`]: end-to-end training and ensemble rollout.
//! - [`analysis`]: MAE/RMSE, change-point detection, predictability horizon,
//!   and the multi-initial-condition benchmark harness.
//! - [`export`]: CSV and model-file serialization used by the CLI.
//!
//! The numeric core is generic over the scalar type through [`scalar::Scalar`]
//! (implemented for `f32` and `f64`); the aliases below fix the common
//! double-precision case.

pub mod analysis;
pub mod design;
pub mod dynamics;
pub mod emulator;
pub mod error;
pub mod export;
pub mod gp;
pub mod linalg;
pub mod rff;
pub mod scalar;
pub mod seeding;

pub use error::Error;
pub use scalar::Scalar;

/// Double-precision aliases for the main public types.
pub type Bounds = design::Bounds<f64>;
pub type DesignMatrix = design::DesignMatrix<f64>;
pub type System = dynamics::System<f64>;
pub type Trajectory = dynamics::Trajectory<f64>;






