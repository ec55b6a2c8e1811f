//! Time-resolved, per-state-variable observability bounds for nonlinear
//! dynamic systems, and estimators that use them.
//!
//! The pipeline simulates (or ingests) a trajectory, reconstructs inputs by
//! receding-horizon tracking when needed, builds an empirical observability
//! matrix in sliding windows, converts it to Fisher information under a
//! measurement-noise model, and inverts with a small regularization to get
//! the minimum error variance of each state variable over time. On top of
//! that sit data-driven state/observability estimators, an adaptive
//! observability filter, and a measurement-augmented unscented Kalman
//! filter.

pub mod aikf;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod mpc;
pub mod observability;
pub mod trajectory;

pub use error::{Error, Result};
