//! Contextual bandits with linear payoffs under noisy features.
//!
//! The learner sees `x_i(t) = z_i(t) + ε_i(t)` for each arm while rewards
//! depend on the hidden `z_i(t)` through `E[y] = z_iᵀθ*`.

pub mod env;
pub mod error;
pub mod gradient;
pub mod linalg;
pub mod policies;
pub mod rng;
pub mod runner;

pub use error::{Error, Result};
