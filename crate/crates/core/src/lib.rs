//! Neural tree expansion: continuous-action Monte Carlo tree search biased by
//! permutation-invariant policy and value networks, trained by an
//! expert/learner self-improvement loop on multi-robot Reach-Target-Avoid
//! games.

pub mod arena;
pub mod config;
pub mod error;
pub mod game;
pub mod improve;
pub mod neural;
pub mod rng;
pub mod search;

pub use error::{Error, Result};
