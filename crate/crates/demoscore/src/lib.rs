//! Score imperfect demonstrations by feasibility and optimality, then
//! train a policy by weighted imitation of state transitions.
//!
//! Demonstrations may be suboptimal, or produced by an agent with
//! different dynamics than the target. The pipeline:
//!
//! 1. fit an inverse dynamics model of the target on random feasible
//!    rollouts ([`invdyn`]),
//! 2. replay each demonstration through that model and score how closely
//!    the target can track it ([`feasibility`]),
//! 3. score each demonstration's discounted return against the best
//!    feasible return from nearby initial states ([`optimality`]),
//! 4. combine the scores into a sampling distribution over state
//!    transitions ([`weighting`]),
//! 5. train a policy by behavior cloning on transitions sampled from
//!    that distribution, recovering actions with the inverse dynamics
//!    model ([`imitation`]).
//!
//! The [`env`] module provides two deterministic kinematic environments
//! (a 2D driving task and a one-joint reacher), each with two dynamics
//! variants, plus hand-crafted demonstration controllers. [`pipeline`]
//! orchestrates end-to-end experiments with reproducible manifests, and
//! the `demoscore` binary exposes it as a CLI.
//!
//! ## Runnable examples
//!
//! ```text
//! cargo run --release -p demoscore --example collect_demos
//! cargo run --release -p demoscore --example train_inverse_dynamics
//! cargo run --release -p demoscore --example feasibility_scoring
//! cargo run --release -p demoscore --example rectified_optimality
//! cargo run --release -p demoscore --example weighted_sampling
//! cargo run --release -p demoscore --example full_pipeline
//! ```

pub mod config;
pub mod densenet;
pub mod env;
pub mod error;
pub mod feasibility;
pub mod imitation;
pub mod invdyn;
pub mod optimality;
pub mod pipeline;
pub mod seeding;
pub mod traj;
pub mod weighting;

pub use error::{Error, Result};
