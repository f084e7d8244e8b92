//! Energy-based dynamics models for model-based planning.
//!
//! An energy network scores state transitions `(s, s')`; plans are sampled
//! directly in state space with MPPI and executed through an inverse dynamics
//! model. The model is learned online from the gap between what was planned
//! and what actually happened.
//!
//! Module map:
//!
//! - [`nn`]: dense MLPs, exact backprop, Adam, checkpoints
//! - [`ebm`]: transition/trajectory energies and the contrastive objective
//! - [`mppi`]: smooth-noise MPPI over state trajectories
//! - [`envs`]: particle, maze and reacher environments
//! - [`trainer`]: online training loop with replay buffers
//! - [`baselines`]: action-conditioned feed-forward model, random policy, RLS
//! - [`bench`]: experiment configs and runners behind the `ebm-bench` binary

pub mod baselines;
pub mod bench;
pub mod ebm;
pub mod envs;
mod error;
pub mod mppi;
pub mod nn;
pub mod trainer;

pub use error::{Error, Result};

/// Seeded generator used everywhere randomness is needed.
pub type Rng = rand_chacha::ChaCha8Rng;

/// `Rng` seeded from a `u64`.
pub fn seeded_rng(seed: u64) -> Rng {
    <Rng as rand::SeedableRng>::seed_from_u64(seed)
}
