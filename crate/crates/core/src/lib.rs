//! Dynamic VNF migration for service function chains.
//!
//! The simulator is organised bottom-up:
//!
//! * [`model`] – substrate topology, VNF catalog, chains, flows, traffic.
//! * [`state`] – placements, routing, resource allocation, delays and
//!   constraint checks for one time slot.
//! * [`cost`] – energy, migration and penalty terms and the per-chain reward.
//! * [`nn`] / [`agent`] – a small MLP and the DQN subagent built on it.
//! * [`msdf`] – successive decisions on snapshots, convergence monitoring.
//! * [`baselines`] – greedy, RM, random and exhaustive oracle policies.
//! * [`harness`] – scenario files, runs, sweeps, comparisons and outputs.
//!
//! Cost kernels and the allocator are generic over [`scalar::Scalar`] (so
//! they also run on exact rationals); learning code is generic over
//! [`scalar::Real`]. The network simulation itself works in `f64`.

pub mod agent;
pub mod baselines;
pub mod cost;
pub mod harness;
pub mod model;
pub mod msdf;
pub mod nn;
pub mod scalar;
pub mod seed;
pub mod state;

use thiserror::Error;

pub use scalar::{Real, Scalar};

pub type QNetwork = nn::Mlp<f64>;
pub type QNetworkF32 = nn::Mlp<f32>;
pub type Subagent = agent::Subagent<f64>;
pub type SubagentF32 = agent::Subagent<f32>;
pub type Msdf = msdf::Msdf<f64>;
pub type ReplayBuffer = agent::ReplayBuffer<f64>;

/// Any failure, tagged with the module it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("model: {0}")]
    Model(#[from] model::ModelError),
    #[error("state: {0}")]
    State(#[from] state::StateError),
    #[error("agent: {0}")]
    Agent(#[from] agent::AgentError),
    #[error("nn: {0}")]
    Nn(#[from] nn::NnError),
    #[error("msdf: {0}")]
    Msdf(#[from] msdf::MsdfError),
    #[error("baselines: {0}")]
    Baselines(#[from] baselines::BaselineError),
    #[error("harness: {0}")]
    Harness(String),
    #[error("harness: {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
