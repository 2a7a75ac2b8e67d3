//! Successive multi-agent decision making.
//!
//! Each slot, chains are ordered by overload probability; subagents decide
//! one after another on a private snapshot, each seeing the intermediate
//! state left by its predecessors; the concatenated strategy is then
//! replayed on the real network in the same order.

mod monitor;
mod runner;

use rand::Rng;
use thiserror::Error;

pub use monitor::ConvergenceMonitor;
pub use runner::{
    evaluate, run, run_episode, train, EpisodeMetrics, Learner, Monolithic, Msdf, MsdfConfig, MsdfRun, TrainOutcome,
};

use crate::agent::{AgentError, Subagent};
use crate::cost::{step_cost_with, CostBreakdown, StepCost};
use crate::model::{ChainId, Problem};
use crate::scalar::Real;
use crate::state::{
    chain_overload_prob, compute_resources, observe, overload_degree, MigrationAction, NetworkState, ResourceReport,
    StateError,
};

#[derive(Debug, Error)]
pub enum MsdfError {
    #[error("strategy was planned on state {planned:#018x}, real state is {found:#018x}")]
    Fingerprint { planned: u64, found: u64 },
    #[error("decision order must list every chain exactly once")]
    Order,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

/// Chains by descending `P^SFC`, lower id first on ties.
pub fn sort_chains(problem: &Problem, state: &NetworkState, report: &ResourceReport) -> Vec<ChainId> {
    let probs: Vec<f64> =
        (0..problem.chains.len()).map(|q| chain_overload_prob(problem, state, q, report)).collect();
    let mut order: Vec<ChainId> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    order
}

/// Actions in decision order, tied to the state they were planned on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointStrategy {
    pub fingerprint: u64,
    pub actions: Vec<MigrationAction>,
    /// Action index chosen by each subagent, parallel to `actions`.
    pub indices: Vec<usize>,
}

impl JointStrategy {
    pub fn order(&self) -> Vec<ChainId> {
        self.actions.iter().map(|a| a.chain).collect()
    }
}

/// One chain's move within a slot, with the observations just before and
/// after it.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub action: MigrationAction,
    pub obs: Vec<f64>,
    pub next_obs: Vec<f64>,
    pub cost: StepCost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotResult {
    pub slot: usize,
    /// Decision order.
    pub steps: Vec<StepRecord>,
    /// Per-chain costs indexed by chain id.
    pub breakdown: CostBreakdown,
    pub overload_degree: f64,
    pub migrations: usize,
    pub report: ResourceReport,
}

impl SlotResult {
    pub fn reward_sum(&self) -> f64 {
        self.breakdown.reward.iter().sum()
    }
}

fn check_order(problem: &Problem, actions: &[MigrationAction]) -> Result<(), MsdfError> {
    let mut seen = vec![false; problem.chains.len()];
    for a in actions {
        if a.chain >= seen.len() || std::mem::replace(&mut seen[a.chain], true) {
            return Err(MsdfError::Order);
        }
    }
    if seen.iter().all(|&s| s) {
        Ok(())
    } else {
        Err(MsdfError::Order)
    }
}

/// Applies one chain's action, updating `report` to the new state.
fn step_chain(
    problem: &Problem,
    state: &mut NetworkState,
    report: &mut ResourceReport,
    action: MigrationAction,
) -> Result<StepRecord, StateError> {
    let q = action.chain;
    let obs = observe(problem, state, q, report).to_vec();
    let prev = state.clone();
    state.apply_in_place(problem, action)?;
    if !action.is_noop() {
        *report = compute_resources(problem, state);
    }
    let cost = step_cost_with(problem, &prev, state, q, report);
    let next_obs = observe(problem, state, q, report).to_vec();
    Ok(StepRecord { action, obs, next_obs, cost })
}

fn finish_slot(problem: &Problem, state: &NetworkState, steps: Vec<StepRecord>, report: ResourceReport) -> SlotResult {
    let mut by_chain: Vec<StepCost> = vec![
        StepCost { ncost: 0.0, rcost: 0.0, mcost: 0.0, ecost: 0.0, penalty: 0.0, reward: 0.0 };
        problem.chains.len()
    ];
    for s in &steps {
        by_chain[s.action.chain] = s.cost;
    }
    let last = steps.last().map(|s| s.cost);
    let (ecost, penalty) = last.map(|c| (c.ecost, c.penalty)).unwrap_or((0.0, 0.0));
    let breakdown = CostBreakdown::new(state.slot(), ecost, penalty, &by_chain, &problem.config);
    SlotResult {
        slot: state.slot(),
        migrations: steps.iter().filter(|s| !s.action.is_noop()).count(),
        overload_degree: overload_degree(problem, &report),
        steps,
        breakdown,
        report,
    }
}

/// Applies one action per chain in the given order, pricing each step
/// against the state its predecessor left behind. The slot is not advanced.
pub fn apply_ordered(
    problem: &Problem,
    state: &mut NetworkState,
    actions: &[MigrationAction],
) -> Result<SlotResult, MsdfError> {
    check_order(problem, actions)?;
    let mut report = compute_resources(problem, state);
    let mut steps = Vec::with_capacity(actions.len());
    for &a in actions {
        steps.push(step_chain(problem, state, &mut report, a)?);
    }
    Ok(finish_slot(problem, state, steps, report))
}

/// Lets the subagents decide in `order` on a snapshot of `real`. Returns
/// the strategy and the simulated slot; `real` is not touched.
pub fn plan_joint<S: Real, R: Rng + ?Sized>(
    problem: &Problem,
    real: &NetworkState,
    agents: &[Subagent<S>],
    order: &[ChainId],
    exploit: f64,
    rng: &mut R,
) -> Result<(JointStrategy, SlotResult), MsdfError> {
    let mut sim = real.snapshot();
    let mut report = compute_resources(problem, &sim);
    let mut actions = Vec::with_capacity(order.len());
    let mut indices = Vec::with_capacity(order.len());
    let mut steps = Vec::with_capacity(order.len());
    for &q in order {
        let agent = agents.get(q).ok_or(MsdfError::Order)?;
        let obs = agent.observe(problem, &sim, &report);
        let (index, action) = agent.decide(&sim, &obs, exploit, rng)?;
        steps.push(step_chain(problem, &mut sim, &mut report, action)?);
        actions.push(action);
        indices.push(index);
    }
    check_order(problem, &actions)?;
    let strategy = JointStrategy { fingerprint: real.fingerprint(), actions, indices };
    Ok((strategy, finish_slot(problem, &sim, steps, report)))
}

/// Replays a planned strategy on the real network.
pub fn apply_joint(
    problem: &Problem,
    real: &mut NetworkState,
    strategy: &JointStrategy,
) -> Result<SlotResult, MsdfError> {
    let found = real.fingerprint();
    if found != strategy.fingerprint {
        return Err(MsdfError::Fingerprint { planned: strategy.fingerprint, found });
    }
    apply_ordered(problem, real, &strategy.actions)
}
