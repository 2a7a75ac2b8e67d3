//! Reference policies: a greedy overload reliever, a delay-minimising
//! re-mapper (RM), uniform random moves and an exhaustive single-slot
//! oracle. Greedy and RM are reconstructions from short prose
//! descriptions, not ports of published code.

use rand::Rng;
use thiserror::Error;

use crate::agent::{ActionSpace, AgentError, JointActionSpace};
use crate::model::{ChainId, NodeId, Problem};
use crate::msdf::{apply_ordered, MsdfError};
use crate::state::{chain_total_delay, flow_delay, MigrationAction, NetworkState, ResourceReport};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("joint action space of {size} exceeds the enumeration cap {cap}")]
    Cap { size: String, cap: u128 },
    #[error(transparent)]
    Msdf(#[from] MsdfError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

/// One action per chain, in chain-id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyDecision {
    pub actions: Vec<MigrationAction>,
}

impl PolicyDecision {
    pub fn noop(problem: &Problem) -> Self {
        Self { actions: (0..problem.chains.len()).map(MigrationAction::noop).collect() }
    }

    pub fn migrations(&self) -> usize {
        self.actions.iter().filter(|a| !a.is_noop()).count()
    }
}

fn node_loads(problem: &Problem, report: &ResourceReport) -> Vec<f64> {
    (0..problem.topology.len()).map(|i| report.node_demand(i)).collect()
}

fn delay_ok(problem: &Problem, state: &NetworkState, chain: ChainId) -> bool {
    let max = problem.chains[chain].max_delay;
    problem.chains[chain].flows.iter().all(|&f| flow_delay(problem, state, chain, f) <= max)
}

/// Relieves the most overloaded function node (every overloaded node with
/// `all_nodes`): its VNFs are taken in descending demand and each is sent
/// to the node with the most spare capacity that can absorb it without
/// exceeding capacity and keeps every flow of the chain within its delay
/// bound. A chain moves at most once; a node stops shedding once it is no
/// longer overloaded.
pub fn greedy_step(problem: &Problem, state: &NetworkState, report: &ResourceReport, all_nodes: bool) -> PolicyDecision {
    let topo = &problem.topology;
    let slot = state.slot();
    let mut loads = node_loads(problem, report);
    let cap = |i: NodeId| topo.node(i).capacity;
    let mut overloaded: Vec<NodeId> = topo.function_nodes().iter().copied().filter(|&i| loads[i] > cap(i)).collect();
    overloaded.sort_by(|&a, &b| (loads[b] / cap(b)).total_cmp(&(loads[a] / cap(a))).then(a.cmp(&b)));
    if !all_nodes {
        overloaded.truncate(1);
    }
    let mut decision = PolicyDecision::noop(problem);
    for node in overloaded {
        let mut hosted: Vec<(ChainId, usize, f64)> = Vec::new();
        for (q, nodes) in state.placements().iter().enumerate() {
            for (m, &n) in nodes.iter().enumerate() {
                if n == node {
                    hosted.push((q, m, problem.vnf_demand(q, m, slot)));
                }
            }
        }
        hosted.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
        for (q, m, demand) in hosted {
            if loads[node] <= cap(node) {
                break;
            }
            if !decision.actions[q].is_noop() {
                continue;
            }
            let mut best: Option<(NodeId, f64)> = None;
            for &j in topo.function_nodes() {
                if j == node || loads[j] + demand > cap(j) {
                    continue;
                }
                let spare = cap(j) - loads[j];
                if best.is_some_and(|(_, s)| spare <= s) {
                    continue;
                }
                let action = MigrationAction::moving(q, m, j);
                let Ok(moved) = state.apply_action(problem, action) else { continue };
                if delay_ok(problem, &moved, q) {
                    best = Some((j, spare));
                }
            }
            if let Some((j, _)) = best {
                decision.actions[q] = MigrationAction::moving(q, m, j);
                loads[node] -= demand;
                loads[j] += demand;
            }
        }
    }
    decision
}

/// For each chain in id order, the single move that most reduces the
/// chain's summed flow delay while fitting in the target's remaining
/// capacity; no-op unless the reduction is strict.
pub fn rm_step(problem: &Problem, state: &NetworkState, report: &ResourceReport) -> PolicyDecision {
    let topo = &problem.topology;
    let slot = state.slot();
    let mut loads = node_loads(problem, report);
    let mut decision = PolicyDecision::noop(problem);
    for q in 0..problem.chains.len() {
        let base = chain_total_delay(problem, state, q);
        let mut best: Option<(usize, NodeId, f64)> = None;
        for m in 0..problem.chains[q].vnfs.len() {
            let demand = problem.vnf_demand(q, m, slot);
            let here = state.node_of(q, m);
            for &j in topo.function_nodes() {
                if j == here || loads[j] + demand > topo.node(j).capacity {
                    continue;
                }
                let Ok(moved) = state.apply_action(problem, MigrationAction::moving(q, m, j)) else { continue };
                let d = chain_total_delay(problem, &moved, q);
                let bar = best.map_or(base, |b| b.2);
                if d < bar - 1e-12 * bar.abs().max(1.0) {
                    best = Some((m, j, d));
                }
            }
        }
        if let Some((m, j, _)) = best {
            let demand = problem.vnf_demand(q, m, slot);
            loads[state.node_of(q, m)] -= demand;
            loads[j] += demand;
            decision.actions[q] = MigrationAction::moving(q, m, j);
        }
    }
    decision
}

/// Each chain draws uniformly from its own action space, no-op included.
pub fn random_step<R: Rng + ?Sized>(
    problem: &Problem,
    state: &NetworkState,
    rng: &mut R,
) -> Result<PolicyDecision, BaselineError> {
    let mut actions = Vec::with_capacity(problem.chains.len());
    for q in 0..problem.chains.len() {
        let space = ActionSpace::for_chain(problem, q);
        actions.push(space.encode(q, state.placement(q), rng.gen_range(0..space.len()))?);
    }
    Ok(PolicyDecision { actions })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Largest joint action space that will be enumerated.
    pub cap: u128,
    /// Drop the penalty term and score only `α ECOST + β Σ MCOST_q`.
    pub pure_cost: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { cap: 1_000_000, pure_cost: false }
    }
}

/// Slot objective of applying `actions` (chain-id order) to `state`:
/// `α ECOST + β Σ_q MCOST_q + γ P`, without the penalty term if `pure_cost`.
pub fn decision_objective(
    problem: &Problem,
    state: &NetworkState,
    actions: &[MigrationAction],
    pure_cost: bool,
) -> Result<f64, BaselineError> {
    let mut s = state.clone();
    let slot = apply_ordered(problem, &mut s, actions)?;
    let b = &slot.breakdown;
    let penalty = if pure_cost { 0.0 } else { problem.config.gamma_c * b.penalty };
    Ok(b.total + penalty)
}

/// Exhaustive search over joint single-slot decisions. Ties go to the
/// lexicographically smallest tuple of action indices.
pub fn oracle_step(
    problem: &Problem,
    state: &NetworkState,
    config: &OracleConfig,
) -> Result<(PolicyDecision, f64), BaselineError> {
    let joint = JointActionSpace::for_problem(problem);
    let size = match joint.size() {
        Some(s) if s <= config.cap => s as usize,
        other => {
            let size = other.map_or_else(|| "more than 2^128".to_string(), |s| s.to_string());
            return Err(BaselineError::Cap { size, cap: config.cap });
        }
    };
    let mut best: Option<(Vec<MigrationAction>, f64)> = None;
    for index in 0..size {
        let actions = joint
            .split(index)
            .iter()
            .enumerate()
            .map(|(q, &i)| joint.spaces[q].encode(q, state.placement(q), i))
            .collect::<Result<Vec<_>, _>>()?;
        let cost = decision_objective(problem, state, &actions, config.pure_cost)?;
        let better = match &best {
            None => true,
            Some((_, b)) => cost < b - 1e-12 * b.abs().max(1.0),
        };
        if better {
            best = Some((actions, cost));
        }
    }
    let (actions, cost) = best.expect("joint space contains the no-op");
    Ok((PolicyDecision { actions }, cost))
}
