//! Objective terms: basic energy, migration data transfer, reconfiguration,
//! QoS penalty and the piecewise per-chain reward.
//!
//! Migration terms read the deployment flags `x` of the state *before* the
//! move, so moving onto a node without an instance pays the deployment
//! delay and cost.

use std::collections::BTreeSet;

use crate::model::{ChainId, ExperimentConfig, NodeId, Problem};
use crate::scalar::Scalar;
use crate::state::{compute_resources, flow_delay, NetworkState, ResourceReport};

/// `ECOST = Σ_i λ_i Ind(Σ_v o_{i,v}) + Σ_{i,v} λ_v o_{i,v}`.
pub fn energy_cost(problem: &Problem, state: &NetworkState) -> f64 {
    let mut total = 0.0;
    for node in problem.topology.nodes() {
        let mut any = false;
        for t in problem.catalog.types() {
            if state.is_active(node.id, t.id) {
                any = true;
                total += t.vm_energy;
            }
        }
        if any {
            total += node.energy;
        }
    }
    total
}

/// Nodes whose mapping indicator changed for VNF `m`: `(node, |Δy|)` pairs
/// with `|Δy| = 1`.
fn changed_nodes(prev: &NetworkState, cur: &NetworkState, chain: ChainId, m: usize) -> Vec<NodeId> {
    let (a, b) = (prev.node_of(chain, m), cur.node_of(chain, m));
    if a == b {
        Vec::new()
    } else {
        vec![a, b]
    }
}

/// `NCOST_q = Σ_m Σ_i (B_q / 2) |Δy| Σ_v h (t_v^c + (1 - x_{i,v}) t_v^d)`.
pub fn migration_data_cost(problem: &Problem, prev: &NetworkState, cur: &NetworkState, chain: ChainId) -> f64 {
    let half_bw = problem.chain_bandwidth(chain, cur.slot()) / 2.0;
    let mut total = 0.0;
    for (m, &v) in problem.chains[chain].vnfs.iter().enumerate() {
        let t = problem.catalog.get(v);
        for i in changed_nodes(prev, cur, chain, m) {
            let missing = if prev.is_deployed(i, v) { 0.0 } else { 1.0 };
            total += half_bw * (t.config_delay + missing * t.deploy_delay);
        }
    }
    total
}

fn directed_edges(path: &[NodeId]) -> BTreeSet<(NodeId, NodeId)> {
    path.windows(2).map(|w| (w[0], w[1])).collect()
}

/// `RCOST_q`: half the deployment cost at each changed endpoint lacking an
/// instance, plus half the number of re-mapped physical link indicators.
pub fn reconfig_cost(problem: &Problem, prev: &NetworkState, cur: &NetworkState, chain: ChainId) -> f64 {
    let mut deploy = 0.0;
    for (m, &v) in problem.chains[chain].vnfs.iter().enumerate() {
        for i in changed_nodes(prev, cur, chain, m) {
            if !prev.is_deployed(i, v) {
                deploy += 0.5 * problem.catalog.get(v).deploy_cost;
            }
        }
    }
    let mut remapped = 0usize;
    for (old, new) in prev.chain_routes(chain).iter().zip(cur.chain_routes(chain)) {
        let (a, b) = (directed_edges(old), directed_edges(new));
        remapped += a.symmetric_difference(&b).count();
    }
    deploy + 0.5 * remapped as f64
}

/// `MCOST_q = β_n NCOST_q + β_r RCOST_q`.
pub fn migration_overhead(problem: &Problem, prev: &NetworkState, cur: &NetworkState, chain: ChainId) -> f64 {
    let cfg = &problem.config;
    cfg.beta_n * migration_data_cost(problem, prev, cur, chain) + cfg.beta_r * reconfig_cost(problem, prev, cur, chain)
}

/// Network-wide `MCOST(t)` written as one literal sum over chains, VNFs,
/// nodes and physical links rather than per chain.
pub fn migration_overhead_all(problem: &Problem, prev: &NetworkState, cur: &NetworkState) -> f64 {
    let cfg = &problem.config;
    let mut ncost = 0.0;
    let mut rcost = 0.0;
    for (q, chain) in problem.chains.iter().enumerate() {
        let bq = problem.chain_bandwidth(q, cur.slot());
        for (m, &v) in chain.vnfs.iter().enumerate() {
            let t = problem.catalog.get(v);
            for i in 0..problem.topology.len() {
                let y_now = f64::from(u8::from(cur.node_of(q, m) == i));
                let y_prev = f64::from(u8::from(prev.node_of(q, m) == i));
                let dy = (y_now - y_prev).abs();
                let x = f64::from(u8::from(prev.is_deployed(i, v)));
                ncost += bq / 2.0 * dy * (t.config_delay + (1.0 - x) * t.deploy_delay);
                rcost += dy / 2.0 * (1.0 - x) * t.deploy_cost;
            }
        }
        for l in 0..chain.vnfs.len().saturating_sub(1) {
            let (old, new) = (prev.route(q, l), cur.route(q, l));
            for link in problem.topology.links() {
                for (i, j) in [(link.a, link.b), (link.b, link.a)] {
                    let z_old = old.windows(2).any(|w| w[0] == i && w[1] == j);
                    let z_new = new.windows(2).any(|w| w[0] == i && w[1] == j);
                    if z_old != z_new {
                        rcost += 0.5;
                    }
                }
            }
        }
    }
    cfg.beta_n * ncost + cfg.beta_r * rcost
}

/// `P(t) = Σ_f max(0, (delay_f - D_f) / D_f) + max(0, PacLoss)`.
pub fn penalty(problem: &Problem, state: &NetworkState, report: &ResourceReport) -> f64 {
    let mut total = 0.0;
    for (q, chain) in problem.chains.iter().enumerate() {
        for &f in &chain.flows {
            let d = flow_delay(problem, state, q, f);
            total += ((d - chain.max_delay) / chain.max_delay).ramp();
        }
    }
    total + report.packet_loss.ramp()
}

/// Weights of the piecewise reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardParams<S> {
    pub alpha_c: S,
    pub beta_c: S,
    pub gamma_c: S,
    pub rho: S,
    pub ecost_max: S,
}

impl RewardParams<f64> {
    pub fn from_problem(problem: &Problem) -> Self {
        let c = &problem.config;
        Self { alpha_c: c.alpha_c, beta_c: c.beta_c, gamma_c: c.gamma_c, rho: c.rho, ecost_max: problem.ecost_max() }
    }
}

/// Per-chain reward: `-(α ECOST + β MCOST_q + γ P)` below the penalty
/// threshold, with `ECOST` replaced by `ECOST_max` once `P >= ρ`. A zero
/// penalty takes the first branch.
pub fn reward<S: Scalar>(params: &RewardParams<S>, ecost: S, mcost: S, penalty: S) -> S {
    let energy = if penalty >= params.rho { params.ecost_max } else { ecost };
    S::zero() - (params.alpha_c * energy + params.beta_c * mcost + params.gamma_c * penalty)
}

/// Everything that results from one chain's step `prev -> cur`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCost {
    pub ncost: f64,
    pub rcost: f64,
    pub mcost: f64,
    pub ecost: f64,
    pub penalty: f64,
    pub reward: f64,
}

pub fn step_cost(problem: &Problem, prev: &NetworkState, cur: &NetworkState, chain: ChainId) -> StepCost {
    let report = compute_resources(problem, cur);
    step_cost_with(problem, prev, cur, chain, &report)
}

pub fn step_cost_with(
    problem: &Problem,
    prev: &NetworkState,
    cur: &NetworkState,
    chain: ChainId,
    report: &ResourceReport,
) -> StepCost {
    let ncost = migration_data_cost(problem, prev, cur, chain);
    let rcost = reconfig_cost(problem, prev, cur, chain);
    let mcost = problem.config.beta_n * ncost + problem.config.beta_r * rcost;
    let ecost = energy_cost(problem, cur);
    let penalty = penalty(problem, cur, report);
    let reward = reward(&RewardParams::from_problem(problem), ecost, mcost, penalty);
    StepCost { ncost, rcost, mcost, ecost, penalty, reward }
}

/// Costs of one slot. `ecost` and `penalty` describe the end-of-slot state;
/// the per-chain vectors are indexed by chain id.
#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    pub slot: usize,
    pub ecost: f64,
    pub ncost: Vec<f64>,
    pub rcost: Vec<f64>,
    pub mcost: Vec<f64>,
    pub penalty: f64,
    pub reward: Vec<f64>,
    /// `α_c ECOST + β_c Σ_q MCOST_q`.
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(slot: usize, ecost: f64, penalty: f64, steps: &[StepCost], config: &ExperimentConfig) -> Self {
        let mcost: Vec<f64> = steps.iter().map(|s| s.mcost).collect();
        let total = config.alpha_c * ecost + config.beta_c * mcost.iter().sum::<f64>();
        Self {
            slot,
            ecost,
            ncost: steps.iter().map(|s| s.ncost).collect(),
            rcost: steps.iter().map(|s| s.rcost).collect(),
            mcost,
            penalty,
            reward: steps.iter().map(|s| s.reward).collect(),
            total,
        }
    }

    pub fn mcost_total(&self) -> f64 {
        self.mcost.iter().sum()
    }
}

/// `COST(T) = Σ_t (α_c ECOST(t) + β_c MCOST(t))`.
pub fn total_cost(breakdowns: &[CostBreakdown], config: &ExperimentConfig) -> f64 {
    breakdowns.iter().map(|b| config.alpha_c * b.ecost + config.beta_c * b.mcost_total()).sum()
}
