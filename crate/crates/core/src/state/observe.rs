use super::resources::ResourceReport;
use super::NetworkState;
use crate::model::{ChainId, Problem};

/// What a subagent sees: per-VNF load ratios of its chain followed by the
/// relative headroom of every function node.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// `b_m`: demand of the chain's m-th VNF over its host's capacity.
    pub vnf_loads: Vec<f64>,
    /// `n_i`: `(C_i - Σ_v C_{i,v}) / C_i`, negative when overloaded.
    pub node_headroom: Vec<f64>,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.vnf_loads.len() + self.node_headroom.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.vnf_loads.iter().chain(&self.node_headroom).copied().collect()
    }
}

fn clip(x: f64, floor: f64) -> f64 {
    x.clamp(floor, 1.0)
}

fn headroom(problem: &Problem, report: &ResourceReport) -> Vec<f64> {
    let floor = problem.config.headroom_floor;
    problem
        .topology
        .function_nodes()
        .iter()
        .map(|&i| {
            let cap = problem.topology.node(i).capacity;
            clip((cap - report.node_demand(i)) / cap, floor)
        })
        .collect()
}

fn vnf_loads(problem: &Problem, state: &NetworkState, chain: ChainId, out: &mut Vec<f64>) {
    let floor = problem.config.headroom_floor;
    for m in 0..problem.chains[chain].vnfs.len() {
        let cap = problem.topology.node(state.node_of(chain, m)).capacity;
        out.push(clip(problem.vnf_demand(chain, m, state.slot()) / cap, floor));
    }
}

/// Observation of one chain; length `g_q + N` with `N` function nodes.
pub fn observe(problem: &Problem, state: &NetworkState, chain: ChainId, report: &ResourceReport) -> Observation {
    let mut loads = Vec::new();
    vnf_loads(problem, state, chain, &mut loads);
    Observation { vnf_loads: loads, node_headroom: headroom(problem, report) }
}

/// Observation over all chains at once, for a single monolithic agent.
pub fn observe_joint(problem: &Problem, state: &NetworkState, report: &ResourceReport) -> Observation {
    let mut loads = Vec::new();
    for q in 0..problem.chains.len() {
        vnf_loads(problem, state, q, &mut loads);
    }
    Observation { vnf_loads: loads, node_headroom: headroom(problem, report) }
}
