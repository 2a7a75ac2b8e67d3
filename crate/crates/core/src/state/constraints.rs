use std::collections::BTreeSet;

use super::delay::flow_delay;
use super::resources::requested_resources;
use super::NetworkState;
use crate::model::{ChainId, FlowId, NodeId, Problem, VnfTypeId};

/// Relative slack for the soft (delay, capacity) checks.
const SOFT_EPS: f64 = 1e-9;

/// A single violated constraint. Delay and capacity violations are soft:
/// they are priced through the penalty term rather than forbidden.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// End-to-end delay above `D_f`.
    Delay { flow: FlowId, delay: f64, max_delay: f64 },
    /// Node demand above capacity; `excess = demand - capacity`.
    Capacity { node: NodeId, demand: f64, capacity: f64, excess: f64 },
    /// VNF not mapped to exactly one function node.
    Mapping { chain: ChainId, vnf: usize, node: NodeId },
    /// More than one VNF of the chain moved within the slot.
    MigrationCount { chain: ChainId, moved: usize },
    /// A demanded VNF type has no instance anywhere.
    TypeAvailability { vnf_type: VnfTypeId },
    /// Flow owned by zero or several chains.
    FlowPartition { flow: FlowId, owners: usize },
    /// Net outflow at `node` on the virtual link `link -> link + 1` does not
    /// match the mapping of its endpoints.
    FlowConservation { chain: ChainId, link: usize, node: NodeId, net_out: i64, expected: i64 },
}

impl Violation {
    pub fn is_hard(&self) -> bool {
        !matches!(self, Violation::Delay { .. } | Violation::Capacity { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn hard(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.is_hard())
    }

    pub fn has_hard(&self) -> bool {
        self.hard().next().is_some()
    }
}

/// Checks `state` (reached from `prev` within one slot) against the delay,
/// capacity, mapping, migration-count, availability, partition and
/// conservation constraints.
pub fn check_constraints(problem: &Problem, prev: &NetworkState, state: &NetworkState) -> ViolationReport {
    let mut out = Vec::new();
    let topo = &problem.topology;

    // soft: delay per flow, capacity per node
    for (q, chain) in problem.chains.iter().enumerate() {
        if !placement_ok(problem, state, q) {
            continue;
        }
        for &f in &chain.flows {
            let delay = flow_delay(problem, state, q, f);
            if delay > chain.max_delay * (1.0 + SOFT_EPS) {
                out.push(Violation::Delay { flow: f, delay, max_delay: chain.max_delay });
            }
        }
    }
    let requested = requested_resources(problem, state);
    for &i in topo.function_nodes() {
        let demand: f64 = requested[i].iter().sum();
        let capacity = topo.node(i).capacity;
        if demand > capacity * (1.0 + SOFT_EPS) {
            out.push(Violation::Capacity { node: i, demand, capacity, excess: demand - capacity });
        }
    }

    // mapping uniqueness onto function nodes
    for (q, nodes) in state.placements().iter().enumerate() {
        for (m, &node) in nodes.iter().enumerate() {
            if !topo.is_function_node(node) {
                out.push(Violation::Mapping { chain: q, vnf: m, node });
            }
        }
    }

    // at most one migrated VNF per chain
    for (q, (now, before)) in state.placements().iter().zip(prev.placements()).enumerate() {
        let moved = now.iter().zip(before).filter(|(a, b)| a != b).count() + now.len().abs_diff(before.len());
        if moved > 1 {
            out.push(Violation::MigrationCount { chain: q, moved });
        }
    }

    // every demanded type deployed somewhere
    let demanded: BTreeSet<VnfTypeId> = problem.chains.iter().flat_map(|c| c.vnfs.iter().copied()).collect();
    for v in demanded {
        let deployed = (0..topo.len()).any(|i| state.is_deployed(i, v));
        if !deployed {
            out.push(Violation::TypeAvailability { vnf_type: v });
        }
    }

    // each flow in exactly one chain
    for f in 0..problem.flows.len() {
        let owners = problem.chains.iter().filter(|c| c.flows.contains(&f)).count();
        if owners != 1 {
            out.push(Violation::FlowPartition { flow: f, owners });
        }
    }

    // conservation on every virtual link's route
    for (q, nodes) in state.placements().iter().enumerate() {
        for link in 0..nodes.len().saturating_sub(1) {
            let path = state.route(q, link);
            let edges: BTreeSet<(NodeId, NodeId)> =
                path.windows(2).filter(|w| topo.has_link(w[0], w[1])).map(|w| (w[0], w[1])).collect();
            let mut net = vec![0i64; topo.len()];
            for &(a, b) in &edges {
                net[a] += 1;
                net[b] -= 1;
            }
            let (from, to) = (nodes[link], nodes[link + 1]);
            for (i, &net_out) in net.iter().enumerate() {
                let expected = i64::from(i == from) - i64::from(i == to);
                if net_out != expected {
                    out.push(Violation::FlowConservation { chain: q, link, node: i, net_out, expected });
                }
            }
        }
    }

    ViolationReport { violations: out }
}

fn placement_ok(problem: &Problem, state: &NetworkState, q: ChainId) -> bool {
    state.placement(q).iter().all(|&n| n < problem.topology.len())
}
