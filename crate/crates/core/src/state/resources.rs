use std::cmp::Ordering;

use super::NetworkState;
use crate::model::{ChainId, NodeId, Problem};
use crate::scalar::Scalar;

/// Requested (`C^t_{i,v}`) and granted (`R^t_{i,v}`) resources per
/// `[node][type]`, plus the resulting packet loss.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceReport {
    pub requested: Vec<Vec<f64>>,
    pub allocated: Vec<Vec<f64>>,
    pub packet_loss: f64,
}

impl ResourceReport {
    /// Total demand on a node, `Σ_v C^t_{i,v}`.
    pub fn node_demand(&self, node: NodeId) -> f64 {
        self.requested[node].iter().sum()
    }
}

/// `C^t_{i,v} = Σ_q (B_q / Len) Σ_m y h t_v^p` at the state's slot.
pub fn requested_resources(problem: &Problem, state: &NetworkState) -> Vec<Vec<f64>> {
    let mut req = vec![vec![0.0; problem.catalog.len()]; problem.topology.len()];
    for (q, chain) in problem.chains.iter().enumerate() {
        let rate = problem.chain_bandwidth(q, state.slot()) / problem.config.packet_len;
        for (m, &v) in chain.vnfs.iter().enumerate() {
            let node = state.node_of(q, m);
            if let Some(cell) = req.get_mut(node).and_then(|r| r.get_mut(v)) {
                *cell += rate * problem.catalog.get(v).proc_coeff;
            }
        }
    }
    req
}

/// Max-min fair (water-filling) division of `capacity` among `demands`.
///
/// When everything fits each demand is granted in full. Otherwise demands
/// are visited from smallest to largest; each is granted in full while it is
/// below the equal share of what remains, and the rest split the remainder
/// equally.
pub fn maxmin_allocate<S: Scalar>(demands: &[S], capacity: S) -> Vec<S> {
    let mut total = S::zero();
    for &d in demands {
        total += d;
    }
    if total <= capacity {
        return demands.to_vec();
    }
    let mut order: Vec<usize> = (0..demands.len()).collect();
    order.sort_by(|&a, &b| demands[a].partial_cmp(&demands[b]).unwrap_or(Ordering::Equal));
    let mut alloc = vec![S::zero(); demands.len()];
    let mut remaining = capacity.max_of(S::zero());
    for (k, &idx) in order.iter().enumerate() {
        let left = S::from_count(order.len() - k);
        let share = remaining / left;
        if demands[idx] <= share {
            alloc[idx] = demands[idx];
            remaining -= demands[idx];
        } else {
            for &rest in &order[k..] {
                alloc[rest] = share;
            }
            break;
        }
    }
    alloc
}

/// Per-node max-min allocation across the node's VM demands.
pub fn allocate_node(problem: &Problem, node: NodeId, requested: &[f64]) -> Vec<f64> {
    maxmin_allocate(requested, problem.topology.node(node).capacity)
}

/// `Σ_{i,v} (C - R) / t_v^p`, skipping types with a zero coefficient (they
/// request nothing).
pub fn packet_loss(problem: &Problem, requested: &[Vec<f64>], allocated: &[Vec<f64>]) -> f64 {
    let mut loss = 0.0;
    for (req, alloc) in requested.iter().zip(allocated) {
        for (v, (c, r)) in req.iter().zip(alloc).enumerate() {
            let tp = problem.catalog.get(v).proc_coeff;
            if tp > 0.0 && c > r {
                loss += (c - r) / tp;
            }
        }
    }
    loss
}

pub fn compute_resources(problem: &Problem, state: &NetworkState) -> ResourceReport {
    let requested = requested_resources(problem, state);
    let allocated: Vec<Vec<f64>> =
        requested.iter().enumerate().map(|(i, req)| allocate_node(problem, i, req)).collect();
    let packet_loss = packet_loss(problem, &requested, &allocated);
    ResourceReport { requested, allocated, packet_loss }
}

/// `P^node_{i,t}`: load ratio of a node; may exceed 1.
pub fn node_overload_prob(problem: &Problem, node: NodeId, report: &ResourceReport) -> f64 {
    let demand = report.node_demand(node);
    let cap = problem.topology.node(node).capacity;
    if demand == 0.0 {
        0.0
    } else if cap > 0.0 {
        demand / cap
    } else {
        f64::INFINITY
    }
}

/// `P^SFC_{q,t}`: product of the load ratios of the chain's hosting nodes.
pub fn chain_overload_prob(problem: &Problem, state: &NetworkState, chain: ChainId, report: &ResourceReport) -> f64 {
    state.placement(chain).iter().map(|&i| node_overload_prob(problem, i, report)).product()
}

/// Sum over function nodes of the relative excess `max(0, load - 1)`.
pub fn overload_degree(problem: &Problem, report: &ResourceReport) -> f64 {
    problem
        .topology
        .function_nodes()
        .iter()
        .map(|&i| (node_overload_prob(problem, i, report) - 1.0).max(0.0))
        .sum()
}
