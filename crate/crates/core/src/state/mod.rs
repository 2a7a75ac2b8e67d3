//! Per-slot network state and the migration semantics applied to it.
//!
//! A [`NetworkState`] holds the VNF mapping (`y`), deployed instances (`x`),
//! active instances (`o`) and explicit routes (`z`, stored as node paths).
//! It is a plain value: cloning it is the snapshot operation.

mod constraints;
mod delay;
mod dump;
mod observe;
mod resources;
pub mod routing;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::model::{ChainId, FlowId, NodeId, Problem};

pub use constraints::{check_constraints, Violation, ViolationReport};
pub use delay::{chain_total_delay, end_to_end_delay, flow_delay};
pub use dump::{placement_rows, resource_rows};
pub use observe::{observe, observe_joint, Observation};
pub use resources::{
    allocate_node, chain_overload_prob, compute_resources, maxmin_allocate, node_overload_prob,
    overload_degree, packet_loss, requested_resources, ResourceReport,
};
pub use routing::{path_delay, shortest_path, RoutingTable};

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("node {0} is not a function node")]
    NotFunctionNode(NodeId),
    #[error("chain {0} already migrated a VNF this slot")]
    AlreadyMoved(ChainId),
    #[error("VNF {vnf} of chain {chain} already sits on node {node}")]
    SameNode { chain: ChainId, vnf: usize, node: NodeId },
    #[error("chain {chain} has no VNF at position {vnf}")]
    UnknownVnf { chain: ChainId, vnf: usize },
    #[error("unknown chain {0}")]
    UnknownChain(ChainId),
    #[error("infeasible: total demand {demand} exceeds total capacity {capacity}")]
    Infeasible { demand: f64, capacity: f64 },
    #[error("placement shape does not match the chains")]
    Shape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MigrationKind {
    NoOp,
    /// Move the VNF at `vnf` (0-based position in the chain) to `target`.
    Move { vnf: usize, target: NodeId },
}

/// One chain's decision for a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MigrationAction {
    pub chain: ChainId,
    pub kind: MigrationKind,
}

impl MigrationAction {
    pub fn noop(chain: ChainId) -> Self {
        Self { chain, kind: MigrationKind::NoOp }
    }

    pub fn moving(chain: ChainId, vnf: usize, target: NodeId) -> Self {
        Self { chain, kind: MigrationKind::Move { vnf, target } }
    }

    pub fn is_noop(&self) -> bool {
        self.kind == MigrationKind::NoOp
    }
}

/// Unvalidated constituents of a [`NetworkState`], for tooling and tests
/// that need to build states violating the usual invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateParts {
    pub slot: usize,
    pub placement: Vec<Vec<NodeId>>,
    pub deployed: Vec<Vec<bool>>,
    pub chain_routes: Vec<Vec<Vec<NodeId>>>,
    pub ingress: Vec<Vec<NodeId>>,
    pub egress: Vec<Vec<NodeId>>,
    pub moved: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NetworkState {
    slot: usize,
    /// `[chain][position] -> node`
    placement: Vec<Vec<NodeId>>,
    /// `[node][type]`: an instance exists (`x`).
    deployed: Vec<Vec<bool>>,
    /// `[node][type]`: the instance serves at least one chain VNF (`o`).
    active: Vec<Vec<bool>>,
    /// `[chain][link]`: path from the VNF at `link` to the one at `link + 1`.
    chain_routes: Vec<Vec<Vec<NodeId>>>,
    /// `[flow]`: source to first VNF.
    ingress: Vec<Vec<NodeId>>,
    /// `[flow]`: last VNF to destination.
    egress: Vec<Vec<NodeId>>,
    /// Chains that already migrated during this slot.
    moved: Vec<bool>,
}

impl NetworkState {
    /// Builds a state from an explicit mapping: instances are deployed
    /// exactly where the mapping needs them and all routes are shortest paths.
    pub fn from_placement(problem: &Problem, placement: Vec<Vec<NodeId>>, slot: usize) -> Result<Self, StateError> {
        if placement.len() != problem.chains.len()
            || placement.iter().zip(&problem.chains).any(|(p, c)| p.len() != c.vnfs.len())
        {
            return Err(StateError::Shape);
        }
        for p in &placement {
            for &node in p {
                if !problem.topology.is_function_node(node) {
                    return Err(StateError::NotFunctionNode(node));
                }
            }
        }
        let n_nodes = problem.topology.len();
        let n_types = problem.catalog.len();
        let mut state = Self {
            slot,
            placement,
            deployed: vec![vec![false; n_types]; n_nodes],
            active: vec![vec![false; n_types]; n_nodes],
            chain_routes: problem.chains.iter().map(|c| vec![Vec::new(); c.vnfs.len() - 1]).collect(),
            ingress: vec![Vec::new(); problem.flows.len()],
            egress: vec![Vec::new(); problem.flows.len()],
            moved: vec![false; problem.chains.len()],
        };
        state.refresh_active(problem);
        state.deployed = state.active.clone();
        for q in 0..problem.chains.len() {
            state.reroute_chain(problem, q);
        }
        Ok(state)
    }

    pub fn from_parts(problem: &Problem, parts: StateParts) -> Self {
        let mut state = Self {
            slot: parts.slot,
            placement: parts.placement,
            deployed: parts.deployed,
            active: Vec::new(),
            chain_routes: parts.chain_routes,
            ingress: parts.ingress,
            egress: parts.egress,
            moved: parts.moved,
        };
        state.active = vec![vec![false; problem.catalog.len()]; problem.topology.len()];
        state.refresh_active(problem);
        state
    }

    pub fn into_parts(self) -> StateParts {
        StateParts {
            slot: self.slot,
            placement: self.placement,
            deployed: self.deployed,
            chain_routes: self.chain_routes,
            ingress: self.ingress,
            egress: self.egress,
            moved: self.moved,
        }
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn set_slot(&mut self, slot: usize) {
        self.slot = slot;
    }

    pub fn placement(&self, chain: ChainId) -> &[NodeId] {
        &self.placement[chain]
    }

    pub fn placements(&self) -> &[Vec<NodeId>] {
        &self.placement
    }

    pub fn node_of(&self, chain: ChainId, vnf: usize) -> NodeId {
        self.placement[chain][vnf]
    }

    pub fn is_deployed(&self, node: NodeId, vnf_type: usize) -> bool {
        self.deployed[node][vnf_type]
    }

    pub fn is_active(&self, node: NodeId, vnf_type: usize) -> bool {
        self.active[node][vnf_type]
    }

    /// A node with no active instance runs in low-power mode.
    pub fn is_idle(&self, node: NodeId) -> bool {
        !self.active[node].iter().any(|&a| a)
    }

    pub fn route(&self, chain: ChainId, link: usize) -> &[NodeId] {
        &self.chain_routes[chain][link]
    }

    pub fn chain_routes(&self, chain: ChainId) -> &[Vec<NodeId>] {
        &self.chain_routes[chain]
    }

    pub fn ingress(&self, flow: FlowId) -> &[NodeId] {
        &self.ingress[flow]
    }

    pub fn egress(&self, flow: FlowId) -> &[NodeId] {
        &self.egress[flow]
    }

    pub fn has_moved(&self, chain: ChainId) -> bool {
        self.moved[chain]
    }

    /// Independent deep copy.
    pub fn snapshot(&self) -> Self {
        self.clone()
    }

    /// Stable 64-bit digest of the full state, used to detect staleness.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }

    /// Returns the state after `action`; `self` is left untouched.
    pub fn apply_action(&self, problem: &Problem, action: MigrationAction) -> Result<Self, StateError> {
        let mut next = self.clone();
        next.apply_in_place(problem, action)?;
        Ok(next)
    }

    pub fn apply_in_place(&mut self, problem: &Problem, action: MigrationAction) -> Result<(), StateError> {
        let q = action.chain;
        if q >= self.placement.len() {
            return Err(StateError::UnknownChain(q));
        }
        let MigrationKind::Move { vnf, target } = action.kind else {
            return Ok(());
        };
        if vnf >= self.placement[q].len() {
            return Err(StateError::UnknownVnf { chain: q, vnf });
        }
        if !problem.topology.is_function_node(target) {
            return Err(StateError::NotFunctionNode(target));
        }
        if self.placement[q][vnf] == target {
            return Err(StateError::SameNode { chain: q, vnf, node: target });
        }
        if self.moved[q] {
            return Err(StateError::AlreadyMoved(q));
        }
        self.relocate(problem, q, vnf, target);
        Ok(())
    }

    /// Moves a VNF without enforcing the one-move-per-slot rule: deploys an
    /// instance at the target when missing, re-routes the touched virtual
    /// links and refreshes activity flags.
    pub fn relocate(&mut self, problem: &Problem, chain: ChainId, vnf: usize, target: NodeId) {
        let v = problem.chains[chain].vnfs[vnf];
        if !self.deployed[target][v] {
            self.deployed[target][v] = true;
        }
        self.placement[chain][vnf] = target;
        self.moved[chain] = true;
        self.reroute_chain(problem, chain);
        self.refresh_active(problem);
    }

    /// Closes the slot: retracts instances left without traffic and clears
    /// the per-slot move flags.
    pub fn advance_slot(&mut self) {
        self.slot += 1;
        self.moved.iter_mut().for_each(|m| *m = false);
        for (dep, act) in self.deployed.iter_mut().zip(&self.active) {
            for (d, a) in dep.iter_mut().zip(act) {
                *d = *d && *a;
            }
        }
    }

    fn refresh_active(&mut self, problem: &Problem) {
        for row in &mut self.active {
            row.iter_mut().for_each(|a| *a = false);
        }
        for (q, nodes) in self.placement.iter().enumerate() {
            for (m, &node) in nodes.iter().enumerate() {
                if let (Some(row), Some(&v)) = (self.active.get_mut(node), problem.chains[q].vnfs.get(m)) {
                    if let Some(a) = row.get_mut(v) {
                        *a = true;
                    }
                }
            }
        }
    }

    fn reroute_chain(&mut self, problem: &Problem, q: ChainId) {
        let routes = problem.topology.routes();
        let nodes = &self.placement[q];
        for (link, route) in self.chain_routes[q].iter_mut().enumerate() {
            *route = routes.path(nodes[link], nodes[link + 1]).to_vec();
        }
        let first = nodes[0];
        let last = nodes[nodes.len() - 1];
        for &f in &problem.chains[q].flows {
            let flow = &problem.flows[f];
            self.ingress[f] = routes.path(flow.src, first).to_vec();
            self.egress[f] = routes.path(last, flow.dst).to_vec();
        }
    }
}

/// Deterministic first-fit placement at slot 0, chains and positions in
/// ascending order, nodes in ascending id. A VNF that fits nowhere goes to
/// the node with the most headroom.
pub fn initial_placement(problem: &Problem) -> Result<NetworkState, StateError> {
    let fnodes = problem.topology.function_nodes();
    let capacity: f64 = fnodes.iter().map(|&i| problem.topology.node(i).capacity).sum();
    let mut demand = 0.0;
    for q in 0..problem.chains.len() {
        for m in 0..problem.chains[q].vnfs.len() {
            demand += problem.vnf_demand(q, m, 0);
        }
    }
    if demand > capacity {
        return Err(StateError::Infeasible { demand, capacity });
    }
    let mut remaining: Vec<f64> = fnodes.iter().map(|&i| problem.topology.node(i).capacity).collect();
    let mut placement = Vec::with_capacity(problem.chains.len());
    for (q, chain) in problem.chains.iter().enumerate() {
        let mut nodes = Vec::with_capacity(chain.vnfs.len());
        for m in 0..chain.vnfs.len() {
            let d = problem.vnf_demand(q, m, 0);
            let slot = remaining.iter().position(|&r| r >= d).unwrap_or_else(|| {
                let mut best = 0;
                for k in 1..remaining.len() {
                    if remaining[k] > remaining[best] {
                        best = k;
                    }
                }
                best
            });
            remaining[slot] -= d;
            nodes.push(fnodes[slot]);
        }
        placement.push(nodes);
    }
    NetworkState::from_placement(problem, placement, 0)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::model::Topology;

    #[test]
    fn single_vnf_goes_to_lowest_id() {
        let topo = Topology::parse("[nodes]\n0,10,1,1\n1,10,1,1\n[links]\n0,1,1\n").unwrap();
        let p = problem(topo, &[vec![0]], &[(0, 1, 20.0)], 100.0);
        let s = initial_placement(&p).unwrap();
        assert_eq!(s.placement(0), &[0]);
    }

    #[test]
    fn first_fit_splits_when_full() {
        // two VNFs with t_p = 1, B = 60, Len = 10 -> demand 6 each; capacity 10
        let topo = Topology::parse("[nodes]\n0,10,1,1\n1,10,1,1\n[links]\n0,1,1\n").unwrap();
        let p = problem(topo, &[vec![1, 1]], &[(0, 1, 60.0)], 100.0);
        let s = initial_placement(&p).unwrap();
        assert_eq!(s.placement(0), &[0, 1]);
    }

    #[test]
    fn infeasible_total_demand() {
        // demand 25 on capacity 20
        let topo = Topology::parse("[nodes]\n0,10,1,1\n1,10,1,1\n[links]\n0,1,1\n").unwrap();
        let p = problem(topo, &[vec![1]], &[(0, 1, 250.0)], 100.0);
        assert!(matches!(initial_placement(&p), Err(StateError::Infeasible { .. })));
    }

    #[test]
    fn noop_is_identity() {
        let p = problem(line3(), &[vec![0, 1]], &[(0, 2, 10.0)], 100.0);
        let s = initial_placement(&p).unwrap();
        let t = s.apply_action(&p, MigrationAction::noop(0)).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn move_reroutes_touched_links() {
        let p = problem(line3(), &[vec![0, 0]], &[(0, 2, 10.0)], 100.0);
        let s = NetworkState::from_placement(&p, vec![vec![1, 2]], 0).unwrap();
        assert_eq!(s.route(0, 0), &[1, 2]);
        assert_eq!(s.ingress(0), &[0, 1]);
        // type 0 already deployed on node 2
        let t = s.apply_action(&p, MigrationAction::moving(0, 0, 2)).unwrap();
        assert_eq!(t.placement(0), &[2, 2]);
        assert_eq!(t.route(0, 0), &[2]);
        assert_eq!(t.ingress(0), &[0, 1, 2]);
        assert!(t.is_deployed(1, 0), "stale instance kept until end of slot");
        assert!(!t.is_active(1, 0));
        assert!(t.is_idle(1));
        let mut u = t.clone();
        u.advance_slot();
        assert!(!u.is_deployed(1, 0));
    }

    #[test]
    fn move_to_empty_node_deploys() {
        let p = problem(line3(), &[vec![0]], &[(0, 2, 10.0)], 100.0);
        let s = NetworkState::from_placement(&p, vec![vec![0]], 0).unwrap();
        assert!(!s.is_deployed(2, 0));
        let t = s.apply_action(&p, MigrationAction::moving(0, 0, 2)).unwrap();
        assert!(t.is_deployed(2, 0));
    }

    #[test]
    fn second_move_in_slot_rejected() {
        let p = problem(line3(), &[vec![0, 1]], &[(0, 2, 10.0)], 100.0);
        let s = initial_placement(&p).unwrap();
        let t = s.apply_action(&p, MigrationAction::moving(0, 0, 1)).unwrap();
        assert_eq!(t.apply_action(&p, MigrationAction::moving(0, 1, 2)), Err(StateError::AlreadyMoved(0)));
        assert_eq!(s.apply_action(&p, MigrationAction::moving(0, 0, 0)), Err(StateError::SameNode { chain: 0, vnf: 0, node: 0 }));
    }

    #[test]
    fn snapshot_is_isolated() {
        let p = problem(line3(), &[vec![0]], &[(0, 2, 10.0)], 100.0);
        let s = initial_placement(&p).unwrap();
        let mut copy = s.snapshot();
        assert_eq!(copy, s);
        assert_eq!(copy.snapshot(), copy);
        copy.apply_in_place(&p, MigrationAction::moving(0, 0, 1)).unwrap();
        assert_eq!(s.placement(0), &[0]);
        assert_ne!(copy.fingerprint(), s.fingerprint());
    }
}
