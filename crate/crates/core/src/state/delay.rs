use super::routing::path_delay;
use super::NetworkState;
use crate::model::{ChainId, FlowId, Problem};

/// End-to-end delay of a flow served by `chain`: ingress leg, inter-VNF
/// paths, egress leg, plus the fixed processing delay `t_v^p` of every VNF.
pub fn flow_delay(problem: &Problem, state: &NetworkState, chain: ChainId, flow: FlowId) -> f64 {
    let topo = &problem.topology;
    let links: f64 = state.chain_routes(chain).iter().map(|p| path_delay(topo, p)).sum();
    let processing: f64 = problem.chains[chain].vnfs.iter().map(|&v| problem.catalog.get(v).proc_coeff).sum();
    path_delay(topo, state.ingress(flow)) + links + path_delay(topo, state.egress(flow)) + processing
}

/// Delay of `flow` through the chain that owns it; `None` for unassigned flows.
pub fn end_to_end_delay(problem: &Problem, state: &NetworkState, flow: FlowId) -> Option<f64> {
    let chain = problem.chains.iter().position(|c| c.flows.contains(&flow))?;
    Some(flow_delay(problem, state, chain, flow))
}

/// Sum of the delays of all flows of a chain.
pub fn chain_total_delay(problem: &Problem, state: &NetworkState, chain: ChainId) -> f64 {
    problem.chains[chain].flows.iter().map(|&f| flow_delay(problem, state, chain, f)).sum()
}
