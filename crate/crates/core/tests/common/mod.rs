#![allow(dead_code)]

pub mod props;

use std::path::PathBuf;

use sfcmig::model::{assign_flows_to_chains, ExperimentConfig, Flow, Problem, ServiceChain, Topology, VnfCatalog};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn scenario(name: &str) -> PathBuf {
    fixture("scenarios").join(name)
}

/// Two types: t_p 0.5 and 1.0; both t_c 1, t_d 2, D 6, λ_v 0.5.
pub fn catalog() -> VnfCatalog {
    VnfCatalog::parse("0,0.5,1,2,6,0.5\n1,1,1,2,6,0.5\n").unwrap()
}

/// `0 - 1 - 2`, unit delays, capacity 10, λ_i 1.
pub fn line3() -> Topology {
    Topology::parse("[nodes]\n0,10,1,1\n1,10,1,1\n2,10,1,1\n[links]\n0,1,1\n1,2,1\n").unwrap()
}

/// Chains as type lists; flow `k` (src, dst, bw) belongs to chain
/// `k % chains`, one slot per bandwidth value.
pub fn problem_multi(topology: Topology, chains: &[Vec<usize>], flows: &[(usize, usize, Vec<f64>)], max_delay: f64) -> Problem {
    let n = chains.len();
    let chains: Vec<ServiceChain> =
        chains.iter().enumerate().map(|(q, v)| ServiceChain::new(q, format!("s{q}"), v.clone(), max_delay)).collect();
    let mut flows: Vec<Flow> = flows
        .iter()
        .enumerate()
        .map(|(id, (src, dst, bw))| Flow {
            id,
            src: *src,
            dst: *dst,
            service: format!("s{}", id % n),
            bandwidth: bw.clone(),
            max_delay: 0.0,
        })
        .collect();
    let chains = assign_flows_to_chains(&mut flows, chains).unwrap();
    let config = ExperimentConfig { packet_len: 10.0, slots: flows[0].bandwidth.len(), ..Default::default() };
    Problem::new(topology, catalog(), chains, flows, config).unwrap()
}

pub fn problem(topology: Topology, chains: &[Vec<usize>], flows: &[(usize, usize, f64)], max_delay: f64) -> Problem {
    let flows: Vec<_> = flows.iter().map(|&(s, d, b)| (s, d, vec![b])).collect();
    problem_multi(topology, chains, &flows, max_delay)
}
