//! Immutable problem definition: substrate topology, VNF catalog, chains,
//! flows and the experiment weights.

mod catalog;
mod chain;
mod topology;
mod traffic;

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catalog::{load_catalog, VnfCatalog, VnfType};
pub use chain::{assign_flows_to_chains, Flow, ServiceChain};
pub use topology::{load_topology, PhysicalLink, PhysicalNode, Topology};
pub use traffic::{generate_traffic, ProfileKind, TraceTable, TrafficProfile};

pub type NodeId = usize;
pub type VnfTypeId = usize;
pub type ChainId = usize;
pub type FlowId = usize;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{}line {line}: {message}", .file.as_ref().map(|f| format!("{f}: ")).unwrap_or_default())]
    Parse { file: Option<String>, line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("unknown traffic profile `{0}`")]
    UnknownProfile(String),
    #[error("flow {flow} (service `{service}`) matches {matches} chains, expected exactly one")]
    Assignment { flow: FlowId, service: String, matches: usize },
}

impl ModelError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Self::Parse { file: None, line, message: message.into() }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Self::Invalid(message.into())
    }

    pub(crate) fn in_file(self, path: &Path) -> Self {
        match self {
            Self::Parse { line, message, .. } => {
                Self::Parse { file: Some(path.display().to_string()), line, message }
            }
            Self::Invalid(m) => Self::Invalid(format!("{}: {m}", path.display())),
            other => other,
        }
    }
}

pub(crate) fn parse_field<T: FromStr>(s: &str, line: usize, name: &str) -> Result<T, ModelError> {
    s.parse().map_err(|_| ModelError::parse(line, format!("invalid {name} `{s}`")))
}

pub(crate) fn parse_bool(s: &str, line: usize) -> Result<bool, ModelError> {
    match s {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        _ => Err(ModelError::parse(line, format!("invalid is_function `{s}`"))),
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, ModelError> {
    std::fs::read_to_string(path).map_err(|source| ModelError::Io { path: path.display().to_string(), source })
}

/// Cost weights and simulation constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Energy weight `α_c`.
    pub alpha_c: f64,
    /// Migration weight `β_c`; `α_c + β_c = 1`.
    pub beta_c: f64,
    /// Penalty weight `γ_c`.
    pub gamma_c: f64,
    /// Normaliser for the data-transfer cost.
    pub beta_n: f64,
    /// Normaliser for the reconfiguration cost.
    pub beta_r: f64,
    /// Penalty threshold `ρ` separating the two reward branches.
    pub rho: f64,
    /// Packet length `Len`.
    pub packet_len: f64,
    /// Slots per operational cycle `T`.
    pub slots: usize,
    /// Overrides the derived `ECOST_max`.
    pub ecost_max: Option<f64>,
    /// Lower clip for observed node headroom.
    pub headroom_floor: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alpha_c: 0.5,
            beta_c: 0.5,
            gamma_c: 1.0,
            beta_n: 0.5,
            beta_r: 0.5,
            rho: 0.1,
            packet_len: 1.0,
            slots: 24,
            ecost_max: None,
            headroom_floor: -1.0,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let weights = [self.alpha_c, self.beta_c, self.gamma_c, self.beta_n, self.beta_r, self.rho];
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(ModelError::invalid("cost weights and rho must be non-negative"));
        }
        if (self.alpha_c + self.beta_c - 1.0).abs() > 1e-9 {
            return Err(ModelError::invalid("alpha_c + beta_c must equal 1"));
        }
        if !(self.packet_len > 0.0) {
            return Err(ModelError::invalid("packet_len must be positive"));
        }
        if self.slots == 0 {
            return Err(ModelError::invalid("slots must be positive"));
        }
        if let Some(e) = self.ecost_max {
            if !(e.is_finite() && e >= 0.0) {
                return Err(ModelError::invalid("ecost_max must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Everything that stays fixed during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub topology: Topology,
    pub catalog: VnfCatalog,
    pub chains: Vec<ServiceChain>,
    pub flows: Vec<Flow>,
    pub config: ExperimentConfig,
}

impl Problem {
    /// Validates cross references. Chains must already carry their flows
    /// (see [`assign_flows_to_chains`]).
    pub fn new(
        topology: Topology,
        catalog: VnfCatalog,
        chains: Vec<ServiceChain>,
        flows: Vec<Flow>,
        config: ExperimentConfig,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        for (idx, c) in chains.iter().enumerate() {
            if c.id != idx {
                return Err(ModelError::invalid(format!("chain ids must be contiguous; found {} at {idx}", c.id)));
            }
            if c.vnfs.is_empty() {
                return Err(ModelError::invalid(format!("chain {idx} has no VNFs")));
            }
            if let Some(v) = c.vnfs.iter().find(|&&v| v >= catalog.len()) {
                return Err(ModelError::invalid(format!("chain {idx} references unknown VNF type {v}")));
            }
            if !(c.max_delay > 0.0) {
                return Err(ModelError::invalid(format!("chain {idx} needs a positive max delay")));
            }
            if let Some(f) = c.flows.iter().find(|&&f| f >= flows.len()) {
                return Err(ModelError::invalid(format!("chain {idx} references unknown flow {f}")));
            }
        }
        for (idx, f) in flows.iter().enumerate() {
            if f.id != idx {
                return Err(ModelError::invalid(format!("flow ids must be contiguous; found {} at {idx}", f.id)));
            }
            if f.src >= topology.len() || f.dst >= topology.len() {
                return Err(ModelError::invalid(format!("flow {idx} endpoint outside topology")));
            }
            if f.bandwidth.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
                return Err(ModelError::invalid(format!("flow {idx} has negative bandwidth")));
            }
        }
        for f in 0..flows.len() {
            let owners = chains.iter().filter(|c| c.flows.contains(&f)).count();
            if owners != 1 {
                return Err(ModelError::invalid(format!("flow {f} belongs to {owners} chains")));
            }
        }
        Ok(Self { topology, catalog, chains, flows, config })
    }

    /// `B_q(t)`: total bandwidth of the chain's member flows.
    pub fn chain_bandwidth(&self, chain: ChainId, slot: usize) -> f64 {
        self.chains[chain].flows.iter().map(|&f| self.flows[f].bandwidth_at(slot)).sum()
    }

    /// Resource demand of one VNF of a chain: `B_q / Len * t_v^p`.
    pub fn vnf_demand(&self, chain: ChainId, position: usize, slot: usize) -> f64 {
        let v = self.chains[chain].vnfs[position];
        self.chain_bandwidth(chain, slot) / self.config.packet_len * self.catalog.get(v).proc_coeff
    }

    /// Configured `ECOST_max`, or every node and every VM slot powered.
    pub fn ecost_max(&self) -> f64 {
        self.config.ecost_max.unwrap_or_else(|| {
            let nodes: f64 = self.topology.nodes().iter().map(|n| n.energy).sum();
            nodes + (self.topology.len() * self.catalog.len()) as f64 * self.catalog.max_vm_energy()
        })
    }

    pub fn n_function_nodes(&self) -> usize {
        self.topology.function_nodes().len()
    }
}
