use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::model::{
    assign_flows_to_chains, generate_traffic, load_catalog, load_topology, ExperimentConfig, Problem, ServiceChain,
    TraceTable, TrafficProfile,
};
use crate::msdf::MsdfConfig;
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Msdf,
    Greedy,
    Rm,
    Random,
    Oracle,
}

impl Policy {
    pub const ALL: [Policy; 5] = [Policy::Msdf, Policy::Greedy, Policy::Rm, Policy::Random, Policy::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Msdf => "msdf",
            Policy::Greedy => "greedy",
            Policy::Rm => "rm",
            Policy::Random => "random",
            Policy::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Harness(format!("unknown policy `{s}` (expected msdf, greedy, rm, random or oracle)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioHeader {
    #[serde(default = "default_name")]
    pub name: String,
    pub policy: Policy,
    /// Output directory, relative to the scenario file.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Also write per-slot placement and resource dumps.
    #[serde(default)]
    pub dump_state: bool,
}

fn default_name() -> String {
    "scenario".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub file: PathBuf,
    /// Keep only the `k` highest-degree nodes as function nodes.
    #[serde(default)]
    pub function_nodes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSpec {
    pub file: PathBuf,
}

/// Bandwidth profile; which fields matter depends on `profile`
/// (`sinusoid`, `step`, `constant` or `trace`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSpec {
    pub profile: String,
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub period: Option<f64>,
    #[serde(default)]
    pub jitter: f64,
    /// Phase offset as a fraction of a period.
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub phase_spread: f64,
    #[serde(default)]
    pub level: f64,
    #[serde(default)]
    pub before: f64,
    #[serde(default)]
    pub after: f64,
    #[serde(default)]
    pub at: usize,
    #[serde(default)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    #[serde(default)]
    pub count: usize,
    #[serde(default)]
    pub length: usize,
    pub flows_per_chain: usize,
    pub max_delay: f64,
    /// Explicit VNF types per chain; otherwise chain `q` position `m` gets
    /// type `(q + m) mod |F|`.
    #[serde(default)]
    pub vnfs: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSpec {
    /// Greedy relieves every overloaded node, not just the worst.
    pub greedy_all_nodes: bool,
    pub oracle_cap: u64,
    /// Oracle scores without the penalty term.
    pub oracle_pure_cost: bool,
}

impl Default for BaselineSpec {
    fn default() -> Self {
        Self { greedy_all_nodes: false, oracle_cap: 1_000_000, oracle_pure_cost: false }
    }
}

/// A complete experiment description, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub scenario: ScenarioHeader,
    pub topology: TopologySpec,
    pub catalog: CatalogSpec,
    pub traffic: TrafficSpec,
    pub chains: ChainSpec,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub agent: AgentConfig,
    #[serde(default)]
    pub msdf: MsdfConfig,
    #[serde(default)]
    pub baselines: BaselineSpec,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| Error::Harness(format!("scenario: {e}")))?;
        s.base_dir = base_dir.into();
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base).map_err(|e| match e {
            Error::Harness(m) => Error::Harness(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> Option<PathBuf> {
        self.scenario.out_dir.as_deref().map(|p| self.resolve(p))
    }

    pub fn seed(&self) -> u64 {
        self.experiment.seed
    }

    pub fn traffic_profile(&self) -> Result<TrafficProfile> {
        let t = &self.traffic;
        let bad = |m: String| Error::Harness(m);
        match t.profile.as_str() {
            "sinusoid" => Ok(TrafficProfile::Sinusoid {
                mean: t.mean,
                amplitude: t.amplitude,
                period: t.period.unwrap_or(self.experiment.slots as f64),
                jitter: t.jitter,
                phase: t.phase,
                phase_spread: t.phase_spread,
            }),
            "step" => Ok(TrafficProfile::Step { before: t.before, after: t.after, at: t.at }),
            "constant" => Ok(TrafficProfile::constant(t.level)),
            "trace" => {
                let file = t.file.as_ref().ok_or_else(|| bad("trace profile needs `file`".into()))?;
                Ok(TrafficProfile::Trace(TraceTable::load(self.resolve(file))?))
            }
            other => Err(crate::model::ModelError::UnknownProfile(other.to_string()).into()),
        }
    }

    fn chain_types(&self, n_types: usize) -> Result<Vec<Vec<usize>>> {
        let c = &self.chains;
        if let Some(v) = &c.vnfs {
            return Ok(v.clone());
        }
        if c.count == 0 || c.length == 0 {
            return Err(Error::Harness("chains need `count` and `length` or an explicit `vnfs` list".into()));
        }
        Ok((0..c.count).map(|q| (0..c.length).map(|m| (q + m) % n_types).collect()).collect())
    }

    /// Loads files, generates traffic and assembles the validated problem.
    pub fn build_problem(&self) -> Result<Problem> {
        if self.chains.flows_per_chain == 0 {
            return Err(Error::Harness("flows_per_chain must be positive".into()));
        }
        let mut topology = load_topology(self.resolve(&self.topology.file))?;
        if let Some(k) = self.topology.function_nodes {
            topology = topology.with_function_nodes_by_degree(k)?;
        }
        let catalog = load_catalog(self.resolve(&self.catalog.file))?;
        let chains: Vec<ServiceChain> = self
            .chain_types(catalog.len())?
            .into_iter()
            .enumerate()
            .map(|(q, vnfs)| ServiceChain::new(q, format!("s{q}"), vnfs, self.chains.max_delay))
            .collect();
        let services: Vec<String> = chains.iter().map(|c| c.service.clone()).collect();
        let mut flows = generate_traffic(
            &self.traffic_profile()?,
            services.len() * self.chains.flows_per_chain,
            self.experiment.slots,
            seed::derive(self.seed(), seed::TRAFFIC),
            &topology,
            &services,
        )?;
        let chains = assign_flows_to_chains(&mut flows, chains)?;
        Ok(Problem::new(topology, catalog, chains, flows, self.experiment.clone())?)
    }
}
