//! Experiment runner: scenario files, single runs, sweeps, policy
//! comparisons and the metric files they produce.
//!
//! Output files (all comma separated with a header row):
//!
//! * `slots.csv` – `episode,slot,chain,action,reward,ecost,mcost,penalty,migrated`,
//!   one row per chain decision in decision order; `ecost` and `penalty`
//!   describe the network right after that decision.
//! * `episodes.csv` – `episode,phase,exploit,reward,total_cost,migrations,overload_degree,ecost,penalty,r0..`,
//!   where `phase` is `train` or `eval` and `r<q>` is chain `q`'s mean
//!   per-slot reward.
//! * `costs.csv` – `slot,chain,ecost,ncost,rcost,mcost,penalty,reward` for
//!   the evaluation episode.
//! * `summary.txt` – `key = value` lines of [`MetricsSummary`].
//! * `placement.csv`, `resources.csv` – optional per-slot state dumps of
//!   the evaluation episode.

mod scenario;

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use scenario::{BaselineSpec, CatalogSpec, ChainSpec, Policy, Scenario, ScenarioHeader, TopologySpec, TrafficSpec};

use crate::agent::JointActionSpace;
use crate::baselines::{greedy_step, oracle_step, random_step, rm_step, OracleConfig};
use crate::cost::CostBreakdown;
use crate::model::Problem;
use crate::msdf::{apply_ordered, evaluate, train, EpisodeMetrics, Learner, Msdf, SlotResult};
use crate::state::{check_constraints, compute_resources, initial_placement, placement_rows, resource_rows, NetworkState};
use crate::{seed, Error, Result};

/// A fixed (non-learning) policy driven through the same episode loop.
pub struct BaselineRunner {
    pub policy: Policy,
    pub greedy_all_nodes: bool,
    pub oracle: OracleConfig,
    rng: ChaCha8Rng,
}

impl BaselineRunner {
    pub fn new(policy: Policy, spec: &BaselineSpec, master_seed: u64) -> Result<Self> {
        if policy == Policy::Msdf {
            return Err(Error::Harness("msdf is not a baseline".into()));
        }
        Ok(Self {
            policy,
            greedy_all_nodes: spec.greedy_all_nodes,
            oracle: OracleConfig { cap: u128::from(spec.oracle_cap), pure_cost: spec.oracle_pure_cost },
            rng: seed::rng(master_seed, seed::RANDOM_POLICY),
        })
    }
}

impl Learner for BaselineRunner {
    fn run_slot(&mut self, problem: &Problem, state: &mut NetworkState, _: f64, _: bool) -> Result<SlotResult> {
        let report = compute_resources(problem, state);
        let decision = match self.policy {
            Policy::Greedy => greedy_step(problem, state, &report, self.greedy_all_nodes),
            Policy::Rm => rm_step(problem, state, &report),
            Policy::Random => random_step(problem, state, &mut self.rng)?,
            Policy::Oracle => oracle_step(problem, state, &self.oracle)?.0,
            Policy::Msdf => unreachable!("rejected in BaselineRunner::new"),
        };
        Ok(apply_ordered(problem, state, &decision.actions)?)
    }

    fn monitored(&self, _: &EpisodeMetrics) -> Vec<f64> {
        Vec::new()
    }
}

/// Headline numbers of one run, taken from its evaluation episode.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub name: String,
    pub policy: Policy,
    pub slots: usize,
    /// `Σ_t α_c ECOST + β_c MCOST` over the evaluation episode.
    pub total_cost: f64,
    pub migrations: usize,
    /// Summed per-slot overload degree.
    pub overload_degree: f64,
    /// Summed per-slot basic energy cost.
    pub ecost: f64,
    pub penalty: f64,
    pub episodes_trained: usize,
    /// Training episodes until the monitor fired; `None` if it never did.
    pub converged_at: Option<usize>,
    pub action_spaces: Vec<usize>,
}

impl MetricsSummary {
    pub fn to_text(&self) -> String {
        let spaces: Vec<String> = self.action_spaces.iter().map(|a| a.to_string()).collect();
        let converged = self.converged_at.map_or_else(|| "none".to_string(), |c| c.to_string());
        format!(
            "name = {}\npolicy = {}\nslots = {}\ntotal_cost = {}\nmigrations = {}\noverload_degree = {}\necost = {}\n\
             penalty = {}\nepisodes_trained = {}\nconverged_at = {}\naction_spaces = {}\n",
            self.name,
            self.policy,
            self.slots,
            self.total_cost,
            self.migrations,
            self.overload_degree,
            self.ecost,
            self.penalty,
            self.episodes_trained,
            converged,
            spaces.join(" ")
        )
    }
}

/// Everything a run produced, with the file contents rendered.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: MetricsSummary,
    pub training: Vec<EpisodeMetrics>,
    pub evaluation: EpisodeMetrics,
    /// Evaluation-episode breakdowns, one per slot.
    pub slot_costs: Vec<CostBreakdown>,
    pub files: Vec<(&'static str, String)>,
}

impl RunOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| *n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let io = |path: &Path, source| Error::Io { path: path.display().to_string(), source };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        for (name, content) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, content).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }
}

fn action_label(step: &crate::msdf::StepRecord) -> String {
    match step.action.kind {
        crate::state::MigrationKind::NoOp => "noop".to_string(),
        crate::state::MigrationKind::Move { vnf, target } => format!("v{vnf}@{target}"),
    }
}

#[derive(Default)]
struct Logs {
    slots: String,
    episodes: String,
    costs: String,
    placement: String,
    resources: String,
    slot_costs: Vec<CostBreakdown>,
}

impl Logs {
    fn new(n_chains: usize) -> Self {
        let mut l = Logs {
            slots: "episode,slot,chain,action,reward,ecost,mcost,penalty,migrated\n".to_string(),
            episodes: "episode,phase,exploit,reward,total_cost,migrations,overload_degree,ecost,penalty".to_string(),
            costs: "slot,chain,ecost,ncost,rcost,mcost,penalty,reward\n".to_string(),
            placement: "slot,chain,vnf,node\n".to_string(),
            resources: "slot,node,type,requested,allocated\n".to_string(),
            slot_costs: Vec::new(),
        };
        for q in 0..n_chains {
            let _ = write!(l.episodes, ",r{q}");
        }
        l.episodes.push('\n');
        l
    }

    fn slot(&mut self, episode: usize, r: &SlotResult) {
        for step in &r.steps {
            let c = &step.cost;
            let _ = writeln!(
                self.slots,
                "{episode},{},{},{},{},{},{},{},{}",
                r.slot,
                step.action.chain,
                action_label(step),
                c.reward,
                c.ecost,
                c.mcost,
                c.penalty,
                u8::from(!step.action.is_noop())
            );
        }
    }

    fn eval_slot(&mut self, r: &SlotResult, state_rows: Option<String>) {
        let b = &r.breakdown;
        for q in 0..b.mcost.len() {
            let _ = writeln!(
                self.costs,
                "{},{q},{},{},{},{},{},{}",
                b.slot, b.ecost, b.ncost[q], b.rcost[q], b.mcost[q], b.penalty, b.reward[q]
            );
        }
        if let Some(rows) = state_rows {
            self.placement.push_str(&rows);
            self.resources.push_str(&resource_rows(r.slot, &r.report));
        }
        self.slot_costs.push(b.clone());
    }

    fn episode(&mut self, phase: &str, m: &EpisodeMetrics) {
        let _ = write!(
            self.episodes,
            "{},{phase},{},{},{},{},{},{},{}",
            m.episode, m.exploit, m.aggregate_reward, m.total_cost, m.migrations, m.overload_degree, m.ecost, m.penalty
        );
        for r in &m.rewards {
            let _ = write!(self.episodes, ",{r}");
        }
        self.episodes.push('\n');
    }
}

/// Runs the scenario's policy. MSDF trains first and is then evaluated
/// greedily for one episode; fixed policies run one episode. Nothing is
/// written to disk.
pub fn run_scenario(s: &Scenario) -> Result<RunOutput> {
    let problem = s.build_problem()?;
    run_problem(s, &problem)
}

/// As [`run_scenario`] with an already built problem.
pub fn run_problem(s: &Scenario, problem: &Problem) -> Result<RunOutput> {
    s.agent.validate()?;
    let initial = initial_placement(problem)?;
    let mut logs = Logs::new(problem.chains.len());
    let dump = s.scenario.dump_state;

    let (training, converged_at, evaluation, action_spaces) = match s.scenario.policy {
        Policy::Msdf => {
            let mut msdf = Msdf::<f64>::new(problem, s.agent.clone(), s.msdf.clone(), s.seed())?;
            let outcome = train(&mut msdf, problem, &initial, &s.msdf, &mut |e, r| logs.slot(e, r))?;
            for m in &outcome.episodes {
                logs.episode("train", m);
            }
            let eval = run_eval(&mut msdf, problem, &initial, outcome.episodes.len(), dump, &mut logs)?;
            let spaces = msdf.action_spaces();
            (outcome.episodes, outcome.converged_at, eval, spaces)
        }
        policy => {
            let mut runner = BaselineRunner::new(policy, &s.baselines, s.seed())?;
            let eval = run_eval(&mut runner, problem, &initial, 0, dump, &mut logs)?;
            let spaces = JointActionSpace::for_problem(problem).spaces.iter().map(|a| a.len()).collect();
            (Vec::new(), None, eval, spaces)
        }
    };
    logs.episode("eval", &evaluation);

    let summary = MetricsSummary {
        name: s.scenario.name.clone(),
        policy: s.scenario.policy,
        slots: problem.config.slots,
        total_cost: evaluation.total_cost,
        migrations: evaluation.migrations,
        overload_degree: evaluation.overload_degree,
        ecost: evaluation.ecost,
        penalty: evaluation.penalty,
        episodes_trained: training.len(),
        converged_at,
        action_spaces,
    };
    let mut files = vec![
        ("slots.csv", logs.slots),
        ("episodes.csv", logs.episodes),
        ("costs.csv", logs.costs),
        ("summary.txt", summary.to_text()),
    ];
    if dump {
        files.push(("placement.csv", logs.placement));
        files.push(("resources.csv", logs.resources));
    }
    Ok(RunOutput { summary, training, evaluation, slot_costs: logs.slot_costs, files })
}

fn run_eval<L: Learner>(
    learner: &mut L,
    problem: &Problem,
    initial: &NetworkState,
    episode: usize,
    dump: bool,
    logs: &mut Logs,
) -> Result<EpisodeMetrics> {
    // placement rows need the post-decision state, which the slot result
    // does not carry; replay the decisions to recover it
    let mut state = initial.clone();
    evaluate(learner, problem, initial, episode, &mut |e, r| {
        logs.slot(e, r);
        let rows = if dump {
            for step in &r.steps {
                let _ = state.apply_in_place(problem, step.action);
            }
            let rows = placement_rows(&state);
            state.advance_slot();
            Some(rows)
        } else {
            None
        };
        logs.eval_slot(r, rows);
    })
}

/// Runs the scenario and writes its files when it names an output
/// directory.
pub fn run_and_write(s: &Scenario) -> Result<RunOutput> {
    let out = run_scenario(s)?;
    if let Some(dir) = s.out_dir() {
        out.write_to(&dir)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Flows per chain.
    Flows,
    Chains,
    ChainLength,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Flows => "n_flows",
            SweepAxis::Chains => "n_chains",
            SweepAxis::ChainLength => "chain_length",
        }
    }

    /// The scenario with this axis set to `value`.
    pub fn apply(self, base: &Scenario, value: usize) -> Result<Scenario> {
        let mut s = base.clone();
        match self {
            SweepAxis::Flows => s.chains.flows_per_chain = value,
            SweepAxis::Chains | SweepAxis::ChainLength if s.chains.vnfs.is_some() => {
                return Err(Error::Harness(format!("cannot sweep {} with an explicit vnfs list", self.name())))
            }
            SweepAxis::Chains => s.chains.count = value,
            SweepAxis::ChainLength => s.chains.length = value,
        }
        Ok(s)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n_flows" | "flows" => Ok(SweepAxis::Flows),
            "n_chains" | "chains" => Ok(SweepAxis::Chains),
            "chain_length" | "length" => Ok(SweepAxis::ChainLength),
            other => Err(Error::Harness(format!("unknown sweep axis `{other}` (n_flows, n_chains, chain_length)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: usize,
    pub outcome: std::result::Result<MetricsSummary, String>,
}

/// One run per value, in parallel. A failing point is recorded and does
/// not stop the others. Each point writes to `<out_dir>/<axis>_<value>`.
pub fn sweep(base: &Scenario, axis: SweepAxis, values: &[usize]) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::Harness("sweep needs at least one value".into()));
    }
    Ok(values
        .par_iter()
        .map(|&value| {
            let outcome = axis
                .apply(base, value)
                .and_then(|mut s| {
                    if let Some(out) = &s.scenario.out_dir {
                        s.scenario.out_dir = Some(out.join(format!("{}_{value}", axis.name())));
                    }
                    run_and_write(&s)
                })
                .map(|o| o.summary)
                .map_err(|e| e.to_string());
            SweepPoint { value, outcome }
        })
        .collect())
}

pub fn sweep_table(axis: SweepAxis, points: &[SweepPoint]) -> String {
    let mut out = format!("{},policy,total_cost,migrations,overload_degree,ecost,converged_at,error\n", axis.name());
    for p in points {
        match &p.outcome {
            Ok(m) => {
                let conv = m.converged_at.map_or_else(String::new, |c| c.to_string());
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{conv},",
                    p.value, m.policy, m.total_cost, m.migrations, m.overload_degree, m.ecost
                );
            }
            Err(e) => {
                let _ = writeln!(out, "{},,,,,,,\"{}\"", p.value, e.replace('"', "'"));
            }
        }
    }
    out
}

/// Runs every policy on the same scenario (same seed, hence the same
/// traffic). Each policy writes to `<out_dir>/<policy>`.
pub fn compare(base: &Scenario, policies: &[Policy]) -> Result<Vec<MetricsSummary>> {
    if policies.len() < 2 {
        return Err(Error::Harness("compare needs at least two policies".into()));
    }
    let problem = base.build_problem()?;
    policies
        .par_iter()
        .map(|&policy| {
            let mut s = base.clone();
            s.scenario.policy = policy;
            if let Some(out) = &s.scenario.out_dir {
                s.scenario.out_dir = Some(out.join(policy.name()));
            }
            let out = run_problem(&s, &problem)?;
            if let Some(dir) = s.out_dir() {
                out.write_to(&dir)?;
            }
            Ok(out.summary)
        })
        .collect()
}

pub fn compare_table(summaries: &[MetricsSummary]) -> String {
    let mut out = "policy,total_cost,migrations,overload_degree,ecost,converged_at\n".to_string();
    for m in summaries {
        let conv = m.converged_at.map_or_else(String::new, |c| c.to_string());
        let _ = writeln!(out, "{},{},{},{},{},{conv}", m.policy, m.total_cost, m.migrations, m.overload_degree, m.ecost);
    }
    out
}

/// Builds the problem and the initial placement and reports their size;
/// fails on any error or hard constraint violation.
pub fn validate(s: &Scenario) -> Result<String> {
    s.agent.validate()?;
    let problem = s.build_problem()?;
    let initial = initial_placement(&problem)?;
    let report = check_constraints(&problem, &initial, &initial);
    if let Some(v) = report.hard().next() {
        return Err(Error::Harness(format!("initial placement violates {v:?}")));
    }
    let joint = JointActionSpace::for_problem(&problem);
    let spaces: Vec<String> = joint.spaces.iter().map(|a| a.len().to_string()).collect();
    let joint_size = joint.size().map_or_else(|| "overflow".to_string(), |s| s.to_string());
    if s.scenario.policy == Policy::Oracle && joint.size().is_none_or(|n| n > u128::from(s.baselines.oracle_cap)) {
        return Err(Error::Harness(format!("oracle would enumerate {joint_size} joint actions")));
    }
    let soft = report.violations.len();
    Ok(format!(
        "nodes = {}\nfunction_nodes = {}\nchains = {}\nflows = {}\nslots = {}\naction_spaces = {}\njoint_actions = {}\n\
         initial_soft_violations = {soft}\n",
        problem.topology.len(),
        problem.n_function_nodes(),
        problem.chains.len(),
        problem.flows.len(),
        problem.config.slots,
        spaces.join(" "),
        joint_size,
    ))
}
