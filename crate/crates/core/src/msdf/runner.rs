use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{apply_joint, apply_ordered, plan_joint, sort_chains, ConvergenceMonitor, MsdfError, SlotResult};
use crate::agent::{to_input, AgentConfig, DqnAgent, JointActionSpace, Subagent, Transition};
use crate::model::{ChainId, Problem};
use crate::scalar::Real;
use crate::{seed, Result};
use crate::state::{compute_resources, initial_placement, observe_joint, NetworkState};

/// Largest joint action space a monolithic agent may be built over.
pub const MONOLITHIC_ACTION_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MsdfConfig {
    /// Episodes in the convergence window.
    pub window: usize,
    /// Upper bound on the window variance of per-slot mean episode reward.
    pub variance_threshold: f64,
    /// Re-rank chains every slot; otherwise the ranking of the very first
    /// slot is kept.
    pub resort_every_slot: bool,
    /// Training episode cap.
    pub max_episodes: usize,
}

impl Default for MsdfConfig {
    fn default() -> Self {
        Self { window: 50, variance_threshold: 0.05, resort_every_slot: true, max_episodes: 500 }
    }
}

/// Per-episode aggregates. Rewards are per-slot means; costs, migrations
/// and overload are sums over the episode's slots.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub exploit: f64,
    /// Mean per-slot reward of each chain.
    pub rewards: Vec<f64>,
    pub aggregate_reward: f64,
    pub total_cost: f64,
    pub migrations: usize,
    pub overload_degree: f64,
    pub ecost: f64,
    pub penalty: f64,
}

/// Something that decides, and optionally learns, one slot at a time.
pub trait Learner {
    /// Greedy-action probability during training episode `episode`.
    fn exploitation(&self, _episode: usize, _episode_cap: usize) -> f64 {
        1.0
    }

    /// Runs one slot on `state` (without advancing it).
    fn run_slot(
        &mut self,
        problem: &Problem,
        state: &mut NetworkState,
        exploit: f64,
        train: bool,
    ) -> Result<SlotResult>;

    /// Reward series the convergence monitor tracks besides the aggregate.
    fn monitored(&self, metrics: &EpisodeMetrics) -> Vec<f64>;
}

/// One subagent per chain coordinated by successive decisions.
#[derive(Debug, Clone)]
pub struct Msdf<S: Real = f64> {
    pub agents: Vec<Subagent<S>>,
    pub config: MsdfConfig,
    explore_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
    fixed_order: Option<Vec<ChainId>>,
}

impl<S: Real> Msdf<S> {
    pub fn new(problem: &Problem, agent: AgentConfig, config: MsdfConfig, master_seed: u64) -> Result<Self, MsdfError> {
        let agents = (0..problem.chains.len())
            .map(|q| Subagent::new(problem, q, agent.clone(), &mut seed::rng_from(seed::agent_init(master_seed, q))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            agents,
            config,
            explore_rng: seed::rng(master_seed, seed::EXPLORATION),
            replay_rng: seed::rng(master_seed, seed::REPLAY),
            fixed_order: None,
        })
    }

    /// Per-subagent action counts.
    pub fn action_spaces(&self) -> Vec<usize> {
        self.agents.iter().map(|a| a.space.len()).collect()
    }
}

impl<S: Real> Learner for Msdf<S> {
    fn exploitation(&self, episode: usize, episode_cap: usize) -> f64 {
        self.agents[0].dqn.config().exploitation(episode, episode_cap)
    }

    fn run_slot(
        &mut self,
        problem: &Problem,
        state: &mut NetworkState,
        exploit: f64,
        train: bool,
    ) -> Result<SlotResult> {
        let order = match (&self.fixed_order, self.config.resort_every_slot) {
            (Some(order), false) => order.clone(),
            _ => {
                let order = sort_chains(problem, state, &compute_resources(problem, state));
                if !self.config.resort_every_slot {
                    self.fixed_order = Some(order.clone());
                }
                order
            }
        };
        let (strategy, _) = plan_joint(problem, state, &self.agents, &order, exploit, &mut self.explore_rng)?;
        if train {
            for agent in &mut self.agents {
                for _ in 0..agent.dqn.config().train_steps_per_slot {
                    if agent.dqn.ready() {
                        agent.dqn.train_step(&mut self.replay_rng)?;
                    }
                }
            }
        }
        let result = apply_joint(problem, state, &strategy)?;
        if train {
            for (step, &index) in result.steps.iter().zip(&strategy.indices) {
                let agent = &mut self.agents[step.action.chain];
                let scale = agent.dqn.config().reward_scale;
                agent.dqn.remember(Transition {
                    state: to_input(&step.obs),
                    action: index,
                    reward: S::lit(step.cost.reward * scale),
                    next_state: to_input(&step.next_obs),
                });
            }
        }
        Ok(result)
    }

    fn monitored(&self, metrics: &EpisodeMetrics) -> Vec<f64> {
        metrics.rewards.clone()
    }
}

/// A single agent choosing the joint action of all chains at once, used
/// as the scaling reference for the successive scheme.
#[derive(Debug, Clone)]
pub struct Monolithic<S: Real = f64> {
    pub dqn: DqnAgent<S>,
    pub joint: JointActionSpace,
    explore_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
}

impl<S: Real> Monolithic<S> {
    pub fn new(problem: &Problem, agent: AgentConfig, master_seed: u64) -> Result<Self, MsdfError> {
        let joint = JointActionSpace::for_problem(problem);
        let size = joint.size().filter(|&s| s <= MONOLITHIC_ACTION_CAP).ok_or_else(|| {
            MsdfError::Config(format!("joint action space exceeds {MONOLITHIC_ACTION_CAP}"))
        })?;
        let input = joint.spaces.iter().map(|s| s.n_vnfs).sum::<usize>() + problem.n_function_nodes();
        let dqn = DqnAgent::new(input, size as usize, agent, &mut seed::rng_from(seed::agent_init(master_seed, 0)))?;
        Ok(Self {
            dqn,
            joint,
            explore_rng: seed::rng(master_seed, seed::EXPLORATION),
            replay_rng: seed::rng(master_seed, seed::REPLAY),
        })
    }
}

impl<S: Real> Learner for Monolithic<S> {
    fn exploitation(&self, episode: usize, episode_cap: usize) -> f64 {
        self.dqn.config().exploitation(episode, episode_cap)
    }

    fn run_slot(
        &mut self,
        problem: &Problem,
        state: &mut NetworkState,
        exploit: f64,
        train: bool,
    ) -> Result<SlotResult> {
        let report = compute_resources(problem, state);
        let obs: Vec<S> = to_input(&observe_joint(problem, state, &report).to_vec());
        let index = self.dqn.select_action(&obs, exploit, &mut self.explore_rng)?;
        let actions = self
            .joint
            .split(index)
            .iter()
            .enumerate()
            .map(|(q, &i)| self.joint.spaces[q].encode(q, state.placement(q), i))
            .collect::<Result<Vec<_>, _>>()?;
        if train {
            for _ in 0..self.dqn.config().train_steps_per_slot {
                if self.dqn.ready() {
                    self.dqn.train_step(&mut self.replay_rng)?;
                }
            }
        }
        let result = apply_ordered(problem, state, &actions)?;
        if train {
            let next: Vec<S> = to_input(&observe_joint(problem, state, &result.report).to_vec());
            let reward = result.reward_sum() * self.dqn.config().reward_scale;
            self.dqn.remember(Transition { state: obs, action: index, reward: S::lit(reward), next_state: next });
        }
        Ok(result)
    }

    fn monitored(&self, _: &EpisodeMetrics) -> Vec<f64> {
        Vec::new()
    }
}

/// Runs `problem.config.slots` slots from `initial`, calling `on_slot` after
/// each.
pub fn run_episode<L: Learner + ?Sized>(
    learner: &mut L,
    problem: &Problem,
    initial: &NetworkState,
    episode: usize,
    exploit: f64,
    train: bool,
    on_slot: &mut dyn FnMut(usize, &SlotResult),
) -> Result<EpisodeMetrics> {
    let mut state = initial.clone();
    let n = problem.chains.len();
    let slots = problem.config.slots;
    let mut m = EpisodeMetrics {
        episode,
        exploit,
        rewards: vec![0.0; n],
        aggregate_reward: 0.0,
        total_cost: 0.0,
        migrations: 0,
        overload_degree: 0.0,
        ecost: 0.0,
        penalty: 0.0,
    };
    for _ in 0..slots {
        let slot = learner.run_slot(problem, &mut state, exploit, train)?;
        for (acc, r) in m.rewards.iter_mut().zip(&slot.breakdown.reward) {
            *acc += r;
        }
        m.total_cost += slot.breakdown.total;
        m.migrations += slot.migrations;
        m.overload_degree += slot.overload_degree;
        m.ecost += slot.breakdown.ecost;
        m.penalty += slot.breakdown.penalty;
        on_slot(episode, &slot);
        state.advance_slot();
    }
    m.rewards.iter_mut().for_each(|r| *r /= slots as f64);
    m.aggregate_reward = m.rewards.iter().sum();
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub episodes: Vec<EpisodeMetrics>,
    /// Number of episodes after which the monitor fired.
    pub converged_at: Option<usize>,
}

/// Trains until the monitor fires or `config.max_episodes` is reached.
pub fn train<L: Learner + ?Sized>(
    learner: &mut L,
    problem: &Problem,
    initial: &NetworkState,
    config: &MsdfConfig,
    on_slot: &mut dyn FnMut(usize, &SlotResult),
) -> Result<TrainOutcome> {
    let n_series = learner.monitored(&empty_metrics(problem.chains.len())).len();
    let mut monitor = ConvergenceMonitor::new(n_series, config.window, config.variance_threshold)?;
    let mut episodes = Vec::new();
    for e in 0..config.max_episodes {
        let exploit = learner.exploitation(e, config.max_episodes);
        let m = run_episode(learner, problem, initial, e, exploit, true, on_slot)?;
        monitor.push(&learner.monitored(&m), m.aggregate_reward);
        episodes.push(m);
        if monitor.converged() {
            return Ok(TrainOutcome { episodes, converged_at: Some(e + 1) });
        }
    }
    Ok(TrainOutcome { episodes, converged_at: None })
}

fn empty_metrics(n: usize) -> EpisodeMetrics {
    EpisodeMetrics {
        episode: 0,
        exploit: 0.0,
        rewards: vec![0.0; n],
        aggregate_reward: 0.0,
        total_cost: 0.0,
        migrations: 0,
        overload_degree: 0.0,
        ecost: 0.0,
        penalty: 0.0,
    }
}

/// One greedy episode without learning.
pub fn evaluate<L: Learner + ?Sized>(
    learner: &mut L,
    problem: &Problem,
    initial: &NetworkState,
    episode: usize,
    on_slot: &mut dyn FnMut(usize, &SlotResult),
) -> Result<EpisodeMetrics> {
    run_episode(learner, problem, initial, episode, 1.0, false, on_slot)
}

#[derive(Debug, Clone)]
pub struct MsdfRun<S: Real = f64> {
    pub msdf: Msdf<S>,
    pub training: TrainOutcome,
    pub evaluation: EpisodeMetrics,
}

/// Trains subagents from the first-fit placement, then evaluates the
/// greedy policy once. Non-convergence is reported via
/// `training.converged_at == None`.
pub fn run<S: Real>(
    problem: &Problem,
    agent: AgentConfig,
    config: MsdfConfig,
    master_seed: u64,
) -> Result<MsdfRun<S>> {
    let initial = initial_placement(problem)?;
    let mut msdf = Msdf::<S>::new(problem, agent, config.clone(), master_seed)?;
    let training = train(&mut msdf, problem, &initial, &config, &mut |_, _| {})?;
    let evaluation = evaluate(&mut msdf, problem, &initial, training.episodes.len(), &mut |_, _| {})?;
    Ok(MsdfRun { msdf, training, evaluation })
}
