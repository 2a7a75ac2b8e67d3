//! Per-chain deep Q-learning subagents.

mod action;
mod replay;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use action::{action_count, ActionSpace, JointActionSpace};
pub use replay::{ReplayBuffer, Transition};

use crate::model::{ChainId, NodeId, Problem};
use crate::nn::{Mlp, NnError, Optimizer, OptimizerKind};
use crate::scalar::Real;
use crate::state::{observe, MigrationAction, NetworkState, ResourceReport};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("action index {index} outside 0..{count}")]
    ActionOutOfRange { index: usize, count: usize },
    #[error("action {0:?} is not encodable")]
    InvalidAction(MigrationAction),
    #[error("vnf {vnf} sits on node {node}, which is not a function node")]
    NotOnFunctionNode { vnf: usize, node: NodeId },
    #[error("need more than {batch} samples to train, have {have}")]
    InsufficientSamples { have: usize, batch: usize },
    #[error("parameters became non-finite")]
    Diverged,
    #[error("invalid agent config: {0}")]
    Config(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Learning hyperparameters.
///
/// `exploit_start` / `exploit_end` are probabilities of taking the greedy
/// action (not of exploring); the probability moves linearly from start to
/// end over `anneal_episodes` episodes, or over the first half of the
/// episode cap when unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Train steps between target refreshes (`C`).
    pub target_period: u64,
    /// Soft-update coefficient `τ`.
    pub tau: f64,
    pub hidden: Vec<usize>,
    pub exploit_start: f64,
    pub exploit_end: f64,
    pub anneal_episodes: Option<usize>,
    pub optimizer: OptimizerKind,
    pub momentum: f64,
    /// Gradient steps per slot once the buffer holds more than a batch.
    pub train_steps_per_slot: usize,
    /// Rewards are multiplied by this before storage.
    pub reward_scale: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            learning_rate: 1e-3,
            batch_size: 32,
            buffer_capacity: 10_000,
            target_period: 100,
            tau: 0.1,
            hidden: vec![64, 64],
            exploit_start: 0.1,
            exploit_end: 0.95,
            anneal_episodes: None,
            optimizer: OptimizerKind::Sgd,
            momentum: 0.9,
            train_steps_per_slot: 1,
            reward_scale: 1.0,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let fail = |m: &str| Err(AgentError::Config(m.to_string()));
        if !unit(self.gamma) {
            return fail("gamma must lie in [0, 1]");
        }
        if !unit(self.tau) {
            return fail("tau must lie in [0, 1]");
        }
        if self.target_period == 0 {
            return fail("target_period must be at least 1");
        }
        if !unit(self.exploit_start) || !unit(self.exploit_end) {
            return fail("exploitation probabilities must lie in [0, 1]");
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return fail("need 0 < batch_size <= buffer_capacity");
        }
        if !(self.learning_rate > 0.0) || self.hidden.contains(&0) {
            return fail("learning_rate and hidden sizes must be positive");
        }
        if !(self.reward_scale > 0.0) {
            return fail("reward_scale must be positive");
        }
        Ok(())
    }

    /// Greedy-action probability for `episode` (0-based).
    pub fn exploitation(&self, episode: usize, episode_cap: usize) -> f64 {
        let span = self.anneal_episodes.unwrap_or(episode_cap / 2);
        if span == 0 || episode >= span {
            return self.exploit_end;
        }
        let frac = episode as f64 / span as f64;
        self.exploit_start + (self.exploit_end - self.exploit_start) * frac
    }
}

pub fn to_input<S: Real>(x: &[f64]) -> Vec<S> {
    x.iter().map(|&v| S::lit(v)).collect()
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax<S: Real>(values: &[S]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Q-network, target network, replay memory and optimizer state.
#[derive(Debug, Clone)]
pub struct DqnAgent<S: Real = f64> {
    online: Mlp<S>,
    target: Mlp<S>,
    buffer: ReplayBuffer<S>,
    optimizer: Optimizer<S>,
    steps: u64,
    config: AgentConfig,
}

impl<S: Real> DqnAgent<S> {
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        n_actions: usize,
        config: AgentConfig,
        rng: &mut R,
    ) -> Result<Self, AgentError> {
        config.validate()?;
        let mut sizes = vec![input_dim];
        sizes.extend(&config.hidden);
        sizes.push(n_actions);
        let online = Mlp::new(&sizes, rng)?;
        Ok(Self::from_network(online, config))
    }

    /// Wraps an existing network; the target starts as an exact copy.
    pub fn from_network(online: Mlp<S>, config: AgentConfig) -> Self {
        let optimizer = Optimizer::new(config.optimizer, config.learning_rate, config.momentum, online.n_params());
        Self {
            target: online.clone(),
            online,
            buffer: ReplayBuffer::new(config.buffer_capacity),
            optimizer,
            steps: 0,
            config,
        }
    }

    pub fn online(&self) -> &Mlp<S> {
        &self.online
    }

    pub fn target(&self) -> &Mlp<S> {
        &self.target
    }

    pub fn buffer(&self) -> &ReplayBuffer<S> {
        &self.buffer
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn n_actions(&self) -> usize {
        self.online.output_dim()
    }

    pub fn q_values(&self, obs: &[S]) -> Result<Vec<S>, AgentError> {
        Ok(self.online.forward(obs)?)
    }

    /// Greedy with probability `exploit`, otherwise uniform over all actions.
    pub fn select_action<R: Rng + ?Sized>(&self, obs: &[S], exploit: f64, rng: &mut R) -> Result<usize, AgentError> {
        if rng.gen::<f64>() < exploit {
            Ok(argmax(&self.q_values(obs)?))
        } else {
            Ok(rng.gen_range(0..self.n_actions()))
        }
    }

    pub fn remember(&mut self, t: Transition<S>) {
        self.buffer.push(t);
    }

    /// Whether the buffer holds more samples than one batch.
    pub fn ready(&self) -> bool {
        self.buffer.len() > self.config.batch_size
    }

    /// Samples a batch and takes one gradient step; returns the loss before
    /// the step.
    pub fn train_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<S, AgentError> {
        if !self.ready() {
            return Err(AgentError::InsufficientSamples { have: self.buffer.len(), batch: self.config.batch_size });
        }
        let batch: Vec<Transition<S>> =
            self.buffer.sample(self.config.batch_size, rng).into_iter().cloned().collect();
        self.train_on_batch(&batch)
    }

    /// One step on the TD error `r + γ max_a' Q_target(s', a') - Q(s, a)`,
    /// followed by a soft target update every `C` steps.
    pub fn train_on_batch(&mut self, batch: &[Transition<S>]) -> Result<S, AgentError> {
        let gamma = S::lit(self.config.gamma);
        let mut targets = Vec::with_capacity(batch.len());
        for t in batch {
            let next = self.target.forward(&t.next_state)?;
            let best = next.iter().copied().fold(S::neg_infinity(), S::max);
            targets.push(t.reward + gamma * best);
        }
        let samples: Vec<(&[S], usize, S)> =
            batch.iter().zip(&targets).map(|(t, &y)| (t.state.as_slice(), t.action, y)).collect();
        let (loss, grad) = self.online.td_loss_grad(&samples)?;
        self.optimizer.step(self.online.params_mut(), &grad);
        self.steps += 1;
        if self.steps.is_multiple_of(self.config.target_period) {
            self.target.soft_update_from(&self.online, S::lit(self.config.tau));
        }
        if !self.online.is_finite() {
            return Err(AgentError::Diverged);
        }
        Ok(loss)
    }
}

/// The learner owning one chain.
#[derive(Debug, Clone)]
pub struct Subagent<S: Real = f64> {
    pub chain: ChainId,
    pub space: ActionSpace,
    pub dqn: DqnAgent<S>,
}

impl<S: Real> Subagent<S> {
    /// Input `g_q + N`, output `g_q (N - 1) + 1`.
    pub fn new<R: Rng + ?Sized>(
        problem: &Problem,
        chain: ChainId,
        config: AgentConfig,
        rng: &mut R,
    ) -> Result<Self, AgentError> {
        let space = ActionSpace::for_chain(problem, chain);
        let input = problem.chains[chain].vnfs.len() + problem.n_function_nodes();
        let dqn = DqnAgent::new(input, space.len(), config, rng)?;
        Ok(Self { chain, space, dqn })
    }

    pub fn observe(&self, problem: &Problem, state: &NetworkState, report: &ResourceReport) -> Vec<S> {
        to_input(&observe(problem, state, self.chain, report).to_vec())
    }

    /// Picks an index for the current state and resolves it to an action.
    pub fn decide<R: Rng + ?Sized>(
        &self,
        state: &NetworkState,
        obs: &[S],
        exploit: f64,
        rng: &mut R,
    ) -> Result<(usize, MigrationAction), AgentError> {
        let index = self.dqn.select_action(obs, exploit, rng)?;
        Ok((index, self.space.encode(self.chain, state.placement(self.chain), index)?))
    }
}
