use std::collections::VecDeque;

use super::MsdfError;

/// Declares convergence once the last `window` episode rewards of every
/// subagent, and of their sum, have population variance at most
/// `threshold`.
#[derive(Debug, Clone)]
pub struct ConvergenceMonitor {
    window: usize,
    threshold: f64,
    agents: Vec<VecDeque<f64>>,
    aggregate: VecDeque<f64>,
}

fn variance(xs: &VecDeque<f64>) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

impl ConvergenceMonitor {
    pub fn new(n_agents: usize, window: usize, threshold: f64) -> Result<Self, MsdfError> {
        if window < 2 {
            return Err(MsdfError::Config("convergence window must be at least 2".into()));
        }
        if !(threshold >= 0.0) {
            return Err(MsdfError::Config("variance threshold must be non-negative".into()));
        }
        Ok(Self {
            window,
            threshold,
            agents: vec![VecDeque::with_capacity(window); n_agents],
            aggregate: VecDeque::with_capacity(window),
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Records one episode; `per_agent` must have one entry per subagent.
    pub fn push(&mut self, per_agent: &[f64], aggregate: f64) {
        assert_eq!(per_agent.len(), self.agents.len(), "one reward per subagent");
        for (series, &r) in self.agents.iter_mut().zip(per_agent) {
            push_bounded(series, r, self.window);
        }
        push_bounded(&mut self.aggregate, aggregate, self.window);
    }

    /// Window variances (per subagent, aggregate); `None` until full.
    pub fn variances(&self) -> Option<(Vec<f64>, f64)> {
        if self.aggregate.len() < self.window {
            return None;
        }
        Some((self.agents.iter().map(variance).collect(), variance(&self.aggregate)))
    }

    pub fn converged(&self) -> bool {
        self.variances().is_some_and(|(agents, agg)| agg <= self.threshold && agents.iter().all(|v| *v <= self.threshold))
    }
}

fn push_bounded(q: &mut VecDeque<f64>, x: f64, cap: usize) {
    if q.len() == cap {
        q.pop_front();
    }
    q.push_back(x);
}
