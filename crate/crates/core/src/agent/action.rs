use super::AgentError;
use crate::model::{ChainId, NodeId, Problem};
use crate::state::{MigrationAction, MigrationKind};

/// `g(N - 1) + 1`.
pub fn action_count(n_vnfs: usize, n_function_nodes: usize) -> usize {
    n_vnfs * n_function_nodes.saturating_sub(1) + 1
}

/// Discrete actions of one chain. Index 0 is the no-op; index
/// `1 + m (N - 1) + k` moves VNF `m` to the `k`-th function node (ascending
/// id) other than the one it currently occupies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpace {
    pub n_vnfs: usize,
    pub function_nodes: Vec<NodeId>,
}

impl ActionSpace {
    pub fn new(n_vnfs: usize, function_nodes: Vec<NodeId>) -> Self {
        Self { n_vnfs, function_nodes }
    }

    pub fn for_chain(problem: &Problem, chain: ChainId) -> Self {
        Self::new(problem.chains[chain].vnfs.len(), problem.topology.function_nodes().to_vec())
    }

    pub fn len(&self) -> usize {
        action_count(self.n_vnfs, self.function_nodes.len())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn candidates(&self) -> usize {
        self.function_nodes.len().saturating_sub(1)
    }

    /// Index to action, resolving "other nodes" against `current`, the
    /// chain's placement at decision time.
    pub fn encode(&self, chain: ChainId, current: &[NodeId], index: usize) -> Result<MigrationAction, AgentError> {
        if index >= self.len() {
            return Err(AgentError::ActionOutOfRange { index, count: self.len() });
        }
        if index == 0 {
            return Ok(MigrationAction::noop(chain));
        }
        let (m, k) = ((index - 1) / self.candidates(), (index - 1) % self.candidates());
        let here = current[m];
        let target = self
            .function_nodes
            .iter()
            .copied()
            .filter(|&n| n != here)
            .nth(k)
            .ok_or(AgentError::NotOnFunctionNode { vnf: m, node: here })?;
        if !self.function_nodes.contains(&here) {
            return Err(AgentError::NotOnFunctionNode { vnf: m, node: here });
        }
        Ok(MigrationAction::moving(chain, m, target))
    }

    pub fn decode(&self, current: &[NodeId], action: &MigrationAction) -> Result<usize, AgentError> {
        match action.kind {
            MigrationKind::NoOp => Ok(0),
            MigrationKind::Move { vnf, target } => {
                let invalid = AgentError::InvalidAction(*action);
                if vnf >= self.n_vnfs || target == current[vnf] {
                    return Err(invalid);
                }
                let k = self
                    .function_nodes
                    .iter()
                    .filter(|&&n| n != current[vnf])
                    .position(|&n| n == target)
                    .ok_or(invalid)?;
                Ok(1 + vnf * self.candidates() + k)
            }
        }
    }
}

/// Product space over all chains, indexed in mixed radix with chain 0 most
/// significant, so index order equals lexicographic tuple order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointActionSpace {
    pub spaces: Vec<ActionSpace>,
}

impl JointActionSpace {
    pub fn for_problem(problem: &Problem) -> Self {
        Self { spaces: (0..problem.chains.len()).map(|q| ActionSpace::for_chain(problem, q)).collect() }
    }

    /// Exact size; `None` when it does not fit in 128 bits.
    pub fn size(&self) -> Option<u128> {
        self.spaces.iter().try_fold(1u128, |acc, s| acc.checked_mul(s.len() as u128))
    }

    pub fn split(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.spaces.len()];
        for (slot, space) in out.iter_mut().zip(&self.spaces).rev() {
            *slot = index % space.len();
            index /= space.len();
        }
        out
    }

    pub fn join(&self, parts: &[usize]) -> usize {
        parts.iter().zip(&self.spaces).fold(0, |acc, (&p, s)| acc * s.len() + p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_scale_count() {
        assert_eq!(action_count(3, 10), 28);
        let joint = JointActionSpace { spaces: vec![ActionSpace::new(3, (0..10).collect()); 3] };
        assert_eq!(joint.size(), Some(21_952));
    }

    #[test]
    fn index_zero_is_noop() {
        let s = ActionSpace::new(2, vec![0, 1, 2]);
        assert!(s.encode(4, &[0, 1], 0).unwrap().is_noop());
    }

    #[test]
    fn skips_current_node() {
        let s = ActionSpace::new(2, vec![0, 1, 2]);
        // vnf 0 on node 1: candidates [0, 2]
        assert_eq!(s.encode(0, &[1, 1], 1).unwrap(), MigrationAction::moving(0, 0, 0));
        assert_eq!(s.encode(0, &[1, 1], 2).unwrap(), MigrationAction::moving(0, 0, 2));
        assert_eq!(s.encode(0, &[1, 1], 3).unwrap(), MigrationAction::moving(0, 1, 0));
        assert!(matches!(s.encode(0, &[1, 1], 5), Err(AgentError::ActionOutOfRange { .. })));
    }

    #[test]
    fn bijection_small_exhaustive() {
        for g in 1..=5 {
            for n in 2..=12 {
                let s = ActionSpace::new(g, (0..n).collect());
                let current: Vec<usize> = (0..g).map(|m| (m * 7) % n).collect();
                for i in 0..s.len() {
                    let a = s.encode(0, &current, i).unwrap();
                    assert_eq!(s.decode(&current, &a).unwrap(), i);
                }
            }
        }
    }

    #[test]
    fn joint_mixed_radix() {
        let j = JointActionSpace { spaces: vec![ActionSpace::new(1, vec![0, 1, 2]), ActionSpace::new(2, vec![0, 1])] };
        assert_eq!(j.size(), Some(9));
        assert_eq!(j.split(0), vec![0, 0]);
        assert_eq!(j.split(4), vec![1, 1]);
        for i in 0..9 {
            assert_eq!(j.join(&j.split(i)), i);
        }
    }
}
