use rand::seq::index::sample;
use rand::Rng;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition<S: Real = f64> {
    pub state: Vec<S>,
    pub action: usize,
    pub reward: S,
    pub next_state: Vec<S>,
}

/// Fixed-capacity FIFO of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<S: Real = f64> {
    capacity: usize,
    items: Vec<Transition<S>>,
    head: usize,
}

impl<S: Real> ReplayBuffer<S> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, items: Vec::new(), head: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Inserts, evicting the oldest transition when full.
    pub fn push(&mut self, t: Transition<S>) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Transition<S>> {
        let (a, b) = self.items.split_at(self.head);
        b.iter().chain(a)
    }

    /// `n` distinct transitions, uniformly; fewer if the buffer is smaller.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<&Transition<S>> {
        let n = n.min(self.items.len());
        sample(rng, self.items.len(), n).into_iter().map(|i| &self.items[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(a: usize) -> Transition {
        Transition { state: vec![], action: a, reward: 0.0, next_state: vec![] }
    }

    #[test]
    fn evicts_oldest() {
        let mut b = ReplayBuffer::new(3);
        for a in 0..5 {
            b.push(t(a));
        }
        assert_eq!(b.len(), 3);
        assert_eq!(b.iter().map(|x| x.action).collect::<Vec<_>>(), vec![2, 3, 4]);
    }

    #[test]
    fn sample_without_replacement() {
        let mut b = ReplayBuffer::new(10);
        for a in 0..10 {
            b.push(t(a));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut got: Vec<usize> = b.sample(10, &mut rng).iter().map(|x| x.action).collect();
        got.sort_unstable();
        assert_eq!(got, (0..10).collect::<Vec<_>>());
    }
}
