//! Replay memories: the prioritized self-imitation buffer and the
//! predictor's feature buffer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sumtree::SumTree;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    /// Discounted return from this state to the end of its episode.
    pub ret: f64,
}

/// FIFO transition store with proportional sampling by priority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilBuffer {
    capacity: usize,
    priority_eps: f64,
    entries: Vec<Transition>,
    tree: SumTree,
    /// Slot that the next insert overwrites once the buffer is full.
    next: usize,
}

impl SilBuffer {
    pub fn new(capacity: usize, priority_eps: f64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("SIL buffer capacity must be positive"));
        }
        if !(priority_eps > 0.0) {
            return Err(Error::config("priority epsilon must be positive"));
        }
        Ok(Self {
            capacity,
            priority_eps,
            entries: Vec::new(),
            tree: SumTree::new(capacity),
            next: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, slot: usize) -> &Transition {
        &self.entries[slot]
    }

    pub fn priority(&self, slot: usize) -> f64 {
        self.tree.get(slot)
    }

    pub fn total_priority(&self) -> f64 {
        self.tree.total()
    }

    /// Priority of a transition whose advantage is `ret - value`.
    pub fn priority_for(&self, advantage: f64) -> f64 {
        advantage.max(0.0) + self.priority_eps
    }

    pub fn push(&mut self, t: Transition, advantage: f64) -> Result<()> {
        if !t.ret.is_finite() {
            return Err(Error::non_finite("transition return"));
        }
        let p = self.priority_for(advantage);
        let slot = self.next;
        if self.entries.len() < self.capacity {
            self.entries.push(t);
        } else {
            self.entries[slot] = t;
        }
        self.tree.set(slot, p);
        self.next = (slot + 1) % self.capacity;
        Ok(())
    }

    pub fn update_priority(&mut self, slot: usize, advantage: f64) {
        let p = self.priority_for(advantage);
        self.tree.set(slot, p);
    }

    /// Draws `count` slots with replacement, each with probability
    /// proportional to its priority.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<usize> {
        if self.is_empty() {
            return Vec::new();
        }
        let total = self.tree.total();
        (0..count)
            .map(|_| self.tree.find(rng.gen::<f64>() * total).min(self.entries.len() - 1))
            .collect()
    }
}

/// A predictor training example: a state feature and the frozen target
/// network's output on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub feature: Vec<f64>,
    pub target: Vec<f64>,
}

/// FIFO feature memory with uniform sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBuffer {
    capacity: usize,
    entries: Vec<FeatureRecord>,
    next: usize,
}

impl FeatureBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("feature buffer capacity must be positive"));
        }
        Ok(Self {
            capacity,
            entries: Vec::new(),
            next: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn records(&self) -> &[FeatureRecord] {
        &self.entries
    }

    pub fn push(&mut self, record: FeatureRecord) {
        if self.entries.len() < self.capacity {
            self.entries.push(record);
        } else {
            self.entries[self.next] = record;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.next = 0;
    }
}

/// Uniform draw of `count` indices into `len` items, with replacement.
pub fn sample_uniform<R: Rng + ?Sized>(len: usize, count: usize, rng: &mut R) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    (0..count).map(|_| rng.gen_range(0..len)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(ret: f64) -> Transition {
        Transition { state: vec![ret], action: 0, ret }
    }

    #[test]
    fn sampling_ratio_follows_priorities() {
        let mut b = SilBuffer::new(8, 1e-5).unwrap();
        b.push(t(0.0), 3.0 - 1e-5).unwrap();
        b.push(t(1.0), 1.0 - 1e-5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let draws = b.sample(10_000, &mut rng);
        let first = draws.iter().filter(|&&s| s == 0).count() as f64;
        let ratio = first / (10_000.0 - first);
        assert!((ratio - 3.0).abs() < 0.25, "ratio {ratio}");
    }

    #[test]
    fn fifo_eviction_and_floor() {
        let mut b = SilBuffer::new(2, 1e-5).unwrap();
        for k in 0..5 {
            b.push(t(k as f64), -1.0).unwrap();
        }
        assert_eq!(b.len(), 2);
        let rets: Vec<f64> = (0..2).map(|s| b.get(s).ret).collect();
        assert_eq!(rets, vec![4.0, 3.0]);
        assert_eq!(b.priority(0), 1e-5);
        assert!((b.total_priority() - 2e-5).abs() < 1e-18);
    }

    #[test]
    fn rejects_non_finite_return() {
        let mut b = SilBuffer::new(2, 1e-5).unwrap();
        assert!(b.push(t(f64::NAN), 0.0).is_err());
    }

    #[test]
    fn feature_buffer_wraps() {
        let mut f = FeatureBuffer::new(3).unwrap();
        for k in 0..5 {
            f.push(FeatureRecord { feature: vec![k as f64], target: vec![] });
        }
        let got: Vec<f64> = f.records().iter().map(|r| r.feature[0]).collect();
        assert_eq!(got, vec![3.0, 4.0, 2.0]);
        f.clear();
        assert!(f.is_empty());
    }
}
