//! Binary sum tree for proportional sampling over a fixed number of slots.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumTree {
    capacity: usize,
    /// Heap layout: node `i` has children `2i + 1` and `2i + 2`; leaves start
    /// at `leaf_base`.
    nodes: Vec<f64>,
    leaf_base: usize,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "sum tree needs at least one slot");
        let leaves = capacity.next_power_of_two();
        Self {
            capacity,
            nodes: vec![0.0; 2 * leaves - 1],
            leaf_base: leaves - 1,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn total(&self) -> f64 {
        self.nodes[0]
    }

    pub fn get(&self, slot: usize) -> f64 {
        self.nodes[self.leaf_base + slot]
    }

    /// Sets a slot's priority. Ancestors are recomputed from their children
    /// rather than patched by a delta, so rounding error does not accumulate.
    pub fn set(&mut self, slot: usize, priority: f64) {
        assert!(slot < self.capacity, "slot {slot} out of range");
        assert!(priority >= 0.0 && priority.is_finite(), "priority must be finite and non-negative");
        let mut i = self.leaf_base + slot;
        self.nodes[i] = priority;
        while i > 0 {
            i = (i - 1) / 2;
            self.nodes[i] = self.nodes[2 * i + 1] + self.nodes[2 * i + 2];
        }
    }

    /// Slot whose cumulative range contains `mass`, for `mass` in `[0, total)`.
    pub fn find(&self, mass: f64) -> usize {
        let mut mass = mass;
        let mut i = 0;
        while i < self.leaf_base {
            let left = 2 * i + 1;
            if mass < self.nodes[left] || self.nodes[left + 1] == 0.0 {
                i = left;
            } else {
                mass -= self.nodes[left];
                i = left + 1;
            }
        }
        (i - self.leaf_base).min(self.capacity - 1)
    }
}
