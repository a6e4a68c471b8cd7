/// Binary tree of partial sums over `capacity` leaves: O(log n) update and
/// prefix-sum search.
#[derive(Debug, Clone)]
pub struct SumTree {
    capacity: usize,
    /// Leaves start at `base`; node `i` has children `2i` and `2i + 1`; root is 1.
    base: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "sum tree needs at least one leaf");
        let base = capacity.next_power_of_two();
        Self {
            capacity,
            base,
            nodes: vec![0.0; 2 * base],
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, leaf: usize) -> f64 {
        self.nodes[self.base + leaf]
    }

    /// Set a leaf and recompute its ancestors from their children, so no rounding
    /// drift accumulates across updates.
    pub fn set(&mut self, leaf: usize, value: f64) {
        assert!(leaf < self.capacity, "leaf {leaf} out of range");
        assert!(value >= 0.0 && value.is_finite(), "invalid leaf value {value}");
        let mut i = self.base + leaf;
        self.nodes[i] = value;
        while i > 1 {
            i /= 2;
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    /// Leaf whose cumulative range contains `mass`, for `0 <= mass < total()`.
    /// Zero-valued leaves own an empty range and are skipped.
    pub fn find(&self, mut mass: f64) -> usize {
        let mut i = 1;
        while i < self.base {
            let left = self.nodes[2 * i];
            if mass < left {
                i *= 2;
            } else {
                mass -= left;
                i = 2 * i + 1;
            }
        }
        i - self.base
    }

    /// Sum of leaves computed directly, for consistency checks.
    pub fn leaf_sum(&self) -> f64 {
        self.nodes[self.base..self.base + self.capacity].iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn find_respects_ranges() {
        let mut t = SumTree::new(5);
        for (i, v) in [1.0, 0.0, 2.0, 3.0, 0.5].into_iter().enumerate() {
            t.set(i, v);
        }
        assert_eq!(t.total(), 6.5);
        assert_eq!(t.find(0.0), 0);
        assert_eq!(t.find(0.999), 0);
        assert_eq!(t.find(1.0), 2);
        assert_eq!(t.find(2.999), 2);
        assert_eq!(t.find(3.0), 3);
        assert_eq!(t.find(6.2), 4);
    }

    #[test]
    fn overwrite_updates_total() {
        let mut t = SumTree::new(3);
        t.set(0, 4.0);
        t.set(0, 1.0);
        t.set(2, 2.0);
        assert_eq!(t.total(), 3.0);
        assert_eq!(t.get(0), 1.0);
    }
}
