//! Append-only Fenwick tree over positive weights, used for O(log n)
//! length-proportional segment selection.

/// Fenwick (binary indexed) tree, 1-based.
#[derive(Debug, Clone, Default)]
pub struct WeightIndex {
    // tree[0] is unused; tree[i] covers the range (i - lsb(i), i]
    tree: Vec<f64>,
}

#[inline]
fn lsb(i: usize) -> usize {
    i & i.wrapping_neg()
}

impl WeightIndex {
    pub fn new() -> Self {
        Self { tree: vec![0.0] }
    }

    pub fn with_capacity(n: usize) -> Self {
        let mut tree = Vec::with_capacity(n + 1);
        tree.push(0.0);
        Self { tree }
    }

    pub fn len(&self) -> usize {
        self.tree.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends the weight of element len()+1.
    pub fn push(&mut self, w: f64) {
        let n = self.tree.len(); // new 1-based index
        let lo = n - lsb(n);
        let node = w + self.prefix(n - 1) - self.prefix(lo);
        self.tree.push(node);
    }

    /// Sum of weights 1..=i (0 for i = 0).
    pub fn prefix(&self, mut i: usize) -> f64 {
        debug_assert!(i < self.tree.len());
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i -= lsb(i);
        }
        s
    }

    pub fn total(&self) -> f64 {
        self.prefix(self.len())
    }

    /// Lowest index i with prefix(i) > target, for target in [0, total).
    ///
    /// The descent is a fixed binary-lifting walk, so replays with the same
    /// weights and targets are bit-stable. Targets at or beyond the total
    /// clamp to the last index.
    pub fn search(&self, target: f64) -> usize {
        let n = self.len();
        debug_assert!(n > 0);
        let mut pos = 0usize;
        let mut rem = target;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= rem {
                rem -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        (pos + 1).min(n)
    }
}
