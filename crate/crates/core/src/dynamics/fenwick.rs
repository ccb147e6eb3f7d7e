/// Binary indexed tree over integer site weights, supporting point updates
/// and sampling an index proportionally to its weight in `O(log n)`.
#[derive(Debug, Clone)]
pub struct Fenwick {
    tree: Vec<u64>,
    weights: Vec<u64>,
    total: u64,
    top: usize,
}

impl Fenwick {
    pub fn new(weights: Vec<u64>) -> Self {
        let n = weights.len();
        let mut tree = vec![0u64; n + 1];
        for (i, &w) in weights.iter().enumerate() {
            tree[i + 1] += w;
            let j = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if j <= n {
                tree[j] += tree[i + 1];
            }
        }
        let total = weights.iter().sum();
        let top = if n == 0 {
            0
        } else {
            1 << (usize::BITS - 1 - n.leading_zeros())
        };
        Self {
            tree,
            weights,
            total,
            top,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn weight(&self, i: usize) -> u64 {
        self.weights[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, w: u64) {
        let old = self.weights[i];
        if old == w {
            return;
        }
        self.weights[i] = w;
        self.total = self.total - old + w;
        let mut j = i + 1;
        while j < self.tree.len() {
            self.tree[j] = self.tree[j].wrapping_add(w.wrapping_sub(old));
            j += j & j.wrapping_neg();
        }
    }

    /// Smallest index `i` with `w_0 + ... + w_i > target`; requires
    /// `target < total`.
    #[inline]
    pub fn find(&self, mut target: u64) -> usize {
        debug_assert!(target < self.total);
        let mut pos = 0usize;
        let mut step = self.top;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}
