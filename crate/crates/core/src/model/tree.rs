//! CART-style trees grown by exact greedy splitting over pre-sorted feature
//! indices, shared by the random forest (Gini) and gradient boosting
//! (least-squares on gradients).
//!
//! The grower keeps one index array per feature, sorted by value and
//! partitioned in lockstep as nodes split, so the cost per tree level is
//! O(features x active rows) regardless of node count.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Matrix;

pub const LEAF: i32 = -1;
const NO_NODE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Split feature, or [`LEAF`].
    pub feature: i32,
    /// Rows with value <= threshold go left. The threshold is the exact
    /// left-boundary value seen in training, so the partition is bit-exact.
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    /// Leaf payload: majority class (0/1) for classification, additive
    /// update for regression.
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            let n = &self.nodes[at];
            if n.feature == LEAF {
                return n.value;
            }
            at = if row[n.feature as usize] <= n.threshold { n.left as usize } else { n.right as usize };
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature == LEAF).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, at: usize) -> usize {
            let n = &t.nodes[at];
            if n.feature == LEAF {
                0
            } else {
                1 + walk(t, n.left as usize).max(walk(t, n.right as usize))
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(self, 0)
        }
    }

    /// Features used by split nodes, for inspection.
    pub fn split_features(&self) -> Vec<usize> {
        self.nodes.iter().filter(|n| n.feature != LEAF).map(|n| n.feature as usize).collect()
    }
}

/// Argsort every column by (value, row index); computed once per fit and
/// shared across trees.
pub fn sort_features(x: &Matrix) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(x.n_cols());
    for d in 0..x.n_cols() {
        let mut idx: Vec<u32> = (0..x.n_rows() as u32).collect();
        idx.sort_by(|&a, &b| {
            x.get(a as usize, d)
                .partial_cmp(&x.get(b as usize, d))
                .unwrap()
                .then(a.cmp(&b))
        });
        out.push(idx);
    }
    out
}

/// What the tree fits.
pub enum Target<'a> {
    /// Binary labels with per-row weights (bootstrap counts); Gini splits,
    /// majority-class leaves. Weight 0 excludes a row.
    Classes { y: &'a [u8], weights: &'a [f64] },
    /// Gradient/hessian pairs; variance-gain splits, Newton-step leaves
    /// `sum(grad) / (sum(hess) + eps)`.
    Residuals { grad: &'a [f64], hess: &'a [f64] },
}

pub struct GrowSettings {
    /// Maximum split depth; `usize::MAX` for unlimited.
    pub max_depth: usize,
    /// Minimum weighted row count per child.
    pub min_leaf: f64,
    /// Candidate features per split; >= n_features means all.
    pub mtry: usize,
}

pub struct Grown {
    pub tree: Tree,
    /// Per-feature accumulated weighted impurity decrease.
    pub gains: Vec<f64>,
    /// Final leaf node index per row (NO_NODE for excluded rows).
    pub leaf_of_row: Vec<u32>,
}

/// Accumulated node statistics. Classification: (w, a) = (total weight,
/// weight of class 1). Regression: (w, a, b) = (count, sum grad, sum hess).
#[derive(Clone, Copy, Default)]
struct Stats {
    w: f64,
    a: f64,
    b: f64,
}

impl Stats {
    #[inline]
    fn add(&mut self, o: Stats) {
        self.w += o.w;
        self.a += o.a;
        self.b += o.b;
    }

    #[inline]
    fn sub(self, o: Stats) -> Stats {
        Stats { w: self.w - o.w, a: self.a - o.a, b: self.b - o.b }
    }
}

impl<'a> Target<'a> {
    #[inline]
    fn row_stat(&self, r: usize) -> Stats {
        match self {
            Target::Classes { y, weights } => {
                let w = weights[r];
                Stats { w, a: if y[r] == 1 { w } else { 0.0 }, b: 0.0 }
            }
            Target::Residuals { grad, hess } => Stats { w: 1.0, a: grad[r], b: hess[r] },
        }
    }

    /// Weighted impurity score; split gain is parent - left - right.
    #[inline]
    fn score(&self, s: &Stats) -> f64 {
        match self {
            // w * gini = w - (a^2 + (w-a)^2) / w
            Target::Classes { .. } => s.w - (s.a * s.a + (s.w - s.a) * (s.w - s.a)) / s.w,
            // SSE proxy: -sum^2 / n (the constant sum of squares cancels in gains)
            Target::Residuals { .. } => -(s.a * s.a) / s.w,
        }
    }

    #[inline]
    fn is_pure(&self, s: &Stats) -> bool {
        match self {
            Target::Classes { .. } => s.a == 0.0 || s.a == s.w,
            Target::Residuals { .. } => false,
        }
    }

    fn leaf_value(&self, s: &Stats) -> f64 {
        match self {
            Target::Classes { .. } => {
                if s.a * 2.0 >= s.w {
                    1.0
                } else {
                    0.0
                }
            }
            Target::Residuals { .. } => s.a / (s.b + 1e-12),
        }
    }

    /// Zero-gain splits are allowed for classification so an impure node can
    /// still make progress (e.g. XOR layouts); regression requires a
    /// strictly positive gain.
    fn min_gain(&self) -> f64 {
        match self {
            Target::Classes { .. } => 0.0,
            Target::Residuals { .. } => 1e-12,
        }
    }
}

struct Task {
    node: u32,
    depth: usize,
    lo: usize,
    hi: usize,
    stats: Stats,
}

/// Grow one tree. `sorted` comes from [`sort_features`]; rows with weight 0
/// (classification) are skipped. Deterministic given the RNG state: feature
/// subsets are drawn per node in stack (depth-first) order.
pub fn grow(
    x: &Matrix,
    sorted: &[Vec<u32>],
    target: &Target,
    cfg: &GrowSettings,
    rng: &mut ChaCha8Rng,
) -> Grown {
    let n = x.n_rows();
    let n_feat = x.n_cols();

    // Per-feature order arrays over active rows only.
    let active = |r: usize| match target {
        Target::Classes { weights, .. } => weights[r] > 0.0,
        Target::Residuals { .. } => true,
    };
    let mut order: Vec<Vec<u32>> = sorted
        .iter()
        .map(|col| col.iter().copied().filter(|&r| active(r as usize)).collect())
        .collect();
    let m = order.first().map_or(0, Vec::len);

    let mut gains = vec![0.0; n_feat];
    let mut leaf_of_row = vec![NO_NODE; n];
    let mut tree = Tree::default();

    if m == 0 {
        tree.nodes.push(Node { feature: LEAF, threshold: 0.0, left: 0, right: 0, value: 0.0 });
        return Grown { tree, gains, leaf_of_row };
    }

    let mut root_stats = Stats::default();
    for &r in &order[0][..m] {
        root_stats.add(target.row_stat(r as usize));
    }

    tree.nodes.push(Node { feature: LEAF, threshold: 0.0, left: 0, right: 0, value: 0.0 });
    let mut stack = vec![Task { node: 0, depth: 0, lo: 0, hi: m, stats: root_stats }];

    let mut goes_left = vec![false; n];
    let mut scratch: Vec<u32> = Vec::with_capacity(m);
    let mut feat_buf: Vec<usize> = (0..n_feat).collect();
    let mtry = cfg.mtry.min(n_feat).max(1);

    while let Some(task) = stack.pop() {
        let seg = task.hi - task.lo;
        let make_leaf = seg < 2
            || task.depth >= cfg.max_depth
            || task.stats.w < 2.0 * cfg.min_leaf
            || target.is_pure(&task.stats);

        if !make_leaf {
            // Draw the candidate feature subset for this node.
            let candidates: &[usize] = if mtry < n_feat {
                for t in 0..mtry {
                    let j = rng.gen_range(t..n_feat);
                    feat_buf.swap(t, j);
                }
                feat_buf[..mtry].sort_unstable();
                &feat_buf[..mtry]
            } else {
                feat_buf.sort_unstable();
                &feat_buf[..]
            };

            let parent_score = target.score(&task.stats);
            let mut best_gain = f64::NEG_INFINITY;
            let mut best: Option<(usize, f64, Stats)> = None;

            for &d in candidates {
                let col = &order[d][task.lo..task.hi];
                let mut acc = Stats::default();
                for (pos, &r) in col.iter().enumerate() {
                    acc.add(target.row_stat(r as usize));
                    if pos + 1 == col.len() {
                        break;
                    }
                    let v = x.get(r as usize, d);
                    let v_next = x.get(col[pos + 1] as usize, d);
                    if v >= v_next {
                        continue; // only split between distinct values
                    }
                    if acc.w < cfg.min_leaf || task.stats.w - acc.w < cfg.min_leaf {
                        continue;
                    }
                    let right = task.stats.sub(acc);
                    let gain = parent_score - target.score(&acc) - target.score(&right);
                    if gain >= target.min_gain() && gain > best_gain {
                        best_gain = gain;
                        best = Some((d, v, acc));
                    }
                }
            }

            if let Some((d, threshold, left_stats)) = best {
                gains[d] += best_gain;

                for &r in &order[d][task.lo..task.hi] {
                    goes_left[r as usize] = x.get(r as usize, d) <= threshold;
                }
                // Stable partition of every feature's segment.
                let mut n_left = 0;
                for col in order.iter_mut() {
                    scratch.clear();
                    let seg_slice = &mut col[task.lo..task.hi];
                    let mut write = 0;
                    for pos in 0..seg_slice.len() {
                        let r = seg_slice[pos];
                        if goes_left[r as usize] {
                            seg_slice[write] = r;
                            write += 1;
                        } else {
                            scratch.push(r);
                        }
                    }
                    seg_slice[write..].copy_from_slice(&scratch);
                    n_left = write;
                }

                let left_id = tree.nodes.len() as u32;
                let right_id = left_id + 1;
                tree.nodes.push(Node { feature: LEAF, threshold: 0.0, left: 0, right: 0, value: 0.0 });
                tree.nodes.push(Node { feature: LEAF, threshold: 0.0, left: 0, right: 0, value: 0.0 });
                let node = &mut tree.nodes[task.node as usize];
                node.feature = d as i32;
                node.threshold = threshold;
                node.left = left_id;
                node.right = right_id;

                let right_stats = task.stats.sub(left_stats);
                stack.push(Task {
                    node: right_id,
                    depth: task.depth + 1,
                    lo: task.lo + n_left,
                    hi: task.hi,
                    stats: right_stats,
                });
                stack.push(Task {
                    node: left_id,
                    depth: task.depth + 1,
                    lo: task.lo,
                    hi: task.lo + n_left,
                    stats: left_stats,
                });
                continue;
            }
        }

        // Leaf.
        let value = target.leaf_value(&task.stats);
        let node = &mut tree.nodes[task.node as usize];
        node.feature = LEAF;
        node.value = value;
        for &r in &order[0][task.lo..task.hi] {
            leaf_of_row[r as usize] = task.node;
        }
    }

    Grown { tree, gains, leaf_of_row }
}
