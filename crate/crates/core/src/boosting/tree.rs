//! Leaf-wise (best-first) regression tree growth on histograms.

use serde::{Deserialize, Serialize};

use super::bins::{BinMapper, BinnedMatrix};
use super::histogram::{BinStats, Histogram, HistogramLayout, HistogramPool, Split, SplitParams, SplitRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        /// Rows whose bin is `<= bin` go left.
        bin: u8,
        /// Upper edge of `bin`; raw values `<= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Flat tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => idx = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    /// Structural check: children in range, leaves finite.
    pub fn is_well_formed(&self) -> bool {
        self.nodes.iter().all(|n| match *n {
            TreeNode::Leaf { value } => value.is_finite(),
            TreeNode::Split { left, right, .. } => left < self.nodes.len() && right < self.nodes.len(),
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GrowParams {
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub l2: f64,
    pub learning_rate: f64,
}

/// Shared, read-only training state for every tree of a model.
pub struct GrowContext<'a> {
    pub mapper: &'a BinMapper,
    pub binned: &'a BinnedMatrix,
    pub layout: &'a HistogramLayout,
}

struct OpenLeaf {
    node: usize,
    start: usize,
    end: usize,
    sums: BinStats,
    hist: Option<Histogram>,
    split: Option<Split>,
}

/// Leaf value including shrinkage.
fn leaf_value(sums: BinStats, params: &GrowParams) -> f64 {
    let denom = sums.hess + params.l2;
    if denom <= 1e-12 {
        0.0
    } else {
        -sums.grad / denom * params.learning_rate
    }
}

/// Tree fitted to `grad`/`hess` plus each training row's contribution.
pub struct GrownTree {
    pub tree: Tree,
    pub row_values: Vec<f64>,
}

pub fn grow_tree(ctx: &GrowContext<'_>, grad: &[f64], hess: &[f64], params: &GrowParams) -> GrownTree {
    grow_tree_pooled(ctx, &mut HistogramPool::default(), grad, hess, params)
}

/// [`grow_tree`] drawing histogram storage from `pool`.
pub fn grow_tree_pooled(
    ctx: &GrowContext<'_>,
    pool: &mut HistogramPool,
    grad: &[f64],
    hess: &[f64],
    params: &GrowParams,
) -> GrownTree {
    let n = ctx.binned.n_rows();
    let split_params = SplitParams {
        l2: params.l2,
        min_samples_leaf: params.min_samples_leaf,
    };
    let splittable = |count: u32| count as usize >= 2 * params.min_samples_leaf;
    let mut rows: Vec<u32> = (0..n as u32).collect();
    let mut scratch: Vec<u32> = Vec::with_capacity(n);

    let root_sums = BinStats {
        grad: grad.iter().sum(),
        hess: hess.iter().sum(),
        count: n as u32,
    };
    let mut root = OpenLeaf {
        node: 0,
        start: 0,
        end: n,
        sums: root_sums,
        hist: None,
        split: None,
    };
    if params.max_leaves > 1 && splittable(root_sums.count) {
        let request = SplitRequest { total: root_sums, params: split_params };
        let (hist, split) = pool.build(ctx.layout, ctx.binned, None, grad, hess, Some(request));
        root.split = split;
        root.hist = Some(hist);
    }

    let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
    let mut open = vec![root];

    while open.len() < params.max_leaves {
        let pick = open
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.split.map(|s| (i, s.gain, l.node)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)));
        let Some((idx, _, _)) = pick else { break };
        let leaf = open.remove(idx);
        let split = leaf.split.expect("picked leaf has a split");

        let col = ctx.binned.column(split.feature);
        scratch.clear();
        let mut write = leaf.start;
        for i in leaf.start..leaf.end {
            let r = rows[i];
            if col[r as usize] <= split.bin {
                rows[write] = r;
                write += 1;
            } else {
                scratch.push(r);
            }
        }
        rows[write..leaf.end].copy_from_slice(&scratch);
        let mid = write;
        assert_eq!(mid - leaf.start, split.left.count as usize, "partition disagrees with histogram counts");

        let left_id = nodes.len();
        let right_id = left_id + 1;
        nodes.push(TreeNode::Leaf { value: 0.0 });
        nodes.push(TreeNode::Leaf { value: 0.0 });
        nodes[leaf.node] = TreeNode::Split {
            feature: split.feature,
            bin: split.bin,
            threshold: ctx.mapper.thresholds[split.feature][split.bin as usize],
            left: left_id,
            right: right_id,
        };

        let mut left = OpenLeaf {
            node: left_id,
            start: leaf.start,
            end: mid,
            sums: split.left,
            hist: None,
            split: None,
        };
        let mut right = OpenLeaf {
            node: right_id,
            start: mid,
            end: leaf.end,
            sums: split.right,
            hist: None,
            split: None,
        };

        let may_grow = open.len() + 2 < params.max_leaves;
        let mut parent_hist = leaf.hist;
        if may_grow && (splittable(left.sums.count) || splittable(right.sums.count)) {
            let (small, large) = if left.sums.count <= right.sums.count {
                (&mut left, &mut right)
            } else {
                (&mut right, &mut left)
            };
            let request = |leaf: &OpenLeaf| SplitRequest { total: leaf.sums, params: split_params };
            let small_request = splittable(small.sums.count).then(|| request(small));
            let (small_hist, small_split) =
                pool.build(ctx.layout, ctx.binned, Some(&rows[small.start..small.end]), grad, hess, small_request);
            if splittable(large.sums.count) {
                let mut large_hist = parent_hist.take().expect("split leaf keeps its histogram");
                large.split = large_hist.subtract_and_split(&small_hist, ctx.layout, request(large));
                large.hist = Some(large_hist);
            }
            if small_request.is_some() {
                small.split = small_split;
                small.hist = Some(small_hist);
            } else {
                pool.recycle(small_hist);
            }
        }
        if let Some(h) = parent_hist {
            pool.recycle(h);
        }
        open.push(left);
        open.push(right);
    }

    let mut row_values = vec![0.0; n];
    for leaf in &mut open {
        if let Some(h) = leaf.hist.take() {
            pool.recycle(h);
        }
        let value = leaf_value(leaf.sums, params);
        nodes[leaf.node] = TreeNode::Leaf { value };
        for &r in &rows[leaf.start..leaf.end] {
            row_values[r as usize] = value;
        }
    }
    GrownTree {
        tree: Tree { nodes },
        row_values,
    }
}
