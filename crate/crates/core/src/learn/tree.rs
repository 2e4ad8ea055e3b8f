//! Greedy least-squares regression trees.
//!
//! Trees grow level by level over presorted feature columns so that each
//! level costs one pass per feature regardless of how many nodes are open.
//! Feature scans run in parallel; the winning split per node is the largest
//! gain with ties going to the lowest feature index, then the lowest
//! threshold, which keeps results identical to a sequential scan.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

const CLOSED: u32 = u32::MAX;
const GAIN_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Binary tree; samples with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    max_depth: usize,
}

impl DecisionTree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
            max_depth: 0,
        }
    }

    /// One split with fixed leaf values.
    pub fn stump(feature: usize, threshold: f64, left: f64, right: f64) -> Self {
        Self {
            nodes: vec![
                Node::Split {
                    feature,
                    threshold,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: left },
                Node::Leaf { value: right },
            ],
            max_depth: 1,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Index of the leaf reached by `x`. `x` must be long enough for every
    /// split feature.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
                Node::Leaf { .. } => return i,
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(x)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn leaf_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { value } => Some(*value),
            Node::Split { .. } => None,
        })
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    /// Largest feature index used by any split plus one.
    pub fn min_dim(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(feature + 1),
                Node::Leaf { .. } => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        if self.min_dim() > dim {
            return Err(Error::CorruptModel(format!(
                "tree splits on feature {} of {dim}",
                self.min_dim() - 1
            )));
        }
        for n in &self.nodes {
            let ok = match *n {
                Node::Split {
                    threshold,
                    left,
                    right,
                    ..
                } => threshold.is_finite() && left < self.nodes.len() && right < self.nodes.len(),
                Node::Leaf { value } => value.is_finite(),
            };
            if !ok {
                return Err(Error::CorruptModel("malformed tree node".into()));
            }
        }
        Ok(())
    }
}

/// Per-feature sample order, computed once per training matrix.
pub struct SortedColumns {
    n_samples: usize,
    order: Vec<Vec<u32>>,
    values: Vec<Vec<f64>>,
}

impl SortedColumns {
    pub fn new(x: &[Vec<f64>]) -> Self {
        let dim = x.first().map_or(0, Vec::len);
        let cols = par::map_range(dim, |f| {
            let mut idx: Vec<u32> = (0..x.len() as u32).collect();
            idx.sort_by(|&a, &b| x[a as usize][f].total_cmp(&x[b as usize][f]).then(a.cmp(&b)));
            let vals = idx.iter().map(|&i| x[i as usize][f]).collect();
            (idx, vals)
        });
        let (order, values) = cols.into_iter().unzip();
        Self {
            n_samples: x.len(),
            order,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.order.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Sample indices and values of feature `f`, ascending.
    pub fn column(&self, f: usize) -> (&[u32], &[f64]) {
        (&self.order[f], &self.values[f])
    }
}

/// Threshold between two distinct sorted values, guaranteed to separate them.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo * 0.5 + hi * 0.5;
    if m >= hi || m < lo {
        lo
    } else {
        m
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    threshold: f64,
}

struct Open {
    node: usize,
    sum: f64,
    sum_sq: f64,
    count: usize,
}

fn scan_feature(
    cols: &SortedColumns,
    f: usize,
    slot: &[u32],
    open: &[Open],
    targets: &[f64],
    min_leaf: usize,
) -> Vec<Option<Candidate>> {
    let mut count = vec![0usize; open.len()];
    let mut sum = vec![0.0; open.len()];
    let mut last = vec![f64::NAN; open.len()];
    let mut best: Vec<Option<Candidate>> = vec![None; open.len()];
    let (order, values) = cols.column(f);
    for (&i, &v) in order.iter().zip(values) {
        let s = slot[i as usize];
        if s == CLOSED {
            continue;
        }
        let s = s as usize;
        let o = &open[s];
        let n_left = count[s];
        if n_left >= min_leaf && o.count - n_left >= min_leaf && v > last[s] {
            let n_right = o.count - n_left;
            let sum_right = o.sum - sum[s];
            let gain = sum[s] * sum[s] / n_left as f64 + sum_right * sum_right / n_right as f64
                - o.sum * o.sum / o.count as f64;
            if best[s].is_none_or(|b| gain > b.gain) {
                best[s] = Some(Candidate {
                    gain,
                    threshold: midpoint(last[s], v),
                });
            }
        }
        count[s] += 1;
        sum[s] += targets[i as usize];
        last[s] = v;
    }
    best
}

/// Fits a tree to `targets` and returns it with the leaf node reached by each
/// training sample.
pub(crate) fn grow(
    x: &[Vec<f64>],
    cols: &SortedColumns,
    targets: &[f64],
    max_depth: usize,
    min_leaf: usize,
) -> (DecisionTree, Vec<u32>) {
    let n = targets.len();
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut node_of = vec![0u32; n];
    let mut slot = vec![0u32; n];
    let mut open = vec![Open {
        node: 0,
        sum: targets.iter().sum(),
        sum_sq: targets.iter().map(|t| t * t).sum(),
        count: n,
    }];

    for _ in 0..max_depth {
        if open.is_empty() {
            break;
        }
        let per_feature = par::map_range(cols.dim(), |f| {
            scan_feature(cols, f, &slot, &open, targets, min_leaf)
        });

        // decide splits; `children[s]` holds the new slot ids of slot s
        let mut children: Vec<Option<(usize, f64, u32, u32)>> = vec![None; open.len()];
        let mut next: Vec<Open> = Vec::new();
        for (s, o) in open.iter().enumerate() {
            let mut best: Option<(usize, Candidate)> = None;
            for (f, cands) in per_feature.iter().enumerate() {
                if let Some(c) = cands[s] {
                    if best.is_none_or(|(_, b)| c.gain > b.gain) {
                        best = Some((f, c));
                    }
                }
            }
            let Some((feature, c)) = best else { continue };
            if !(c.gain > GAIN_RTOL * o.sum_sq) {
                continue;
            }
            let left = nodes.len();
            nodes.push(Node::Leaf { value: 0.0 });
            nodes.push(Node::Leaf { value: 0.0 });
            nodes[o.node] = Node::Split {
                feature,
                threshold: c.threshold,
                left,
                right: left + 1,
            };
            let ls = next.len() as u32;
            for node in [left, left + 1] {
                next.push(Open {
                    node,
                    sum: 0.0,
                    sum_sq: 0.0,
                    count: 0,
                });
            }
            children[s] = Some((feature, c.threshold, ls, ls + 1));
        }

        for i in 0..n {
            let s = slot[i];
            if s == CLOSED {
                continue;
            }
            match children[s as usize] {
                Some((feature, threshold, l, r)) => {
                    let c = if x[i][feature] <= threshold { l } else { r };
                    slot[i] = c;
                    let o = &mut next[c as usize];
                    node_of[i] = o.node as u32;
                    o.sum += targets[i];
                    o.sum_sq += targets[i] * targets[i];
                    o.count += 1;
                }
                None => slot[i] = CLOSED,
            }
        }
        open = next;
    }

    let mut sums = vec![(0.0, 0usize); nodes.len()];
    for (i, &node) in node_of.iter().enumerate() {
        sums[node as usize].0 += targets[i];
        sums[node as usize].1 += 1;
    }
    for (node, (s, c)) in nodes.iter_mut().zip(sums) {
        if let Node::Leaf { value } = node {
            *value = if c > 0 { s / c as f64 } else { 0.0 };
        }
    }
    (DecisionTree { nodes, max_depth }, node_of)
}

/// Greedy least-squares tree on `residuals`; leaves hold the mean residual.
pub fn fit_tree(
    x: &[Vec<f64>],
    residuals: &[f64],
    max_depth: usize,
    min_samples_leaf: usize,
) -> Result<DecisionTree> {
    if x.len() != residuals.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: residuals.len(),
        });
    }
    let min_leaf = min_samples_leaf.max(1);
    if x.len() < 2 * min_leaf {
        return Err(Error::TooFewSamples {
            needed: 2 * min_leaf,
            actual: x.len(),
        });
    }
    let cols = SortedColumns::new(x);
    Ok(grow(x, &cols, residuals, max_depth, min_leaf).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sse(tree: &DecisionTree, x: &[Vec<f64>], r: &[f64]) -> f64 {
        x.iter().zip(r).map(|(row, t)| (tree.predict(row) - t).powi(2)).sum()
    }

    // Every axis-aligned single split, scored by brute force.
    fn best_depth1_sse(x: &[Vec<f64>], r: &[f64]) -> f64 {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let sse_of = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|t| (t - m).powi(2)).sum::<f64>()
        };
        let mut best = sse_of(r);
        for f in 0..x[0].len() {
            for row in x {
                let thr = row[f];
                let (l, rt): (Vec<f64>, Vec<f64>) = {
                    let mut l = Vec::new();
                    let mut rt = Vec::new();
                    for (xr, t) in x.iter().zip(r) {
                        if xr[f] <= thr {
                            l.push(*t)
                        } else {
                            rt.push(*t)
                        }
                    }
                    (l, rt)
                };
                if l.is_empty() || rt.is_empty() {
                    continue;
                }
                best = best.min(sse_of(&l) + sse_of(&rt));
            }
        }
        best
    }

    #[test]
    fn constant_residuals_give_single_leaf() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let tree = fit_tree(&x, &[0.3; 10], 3, 1).unwrap();
        assert_eq!(tree.nodes().len(), 1);
        assert!((tree.predict(&x[4]) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn perfect_single_split() {
        let x = vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0]];
        let tree = fit_tree(&x, &[-1.0, -1.0, 1.0, 1.0], 1, 1).unwrap();
        match tree.nodes()[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 0.5);
            }
            _ => panic!("expected a split"),
        }
        assert_eq!(tree.predict(&[0.0]), -1.0);
        assert_eq!(tree.predict(&[1.0]), 1.0);
    }

    #[test]
    fn depth_two_never_worse_than_any_depth_one_split() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let x: Vec<Vec<f64>> = (0..50)
                .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
                .collect();
            let r: Vec<f64> = x
                .iter()
                .map(|v| (v[0] * 6.0).sin() + v[1] + rng.random_range(-0.2..0.2))
                .collect();
            let d1 = fit_tree(&x, &r, 1, 1).unwrap();
            let d2 = fit_tree(&x, &r, 2, 1).unwrap();
            let oracle = best_depth1_sse(&x, &r);
            assert!((sse(&d1, &x, &r) - oracle).abs() < 1e-9);
            assert!(sse(&d2, &x, &r) <= oracle + 1e-12);
            assert!(d2.depth() <= 2);
        }
    }

    #[test]
    fn respects_min_leaf_and_depth() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
        let r: Vec<f64> = (0..30).map(|i| ((i * 7) % 5) as f64).collect();
        let tree = fit_tree(&x, &r, 4, 4).unwrap();
        assert!(tree.depth() <= 4);
        let mut counts = std::collections::HashMap::new();
        for row in &x {
            *counts.entry(tree.leaf_index(row)).or_insert(0) += 1;
        }
        assert!(counts.values().all(|&c| c >= 4));
        assert!(matches!(fit_tree(&x[..5], &r[..5], 2, 3), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn ties_go_to_lowest_feature() {
        // both features split the data identically
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![(i / 3) as f64, (i / 3) as f64]).collect();
        let r = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        match fit_tree(&x, &r, 1, 1).unwrap().nodes()[0] {
            Node::Split { feature, .. } => assert_eq!(feature, 0),
            _ => panic!(),
        }
    }

    #[test]
    fn midpoint_separates_neighbours() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let m = midpoint(a, b);
        assert!(a <= m && m < b);
        assert_eq!(midpoint(0.0, 1.0), 0.5);
    }
}
