//! Binary decision trees on numeric features.
//!
//! The same grower serves C4.5 (gain ratio, pessimistic pruning) and the
//! random-forest members (information gain over a random feature subset).

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Pruning confidence factor.
    pub confidence: f64,
    /// Minimum number of training rows in each branch of a split.
    pub min_per_node: usize,
    pub prune: bool,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            confidence: 0.25,
            min_per_node: 2,
            prune: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        /// Training rows of class 0 and class 1 reaching this leaf.
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: f64,
        counts: [usize; 2],
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn leaf_for(&self, x: &[f64]) -> [usize; 2] {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { counts } => return *counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Laplace-smoothed class-1 fraction at the leaf reached by `x`.
    pub fn score(&self, x: &[f64]) -> f64 {
        let [n0, n1] = self.leaf_for(x);
        (n1 as f64 + 1.0) / ((n0 + n1) as f64 + 2.0)
    }

    pub fn label(&self, x: &[f64]) -> u8 {
        let [n0, n1] = self.leaf_for(x);
        (n1 > n0) as u8
    }

    pub fn counts(&self) -> [usize; 2] {
        match self {
            Node::Leaf { counts } | Node::Split { counts, .. } => *counts,
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Criterion {
    GainRatio,
    InfoGain,
}

pub(crate) struct Grower<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [u8],
    pub criterion: Criterion,
    pub min_per_node: usize,
    /// Random feature subset size per split; `None` examines all features.
    pub sample: Option<(usize, &'a mut dyn RngCore)>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
    ratio: f64,
}

fn entropy(c: [usize; 2]) -> f64 {
    let n = (c[0] + c[1]) as f64;
    c.iter()
        .filter(|&&v| v > 0)
        .map(|&v| {
            let p = v as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn class_counts(y: &[u8], rows: &[usize]) -> [usize; 2] {
    let mut c = [0, 0];
    for &r in rows {
        c[y[r] as usize] += 1;
    }
    c
}

impl Grower<'_> {
    /// Best threshold on one feature by information gain; ties keep the
    /// lowest threshold.
    fn best_threshold(
        &self,
        rows: &[usize],
        feature: usize,
        parent: [usize; 2],
    ) -> Option<Candidate> {
        let mut sorted: Vec<usize> = rows.to_vec();
        sorted.sort_by(|&a, &b| {
            self.x[a][feature]
                .total_cmp(&self.x[b][feature])
                .then(a.cmp(&b))
        });
        let n = sorted.len();
        let h_parent = entropy(parent);
        let mut left = [0usize; 2];
        let mut best: Option<Candidate> = None;
        for p in 1..n {
            left[self.y[sorted[p - 1]] as usize] += 1;
            if p < self.min_per_node || n - p < self.min_per_node {
                continue;
            }
            let lo = self.x[sorted[p - 1]][feature];
            let hi = self.x[sorted[p]][feature];
            if lo >= hi {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1]];
            let wl = p as f64 / n as f64;
            let gain = h_parent - wl * entropy(left) - (1.0 - wl) * entropy(right);
            if best.is_none_or(|b| gain > b.gain) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                let split_info = entropy([p, n - p]);
                best = Some(Candidate {
                    feature,
                    threshold,
                    gain,
                    ratio: gain / split_info,
                });
            }
        }
        best
    }

    fn choose(&mut self, rows: &[usize], counts: [usize; 2]) -> Option<Candidate> {
        let k = self.x[0].len();
        match self.criterion {
            Criterion::GainRatio => {
                let cands: Vec<Candidate> = (0..k)
                    .filter_map(|f| self.best_threshold(rows, f, counts))
                    .filter(|c| c.gain > 1e-12)
                    .collect();
                if cands.is_empty() {
                    return None;
                }
                let avg = cands.iter().map(|c| c.gain).sum::<f64>() / cands.len() as f64;
                cands.into_iter().filter(|c| c.gain >= avg - 1e-3).fold(
                    None,
                    |acc: Option<Candidate>, c| match acc {
                        Some(a) if c.ratio <= a.ratio => Some(a),
                        _ => Some(c),
                    },
                )
            }
            Criterion::InfoGain => {
                let mut order: Vec<usize> = (0..k).collect();
                let m = match self.sample.as_mut() {
                    Some((m, rng)) => {
                        order.shuffle(&mut **rng);
                        (*m).min(k)
                    }
                    None => k,
                };
                let mut best: Option<Candidate> = None;
                for (seen, &f) in order.iter().enumerate() {
                    // keep drawing features beyond the subset until some split helps
                    if seen >= m && best.is_some_and(|b| b.gain > 1e-12) {
                        break;
                    }
                    if let Some(c) = self.best_threshold(rows, f, counts) {
                        let better = match best {
                            None => true,
                            Some(b) => {
                                c.gain > b.gain || (c.gain == b.gain && c.feature < b.feature)
                            }
                        };
                        if better {
                            best = Some(c);
                        }
                    }
                }
                best.filter(|b| b.gain > 1e-12)
            }
        }
    }

    pub fn grow(&mut self, rows: &[usize]) -> Node {
        let counts = class_counts(self.y, rows);
        if counts[0] == 0 || counts[1] == 0 || rows.len() < 2 * self.min_per_node.max(1) {
            return Node::Leaf { counts };
        }
        let Some(c) = self.choose(rows, counts) else {
            return Node::Leaf { counts };
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| self.x[i][c.feature] <= c.threshold);
        let left = Box::new(self.grow(&l));
        let right = Box::new(self.grow(&r));
        Node::Split {
            feature: c.feature,
            threshold: c.threshold,
            counts,
            left,
            right,
        }
    }
}

/// Pessimistic extra errors for `e` observed errors in `n` rows at confidence `cf`.
pub fn add_errs(n: f64, e: f64, cf: f64) -> f64 {
    if cf > 0.5 {
        return 0.0;
    }
    if e < 1.0 {
        let base = n * (1.0 - cf.powf(1.0 / n));
        if e == 0.0 {
            return base;
        }
        return base + e * (add_errs(n, 1.0, cf) - base);
    }
    if e + 0.5 >= n {
        return (n - e).max(0.0);
    }
    let z = Normal::standard().inverse_cdf(1.0 - cf);
    let f = (e + 0.5) / n;
    let r = (f + z * z / (2.0 * n) + z * (f / n - f * f / n + z * z / (4.0 * n * n)).sqrt())
        / (1.0 + z * z / n);
    r * n - e
}

fn leaf_estimate(counts: [usize; 2], cf: f64) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    let e = counts[0].min(counts[1]) as f64;
    e + add_errs(n, e, cf)
}

/// Bottom-up subtree replacement; returns the pruned node and its estimated errors.
pub fn prune(node: Node, cf: f64) -> (Node, f64) {
    match node {
        Node::Leaf { counts } => (node, leaf_estimate(counts, cf)),
        Node::Split {
            feature,
            threshold,
            counts,
            left,
            right,
        } => {
            let (left, le) = prune(*left, cf);
            let (right, re) = prune(*right, cf);
            let as_leaf = leaf_estimate(counts, cf);
            let subtree = le + re;
            if as_leaf <= subtree + 0.1 {
                (Node::Leaf { counts }, as_leaf)
            } else {
                (
                    Node::Split {
                        feature,
                        threshold,
                        counts,
                        left: Box::new(left),
                        right: Box::new(right),
                    },
                    subtree,
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
}

impl DecisionTree {
    pub fn fit(x: &[Vec<f64>], y: &[u8], params: &TreeParams) -> Result<Self> {
        if !y.contains(&0) || !y.contains(&1) {
            return Err(Error::SingleClassInput);
        }
        let mut grower = Grower {
            x,
            y,
            criterion: Criterion::GainRatio,
            min_per_node: params.min_per_node,
            sample: None,
        };
        let rows: Vec<usize> = (0..x.len()).collect();
        let mut root = grower.grow(&rows);
        if params.prune {
            root = prune(root, params.confidence).0;
        }
        Ok(DecisionTree { root })
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.root.score(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_root_split() {
        let x: Vec<Vec<f64>> = [-3.0, -2.0, -1.5, -0.4, 0.7, 1.0, 2.0, 3.5]
            .iter()
            .map(|&v| vec![v])
            .collect();
        let y: Vec<u8> = x.iter().map(|r| (r[0] > 0.0) as u8).collect();
        let tree = DecisionTree::fit(&x, &y, &TreeParams::default()).unwrap();
        match &tree.root {
            Node::Split {
                threshold,
                left,
                right,
                ..
            } => {
                assert!(*threshold > -0.4 && *threshold <= 0.7);
                assert!(
                    matches!(**left, Node::Leaf { .. }) && matches!(**right, Node::Leaf { .. })
                );
            }
            other => panic!("expected split, got {other:?}"),
        }
        for (r, &t) in x.iter().zip(&y) {
            assert_eq!(tree.root.label(r), t);
        }
    }

    #[test]
    fn pure_input_is_leaf() {
        let x = vec![vec![1.0], vec![2.0], vec![3.0]];
        let mut g = Grower {
            x: &x,
            y: &[1, 1, 1],
            criterion: Criterion::GainRatio,
            min_per_node: 2,
            sample: None,
        };
        assert_eq!(g.grow(&[0, 1, 2]), Node::Leaf { counts: [0, 3] });
        assert!(matches!(
            DecisionTree::fit(&x, &[1, 1, 1], &TreeParams::default()),
            Err(Error::SingleClassInput)
        ));
    }

    #[test]
    fn add_errs_reference_values() {
        // z = 0.6745 at CF 0.25
        assert!((add_errs(6.0, 0.0, 0.25) - 6.0 * (1.0 - 0.25f64.powf(1.0 / 6.0))).abs() < 1e-12);
        let n = 20.0;
        let e = 3.0;
        let z: f64 = 0.674489750196;
        let f = 3.5 / 20.0;
        let r = (f + z * z / 40.0 + z * (f / n - f * f / n + z * z / 1600.0).sqrt())
            / (1.0 + z * z / n);
        assert!((add_errs(n, e, 0.25) - (r * n - e)).abs() < 1e-9);
        assert!((add_errs(4.0, 3.6, 0.25) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn laplace_leaf_score() {
        let leaf = Node::Leaf { counts: [1, 3] };
        assert!((leaf.score(&[]) - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!(Node::Leaf { counts: [2, 2] }.label(&[]), 0);
    }

    #[test]
    fn noise_split_is_pruned() {
        // one mislabelled row isolated by a deep split
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let mut y = vec![0u8; 20];
        y[10] = 1;
        y[11] = 1;
        let unpruned = DecisionTree::fit(
            &x,
            &y,
            &TreeParams {
                prune: false,
                ..Default::default()
            },
        )
        .unwrap();
        let pruned = DecisionTree::fit(&x, &y, &TreeParams::default()).unwrap();
        assert!(unpruned.root.n_leaves() > 1);
        assert_eq!(pruned.root.n_leaves(), 1);
    }
}
