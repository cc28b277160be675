//! From-scratch CART trees: the classification tree under every ensemble
//! and the small regression tree used by gradient boosting.
//!
//! Split search is deterministic by construction: candidate features are
//! enumerated in ascending index order, candidate thresholds in ascending
//! value order, and a split must *strictly* reduce weighted Gini impurity
//! (or SSE for regression) to be accepted.  Ties between equally good
//! splits therefore resolve to the lowest feature index, then the lowest
//! threshold.  Randomized strategies (feature subsets, uniform-random
//! thresholds) draw from a caller-seeded ChaCha stream in that same
//! enumeration order, so a seed pins the whole tree.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// How a node picks its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    /// Evaluate every midpoint between consecutive distinct sorted values;
    /// keep the best.
    BestMidpoint,
    /// Draw one uniform threshold per candidate feature from that
    /// feature's value range; keep the best draw (extra-trees style).
    UniformRandom,
}

/// Which features a node considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeaturePolicy {
    All,
    /// A fresh uniform subset of ⌈√d⌉ features at every node.
    SqrtSubset,
}

/// Per-tree knobs shared by the single tree and the ensemble members.
#[derive(Debug, Clone)]
pub struct TreeConfig {
    pub max_depth: Option<usize>,
    pub split: SplitKind,
    pub features: FeaturePolicy,
}

impl TreeConfig {
    /// Plain CART: exhaustive midpoint search over all features.
    pub fn exhaustive(max_depth: Option<usize>) -> Self {
        TreeConfig { max_depth, split: SplitKind::BestMidpoint, features: FeaturePolicy::All }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    /// Class distribution `[p(non-homograph), p(homograph)]`.
    Leaf { distribution: [f64; 2] },
}

/// Node-array binary classification tree; the root is node 0 and routing
/// goes left when `value <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTree {
    nodes: Vec<TreeNode>,
}

fn gini(c0: f64, c1: f64) -> f64 {
    let s = c0 + c1;
    if s <= 0.0 {
        return 0.0;
    }
    let p0 = c0 / s;
    let p1 = c1 / s;
    1.0 - p0 * p0 - p1 * p1
}

struct BestSplit {
    feature: usize,
    threshold: f64,
}

struct TreeBuilder<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    weights: Option<&'a [f64]>,
    cfg: &'a TreeConfig,
    rng: &'a mut ChaCha8Rng,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    fn weight(&self, row: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[row])
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x.cols();
        match self.cfg.features {
            FeaturePolicy::All => (0..d).collect(),
            FeaturePolicy::SqrtSubset => {
                let m = ((d as f64).sqrt().ceil() as usize).clamp(1, d);
                let mut subset = rand::seq::index::sample(self.rng, d, m).into_vec();
                subset.sort_unstable();
                subset
            }
        }
    }

    /// Best strictly-improving split for this node, if any.
    fn find_best_split(&mut self, rows: &[usize], total0: f64, total1: f64) -> Option<BestSplit> {
        let total = total0 + total1;
        let parent = gini(total0, total1);
        let mut best: Option<BestSplit> = None;
        let mut best_score = parent;
        for f in self.candidate_features() {
            match self.cfg.split {
                SplitKind::BestMidpoint => {
                    let mut vals: Vec<(f64, f64, f64)> = rows
                        .iter()
                        .map(|&i| {
                            let w = self.weight(i);
                            let v = self.x.row(i)[f];
                            if self.y[i] == 0 { (v, w, 0.0) } else { (v, 0.0, w) }
                        })
                        .collect();
                    vals.sort_unstable_by(|a, b| {
                        a.0.partial_cmp(&b.0).expect("feature values are finite")
                    });
                    let (mut l0, mut l1) = (0.0, 0.0);
                    for i in 0..vals.len().saturating_sub(1) {
                        l0 += vals[i].1;
                        l1 += vals[i].2;
                        let (v, vn) = (vals[i].0, vals[i + 1].0);
                        if v < vn {
                            let t = (v + vn) / 2.0;
                            // Adjacent floats can round the midpoint up to
                            // vn, which would route vn's rows left and
                            // desynchronize the scored partition from the
                            // realized one; skip such degenerate candidates.
                            if !(t < vn) {
                                continue;
                            }
                            let (r0, r1) = (total0 - l0, total1 - l1);
                            let score =
                                ((l0 + l1) * gini(l0, l1) + (r0 + r1) * gini(r0, r1)) / total;
                            if score < best_score {
                                best_score = score;
                                best = Some(BestSplit { feature: f, threshold: t });
                            }
                        }
                    }
                }
                SplitKind::UniformRandom => {
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for &i in rows {
                        let v = self.x.row(i)[f];
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                    if !(lo < hi) {
                        continue;
                    }
                    let t = self.rng.random_range(lo..hi);
                    let (mut l0, mut l1) = (0.0, 0.0);
                    for &i in rows {
                        if self.x.row(i)[f] <= t {
                            if self.y[i] == 0 {
                                l0 += self.weight(i);
                            } else {
                                l1 += self.weight(i);
                            }
                        }
                    }
                    let (r0, r1) = (total0 - l0, total1 - l1);
                    let score = ((l0 + l1) * gini(l0, l1) + (r0 + r1) * gini(r0, r1)) / total;
                    if score < best_score {
                        best_score = score;
                        best = Some(BestSplit { feature: f, threshold: t });
                    }
                }
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let (mut c0, mut c1) = (0.0, 0.0);
        for &i in &rows {
            if self.y[i] == 0 {
                c0 += self.weight(i);
            } else {
                c1 += self.weight(i);
            }
        }
        let total = c0 + c1;
        let distribution = if total > 0.0 { [c0 / total, c1 / total] } else { [0.5, 0.5] };
        let depth_ok = self.cfg.max_depth.map_or(true, |m| depth < m);
        let split = if depth_ok && c0 > 0.0 && c1 > 0.0 {
            self.find_best_split(&rows, c0, c1)
        } else {
            None
        };
        match split {
            None => {
                self.nodes.push(TreeNode::Leaf { distribution });
                self.nodes.len() - 1
            }
            Some(b) => {
                let mut left_rows = Vec::new();
                let mut right_rows = Vec::new();
                for &i in &rows {
                    if self.x.row(i)[b.feature] <= b.threshold {
                        left_rows.push(i);
                    } else {
                        right_rows.push(i);
                    }
                }
                debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());
                let idx = self.nodes.len();
                self.nodes.push(TreeNode::Leaf { distribution });
                let left = self.build(left_rows, depth + 1);
                let right = self.build(right_rows, depth + 1);
                self.nodes[idx] =
                    TreeNode::Split { feature: b.feature, threshold: b.threshold, left, right };
                idx
            }
        }
    }
}

impl ClassificationTree {
    /// Fits a tree on the rows `rows` of `x` (repeats act as integer
    /// weights — bootstrap resamples pass their drawn indices directly).
    /// `weights`, when given, is indexed by row of `x`.
    pub fn fit(
        x: &Matrix,
        y: &[u8],
        rows: &[usize],
        weights: Option<&[f64]>,
        cfg: &TreeConfig,
        rng: &mut ChaCha8Rng,
    ) -> ClassificationTree {
        debug_assert_eq!(x.rows(), y.len());
        let mut builder = TreeBuilder { x, y, weights, cfg, rng, nodes: Vec::new() };
        let root = builder.build(rows.to_vec(), 0);
        debug_assert_eq!(root, 0);
        ClassificationTree { nodes: builder.nodes }
    }

    /// Probability of the positive (homograph) class at `row`'s leaf.
    pub fn score_one(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
                TreeNode::Leaf { distribution } => return distribution[1],
            }
        }
    }

    /// Hard vote at 0.5.
    pub fn predict_one(&self, row: &[f64]) -> u8 {
        u8::from(self.score_one(row) >= 0.5)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Structural well-formedness: children in range, every node reachable
    /// exactly once (so no cycles or sharing), features within `n_features`,
    /// finite thresholds, leaf distributions summing to 1 within 1e-9.
    pub fn validate(&self, n_features: usize) -> Result<()> {
        let malformed = |reason: String| Error::Config(format!("malformed tree: {reason}"));
        if self.nodes.is_empty() {
            return Err(malformed("empty node array".into()));
        }
        let mut visited = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if i >= self.nodes.len() {
                return Err(malformed(format!("child index {i} out of range")));
            }
            if visited[i] {
                return Err(malformed(format!("node {i} reached twice (cycle or sharing)")));
            }
            visited[i] = true;
            match &self.nodes[i] {
                TreeNode::Split { feature, threshold, left, right } => {
                    if *feature >= n_features {
                        return Err(malformed(format!(
                            "node {i} splits on feature {feature} of {n_features}"
                        )));
                    }
                    if !threshold.is_finite() {
                        return Err(malformed(format!("node {i} has non-finite threshold")));
                    }
                    stack.push(*left);
                    stack.push(*right);
                }
                TreeNode::Leaf { distribution } => {
                    let sum: f64 = distribution.iter().sum();
                    if !distribution.iter().all(|p| p.is_finite() && (0.0..=1.0).contains(p))
                        || (sum - 1.0).abs() > 1e-9
                    {
                        return Err(malformed(format!("node {i} has invalid leaf distribution")));
                    }
                }
            }
        }
        if visited.iter().any(|v| !v) {
            return Err(malformed("unreachable nodes present".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegressionNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

/// Small MSE regression tree (gradient-boosting base learner).  Exhaustive
/// midpoint search over all features; same determinism rules as the
/// classification tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<RegressionNode>,
}

struct RegressionBuilder<'a> {
    x: &'a Matrix,
    targets: &'a [f64],
    max_depth: Option<usize>,
    nodes: Vec<RegressionNode>,
}

impl RegressionBuilder<'_> {
    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let n = rows.len() as f64;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for &i in &rows {
            let t = self.targets[i];
            sum += t;
            sumsq += t * t;
        }
        let mean = sum / n;
        let parent_sse = sumsq - sum * sum / n;
        let depth_ok = self.max_depth.map_or(true, |m| depth < m);
        let mut best: Option<(f64, usize, f64)> = None; // (score, feature, threshold)
        if depth_ok && rows.len() >= 2 && parent_sse > 0.0 {
            let mut best_score = parent_sse;
            for f in 0..self.x.cols() {
                let mut vals: Vec<(f64, f64)> =
                    rows.iter().map(|&i| (self.x.row(i)[f], self.targets[i])).collect();
                vals.sort_unstable_by(|a, b| {
                    a.0.partial_cmp(&b.0).expect("feature values are finite")
                });
                let (mut ln, mut ls, mut lq) = (0.0, 0.0, 0.0);
                for i in 0..vals.len() - 1 {
                    ln += 1.0;
                    ls += vals[i].1;
                    lq += vals[i].1 * vals[i].1;
                    let (v, vn) = (vals[i].0, vals[i + 1].0);
                    if v < vn {
                        let t = (v + vn) / 2.0;
                        if !(t < vn) {
                            continue;
                        }
                        let (rn, rs, rq) = (n - ln, sum - ls, sumsq - lq);
                        let score = (lq - ls * ls / ln) + (rq - rs * rs / rn);
                        if score < best_score {
                            best_score = score;
                            best = Some((score, f, t));
                        }
                    }
                }
            }
        }
        match best {
            None => {
                self.nodes.push(RegressionNode::Leaf { value: mean });
                self.nodes.len() - 1
            }
            Some((_, feature, threshold)) => {
                let mut left_rows = Vec::new();
                let mut right_rows = Vec::new();
                for &i in &rows {
                    if self.x.row(i)[feature] <= threshold {
                        left_rows.push(i);
                    } else {
                        right_rows.push(i);
                    }
                }
                let idx = self.nodes.len();
                self.nodes.push(RegressionNode::Leaf { value: mean });
                let left = self.build(left_rows, depth + 1);
                let right = self.build(right_rows, depth + 1);
                self.nodes[idx] = RegressionNode::Split { feature, threshold, left, right };
                idx
            }
        }
    }
}

impl RegressionTree {
    /// Fits over all rows of `x` against `targets`.
    pub fn fit(x: &Matrix, targets: &[f64], max_depth: Option<usize>) -> RegressionTree {
        debug_assert_eq!(x.rows(), targets.len());
        let mut builder = RegressionBuilder { x, targets, max_depth, nodes: Vec::new() };
        let rows: Vec<usize> = (0..x.rows()).collect();
        builder.build(rows, 0);
        RegressionTree { nodes: builder.nodes }
    }

    /// Index of the leaf node `row` lands in.
    pub fn leaf_for(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                RegressionNode::Split { feature, threshold, left, right } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
                RegressionNode::Leaf { .. } => return i,
            }
        }
    }

    /// Overwrites a leaf's value (gradient boosting installs Newton-step
    /// values after the structure is fit).  Panics if `node` is a split.
    pub fn set_leaf_value(&mut self, node: usize, value: f64) {
        match &mut self.nodes[node] {
            RegressionNode::Leaf { value: v } => *v = value,
            RegressionNode::Split { .. } => panic!("node {node} is not a leaf"),
        }
    }

    pub fn predict_one(&self, row: &[f64]) -> f64 {
        match &self.nodes[self.leaf_for(row)] {
            RegressionNode::Leaf { value } => *value,
            RegressionNode::Split { .. } => unreachable!(),
        }
    }

    pub fn nodes(&self) -> &[RegressionNode] {
        &self.nodes
    }

    /// Same structural checks as the classification tree, with finite leaf
    /// values in place of distributions.
    pub fn validate(&self, n_features: usize) -> Result<()> {
        let malformed = |reason: String| Error::Config(format!("malformed tree: {reason}"));
        if self.nodes.is_empty() {
            return Err(malformed("empty node array".into()));
        }
        let mut visited = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if i >= self.nodes.len() {
                return Err(malformed(format!("child index {i} out of range")));
            }
            if visited[i] {
                return Err(malformed(format!("node {i} reached twice (cycle or sharing)")));
            }
            visited[i] = true;
            match &self.nodes[i] {
                RegressionNode::Split { feature, threshold, left, right } => {
                    if *feature >= n_features {
                        return Err(malformed(format!(
                            "node {i} splits on feature {feature} of {n_features}"
                        )));
                    }
                    if !threshold.is_finite() {
                        return Err(malformed(format!("node {i} has non-finite threshold")));
                    }
                    stack.push(*left);
                    stack.push(*right);
                }
                RegressionNode::Leaf { value } => {
                    if !value.is_finite() {
                        return Err(malformed(format!("node {i} has non-finite leaf value")));
                    }
                }
            }
        }
        if visited.iter().any(|v| !v) {
            return Err(malformed("unreachable nodes present".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn matrix(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn fit_plain(x: &Matrix, y: &[u8]) -> ClassificationTree {
        let rows: Vec<usize> = (0..x.rows()).collect();
        ClassificationTree::fit(x, y, &rows, None, &TreeConfig::exhaustive(None), &mut rng())
    }

    #[test]
    fn separable_set_forces_the_midpoint_split() {
        let x = matrix(&[vec![0.0], vec![1.0], vec![10.0], vec![11.0]]);
        let y = [0, 0, 1, 1];
        let tree = fit_plain(&x, &y);
        match &tree.nodes()[0] {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 5.5);
            }
            other => panic!("expected a root split, got {other:?}"),
        }
        for (row, label) in [(0.0, 0), (1.0, 0), (10.0, 1), (11.0, 1)] {
            assert_eq!(tree.predict_one(&[row]), label);
        }
    }

    #[test]
    fn tie_between_features_goes_to_the_lowest_index() {
        // Feature 1 separates exactly as well as feature 0.
        let x = matrix(&[vec![0.0, 0.0], vec![1.0, 1.0]]);
        let tree = fit_plain(&x, &[0, 1]);
        match &tree.nodes()[0] {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 0.5);
            }
            other => panic!("expected a root split, got {other:?}"),
        }
    }

    #[test]
    fn tie_between_thresholds_goes_to_the_lowest_threshold() {
        // Thresholds 0.5 and 1.5 yield the same impurity; 0.5 must win.
        let x = matrix(&[vec![0.0], vec![1.0], vec![2.0]]);
        let tree = fit_plain(&x, &[0, 1, 0]);
        match &tree.nodes()[0] {
            TreeNode::Split { threshold, .. } => assert_eq!(*threshold, 0.5),
            other => panic!("expected a root split, got {other:?}"),
        }
    }

    #[test]
    fn pure_node_is_a_single_leaf() {
        let x = matrix(&[vec![0.0], vec![5.0], vec![9.0]]);
        let tree = fit_plain(&x, &[1, 1, 1]);
        assert_eq!(tree.nodes().len(), 1);
        assert_eq!(tree.score_one(&[3.0]), 1.0);
    }

    #[test]
    fn conflicting_duplicates_stop_without_a_split() {
        // Identical feature vectors with opposing labels admit no
        // impurity-reducing split.
        let x = matrix(&[vec![0.0], vec![0.0], vec![1.0], vec![1.0]]);
        let tree = fit_plain(&x, &[0, 1, 0, 1]);
        assert_eq!(tree.nodes().len(), 1);
        assert_eq!(tree.score_one(&[0.0]), 0.5);
    }

    #[test]
    fn depth_limits_are_respected() {
        let x = matrix(&[vec![0.0], vec![1.0], vec![10.0], vec![11.0]]);
        let y = [0, 1, 0, 1];
        let rows: Vec<usize> = (0..4).collect();
        let stumpless = ClassificationTree::fit(
            &x,
            &y,
            &rows,
            None,
            &TreeConfig::exhaustive(Some(0)),
            &mut rng(),
        );
        assert_eq!(stumpless.nodes().len(), 1);
        let stump = ClassificationTree::fit(
            &x,
            &y,
            &rows,
            None,
            &TreeConfig::exhaustive(Some(1)),
            &mut rng(),
        );
        assert!(stump.nodes().len() <= 3);
        let unlimited = ClassificationTree::fit(
            &x,
            &y,
            &rows,
            None,
            &TreeConfig::exhaustive(None),
            &mut rng(),
        );
        assert!(unlimited.nodes().len() > 3);
        for (row, label) in [(0.0, 0), (1.0, 1), (10.0, 0), (11.0, 1)] {
            assert_eq!(unlimited.predict_one(&[row]), label);
        }
    }

    #[test]
    fn permuting_training_rows_leaves_the_tree_identical() {
        let x = matrix(&[
            vec![0.3, 2.0],
            vec![1.7, 0.5],
            vec![0.9, 1.1],
            vec![2.4, 0.2],
            vec![0.1, 1.9],
            vec![1.2, 0.8],
        ]);
        let y = [0, 1, 0, 1, 0, 1];
        let perm = [5, 2, 0, 4, 1, 3];
        let xp = matrix(&perm.map(|i| x.row(i).to_vec()));
        let yp = perm.map(|i| y[i]);
        assert_eq!(fit_plain(&x, &y), fit_plain(&xp, &yp));
    }

    #[test]
    fn repeated_rows_act_as_integer_weights() {
        let x = matrix(&[vec![0.0], vec![1.0]]);
        let y = [0, 1];
        let cfg = TreeConfig::exhaustive(None);
        let by_repetition =
            ClassificationTree::fit(&x, &y, &[0, 0, 1], None, &cfg, &mut rng());
        let by_weights =
            ClassificationTree::fit(&x, &y, &[0, 1], Some(&[2.0, 1.0]), &cfg, &mut rng());
        assert_eq!(by_repetition, by_weights);
    }

    #[test]
    fn weights_shift_the_leaf_distribution() {
        let x = matrix(&[vec![0.0], vec![0.0], vec![0.0], vec![0.0]]);
        let y = [0, 0, 1, 1];
        let tree = ClassificationTree::fit(
            &x,
            &y,
            &[0, 1, 2, 3],
            Some(&[0.1, 0.1, 0.4, 0.4]),
            &TreeConfig::exhaustive(None),
            &mut rng(),
        );
        assert_eq!(tree.nodes().len(), 1);
        assert!((tree.score_one(&[0.0]) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn random_thresholds_stay_inside_the_value_range_and_are_seeded() {
        let x = matrix(&[
            vec![0.0, 3.0],
            vec![1.0, 2.0],
            vec![2.0, 1.0],
            vec![3.0, 0.0],
            vec![4.0, 5.0],
            vec![5.0, 4.0],
        ]);
        let y = [0, 0, 0, 1, 1, 1];
        let rows: Vec<usize> = (0..6).collect();
        let cfg = TreeConfig {
            max_depth: None,
            split: SplitKind::UniformRandom,
            features: FeaturePolicy::All,
        };
        let a = ClassificationTree::fit(&x, &y, &rows, None, &cfg, &mut rng());
        let b = ClassificationTree::fit(&x, &y, &rows, None, &cfg, &mut rng());
        assert_eq!(a, b, "same seed, same tree");
        for node in a.nodes() {
            if let TreeNode::Split { threshold, .. } = node {
                assert!((0.0..5.0).contains(threshold));
            }
        }
        for (i, &label) in y.iter().enumerate() {
            assert_eq!(a.predict_one(x.row(i)), label);
        }
    }

    #[test]
    fn validate_accepts_fit_trees_and_rejects_malformed_ones() {
        let x = matrix(&[vec![0.0], vec![1.0], vec![10.0], vec![11.0]]);
        let tree = fit_plain(&x, &[0, 0, 1, 1]);
        tree.validate(1).unwrap();
        // Feature index beyond the schema is malformed for that schema.
        assert!(tree.validate(0).is_err(), "split feature out of range");

        let out_of_range = ClassificationTree {
            nodes: vec![TreeNode::Split { feature: 0, threshold: 0.5, left: 1, right: 9 }],
        };
        assert!(out_of_range.validate(1).is_err());

        let cycle = ClassificationTree {
            nodes: vec![
                TreeNode::Split { feature: 0, threshold: 0.5, left: 1, right: 0 },
                TreeNode::Leaf { distribution: [1.0, 0.0] },
            ],
        };
        assert!(cycle.validate(1).is_err());

        let bad_distribution = ClassificationTree {
            nodes: vec![TreeNode::Leaf { distribution: [0.7, 0.7] }],
        };
        assert!(bad_distribution.validate(1).is_err());

        let unreachable = ClassificationTree {
            nodes: vec![
                TreeNode::Leaf { distribution: [1.0, 0.0] },
                TreeNode::Leaf { distribution: [0.0, 1.0] },
            ],
        };
        assert!(unreachable.validate(1).is_err());
    }

    #[test]
    fn regression_tree_splits_on_sse_and_recovers_leaf_means() {
        let x = matrix(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let targets = [0.0, 0.0, 10.0, 10.0];
        let tree = RegressionTree::fit(&x, &targets, Some(3));
        match &tree.nodes()[0] {
            RegressionNode::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 1.5);
            }
            other => panic!("expected a root split, got {other:?}"),
        }
        assert_eq!(tree.predict_one(&[0.5]), 0.0);
        assert_eq!(tree.predict_one(&[2.5]), 10.0);
        tree.validate(1).unwrap();
    }

    #[test]
    fn regression_tree_constant_targets_collapse_to_one_leaf() {
        let x = matrix(&[vec![0.0], vec![1.0], vec![2.0]]);
        let tree = RegressionTree::fit(&x, &[4.0, 4.0, 4.0], Some(3));
        assert_eq!(tree.nodes().len(), 1);
        assert_eq!(tree.predict_one(&[9.0]), 4.0);
    }

    #[test]
    fn regression_leaf_values_can_be_replaced() {
        let x = matrix(&[vec![0.0], vec![1.0]]);
        let mut tree = RegressionTree::fit(&x, &[0.0, 1.0], Some(3));
        let leaf = tree.leaf_for(&[0.0]);
        tree.set_leaf_value(leaf, -7.5);
        assert_eq!(tree.predict_one(&[0.0]), -7.5);
        assert_eq!(tree.predict_one(&[1.0]), 1.0);
    }

    #[test]
    fn regression_depth_limit_is_respected() {
        let x = matrix(&(0..16).map(|i| vec![i as f64]).collect::<Vec<_>>());
        let targets: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let tree = RegressionTree::fit(&x, &targets, Some(1));
        assert!(tree.nodes().len() <= 3);
        let deep = RegressionTree::fit(&x, &targets, Some(3));
        let leaves =
            deep.nodes().iter().filter(|n| matches!(n, RegressionNode::Leaf { .. })).count();
        assert!(leaves <= 8, "depth 3 admits at most 8 leaves, got {leaves}");
    }
}
