//! Ensembles over the CART base trees.
//!
//! The averaging family (random forest, extra-trees, bagging) builds its
//! members independently — each tree draws a per-index seed derived from
//! the ensemble seed, so members can be fit in parallel yet come out
//! identical to a sequential run.  The boosting family (AdaBoost,
//! gradient boosting) is inherently sequential: every stage depends on
//! the previous one's mistakes.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{ClassificationTree, FeaturePolicy, RegressionTree, SplitKind, TreeConfig};
use crate::exec;
use crate::matrix::Matrix;

/// Configuration of an averaging ensemble.
#[derive(Debug, Clone)]
pub struct ForestOptions {
    pub n_estimators: usize,
    /// Resample `n` rows with replacement per tree; off = every tree sees
    /// the full sample.
    pub bootstrap: bool,
    pub features: FeaturePolicy,
    pub split: SplitKind,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl ForestOptions {
    /// Bootstrap + best split over a ⌈√d⌉ feature subset per node.
    pub fn random_forest(n_estimators: usize, max_depth: Option<usize>, seed: u64) -> Self {
        ForestOptions {
            n_estimators,
            bootstrap: true,
            features: FeaturePolicy::SqrtSubset,
            split: SplitKind::BestMidpoint,
            max_depth,
            seed,
        }
    }

    /// No bootstrap + one uniform-random threshold per candidate feature.
    pub fn extra_trees(n_estimators: usize, max_depth: Option<usize>, seed: u64) -> Self {
        ForestOptions {
            n_estimators,
            bootstrap: false,
            features: FeaturePolicy::SqrtSubset,
            split: SplitKind::UniformRandom,
            max_depth,
            seed,
        }
    }

    /// Bootstrap + best split over the full feature set.
    pub fn bagging(n_estimators: usize, max_depth: Option<usize>, seed: u64) -> Self {
        ForestOptions {
            n_estimators,
            bootstrap: true,
            features: FeaturePolicy::All,
            split: SplitKind::BestMidpoint,
            max_depth,
            seed,
        }
    }
}

/// Fits the members of an averaging ensemble.  Tree `i` seeds its own
/// ChaCha stream from `derive_seed(seed, i)`; aggregation is by index, so
/// parallel and sequential fits agree bit for bit.
pub fn fit_forest(x: &Matrix, y: &[u8], opts: &ForestOptions) -> Vec<ClassificationTree> {
    let n = x.rows();
    let cfg =
        TreeConfig { max_depth: opts.max_depth, split: opts.split, features: opts.features };
    exec::map_indices(opts.n_estimators, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(exec::derive_seed(opts.seed, t as u64));
        let rows: Vec<usize> = if opts.bootstrap {
            (0..n).map(|_| rng.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        ClassificationTree::fit(x, y, &rows, None, &cfg, &mut rng)
    })
}

/// Majority vote, as the fraction of trees voting homograph.
pub fn forest_score(trees: &[ClassificationTree], row: &[f64]) -> f64 {
    let votes = trees.iter().filter(|t| t.predict_one(row) == 1).count();
    votes as f64 / trees.len() as f64
}

/// SAMME AdaBoost over shallow trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub stages: Vec<ClassificationTree>,
    /// One α per kept stage; always finite and positive.
    pub stage_weights: Vec<f64>,
    /// Training fraction of homographs — the fallback score when the very
    /// first stage already failed (weighted error ≥ ½ kept no stage).
    pub prior_positive: f64,
}

/// Fits AdaBoost: each stage fits a depth-`base_depth` tree under the
/// current sample weights, then multiplies misclassified weights by
/// `exp(α)` with `α = ln((1−err)/err)` and renormalizes.  A stage with
/// weighted error 0 is kept (weight 1) and training stops; a stage with
/// weighted error ≥ ½ is dropped and training stops.
pub fn fit_adaboost(
    x: &Matrix,
    y: &[u8],
    n_estimators: usize,
    base_depth: usize,
) -> AdaBoostModel {
    let n = x.rows();
    let rows: Vec<usize> = (0..n).collect();
    let cfg = TreeConfig::exhaustive(Some(base_depth));
    // The exhaustive full-feature config draws nothing from the stream.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut weights = vec![1.0 / n as f64; n];
    let mut stages = Vec::new();
    let mut stage_weights: Vec<f64> = Vec::new();
    for _ in 0..n_estimators {
        let stage = ClassificationTree::fit(x, y, &rows, Some(&weights), &cfg, &mut rng);
        let missed: Vec<bool> = (0..n).map(|i| stage.predict_one(x.row(i)) != y[i]).collect();
        let err: f64 =
            missed.iter().zip(&weights).filter(|(m, _)| **m).map(|(_, w)| *w).sum();
        if err >= 0.5 {
            break;
        }
        if err == 0.0 {
            stages.push(stage);
            stage_weights.push(1.0);
            break;
        }
        let alpha = ((1.0 - err) / err).ln();
        let scale = alpha.exp();
        for (w, m) in weights.iter_mut().zip(&missed) {
            if *m {
                *w *= scale;
            }
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        debug_assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        stages.push(stage);
        stage_weights.push(alpha);
    }
    let prior_positive = y.iter().filter(|&&l| l == 1).count() as f64 / n as f64;
    AdaBoostModel { stages, stage_weights, prior_positive }
}

/// Weighted-vote fraction for the homograph class.
pub fn adaboost_score(model: &AdaBoostModel, row: &[f64]) -> f64 {
    if model.stages.is_empty() {
        return model.prior_positive;
    }
    let total: f64 = model.stage_weights.iter().sum();
    let positive: f64 = model
        .stages
        .iter()
        .zip(&model.stage_weights)
        .filter(|(stage, _)| stage.predict_one(row) == 1)
        .map(|(_, a)| *a)
        .sum();
    positive / total
}

/// Gradient-boosted log-loss model.  Leaf values are stored already
/// scaled by the learning rate, so scoring is `σ(initial + Σ leaves)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostModel {
    /// Log-odds of the training homograph fraction.
    pub initial_raw: f64,
    pub stages: Vec<RegressionTree>,
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Fits gradient boosting: raw scores start at the log-odds prior; each
/// stage fits a regression tree to the negative log-loss gradient
/// (label − σ(raw)) and installs Newton-step leaf values
/// `lr · Σ residual / Σ σ(1−σ)` over the rows in each leaf.
pub fn fit_gradient_boost(
    x: &Matrix,
    y: &[u8],
    n_estimators: usize,
    max_depth: usize,
    learning_rate: f64,
) -> GradientBoostModel {
    let n = x.rows();
    let positives = y.iter().filter(|&&l| l == 1).count() as f64;
    let p = positives / n as f64;
    let initial_raw = (p / (1.0 - p)).ln();
    let mut raw = vec![initial_raw; n];
    let mut stages = Vec::with_capacity(n_estimators);
    for _ in 0..n_estimators {
        let residuals: Vec<f64> =
            (0..n).map(|i| f64::from(y[i]) - sigmoid(raw[i])).collect();
        let mut tree = RegressionTree::fit(x, &residuals, Some(max_depth));
        // Group rows by leaf and replace each leaf's mean-residual value
        // with the scaled Newton step.
        let mut per_leaf: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
        let leaf_of: Vec<usize> = (0..n).map(|i| tree.leaf_for(x.row(i))).collect();
        for i in 0..n {
            let s = sigmoid(raw[i]);
            let entry = per_leaf.entry(leaf_of[i]).or_insert((0.0, 0.0));
            entry.0 += residuals[i];
            entry.1 += s * (1.0 - s);
        }
        for (leaf, (num, den)) in per_leaf {
            let value = if den > 0.0 { learning_rate * num / den } else { 0.0 };
            tree.set_leaf_value(leaf, value);
        }
        for i in 0..n {
            raw[i] += tree.predict_one(x.row(i));
        }
        stages.push(tree);
    }
    GradientBoostModel { initial_raw, stages }
}

pub fn gradient_boost_score(model: &GradientBoostModel, row: &[f64]) -> f64 {
    let raw: f64 =
        model.initial_raw + model.stages.iter().map(|t| t.predict_one(row)).sum::<f64>();
    sigmoid(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn separable() -> (Matrix, Vec<u8>) {
        let x = matrix(&[vec![0.0], vec![1.0], vec![10.0], vec![11.0]]);
        (x, vec![0, 0, 1, 1])
    }

    /// Two interleaved clusters that no single stump separates cleanly.
    fn noisy() -> (Matrix, Vec<u8>) {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64, ((i * 7) % 20) as f64])
            .collect();
        let y: Vec<u8> = (0..20).map(|i| u8::from(i >= 10) ^ u8::from(i % 7 == 0)).collect();
        (matrix(&rows), y)
    }

    #[test]
    fn forest_members_are_seeded_deterministically() {
        let (x, y) = noisy();
        let opts = ForestOptions::random_forest(9, None, 11);
        let a = fit_forest(&x, &y, &opts);
        let b = fit_forest(&x, &y, &opts);
        assert_eq!(a, b);
        let other = fit_forest(&x, &y, &ForestOptions::random_forest(9, None, 12));
        assert_ne!(a, other, "a different seed should grow different trees");
    }

    #[test]
    fn single_tree_forest_without_bootstrap_equals_the_plain_tree() {
        let (x, y) = noisy();
        let opts = ForestOptions {
            n_estimators: 1,
            bootstrap: false,
            features: FeaturePolicy::All,
            split: SplitKind::BestMidpoint,
            max_depth: None,
            seed: 3,
        };
        let forest = fit_forest(&x, &y, &opts);
        let rows: Vec<usize> = (0..x.rows()).collect();
        let tree = ClassificationTree::fit(
            &x,
            &y,
            &rows,
            None,
            &TreeConfig::exhaustive(None),
            &mut ChaCha8Rng::seed_from_u64(exec::derive_seed(3, 0)),
        );
        assert_eq!(forest[0], tree);
        for i in 0..x.rows() {
            assert_eq!(forest_score(&forest, x.row(i)) >= 0.5, tree.predict_one(x.row(i)) == 1);
        }
    }

    #[test]
    fn constant_features_force_identical_trees_and_a_unanimous_vote() {
        let x = matrix(&[vec![2.0], vec![2.0], vec![2.0], vec![2.0]]);
        let y = [0, 0, 0, 1];
        let opts = ForestOptions {
            bootstrap: false,
            ..ForestOptions::random_forest(15, None, 5)
        };
        let trees = fit_forest(&x, &y, &opts);
        assert!(trees.windows(2).all(|w| w[0] == w[1]));
        let fraction = forest_score(&trees, &[2.0]);
        assert!(fraction == 0.0 || fraction == 1.0, "unanimous vote, got {fraction}");
    }

    #[test]
    fn bagging_improves_on_constant_prediction_for_noisy_data() {
        let (x, y) = noisy();
        let trees = fit_forest(&x, &y, &ForestOptions::bagging(25, None, 1));
        let correct = (0..x.rows())
            .filter(|&i| u8::from(forest_score(&trees, x.row(i)) >= 0.5) == y[i])
            .count();
        assert!(correct > 10, "training accuracy above chance, got {correct}/20");
    }

    #[test]
    fn adaboost_stops_after_one_perfect_stage() {
        let (x, y) = separable();
        let model = fit_adaboost(&x, &y, 100, 1);
        assert_eq!(model.stages.len(), 1);
        assert_eq!(model.stage_weights, vec![1.0]);
        for (i, &label) in y.iter().enumerate() {
            assert_eq!(u8::from(adaboost_score(&model, x.row(i)) >= 0.5), label);
        }
    }

    #[test]
    fn adaboost_kept_stages_have_error_below_one_half() {
        let (x, y) = noisy();
        let model = fit_adaboost(&x, &y, 30, 1);
        assert!(!model.stages.is_empty());
        assert!(model.stages.len() <= 30);
        // α = ln((1−err)/err) > 0 exactly when err < ½.
        assert!(model.stage_weights.iter().all(|a| a.is_finite() && *a > 0.0));
    }

    #[test]
    fn adaboost_with_no_usable_stump_falls_back_to_the_prior() {
        // XOR: every stump has weighted error exactly ½.
        let x = matrix(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
        let y = [0, 1, 1, 0];
        let model = fit_adaboost(&x, &y, 10, 1);
        assert!(model.stages.is_empty());
        assert_eq!(adaboost_score(&model, &[0.0, 0.0]), 0.5);
    }

    #[test]
    fn adaboost_boosts_past_a_single_stump() {
        // Three alternating bands: one stump cannot exceed ~2/3 accuracy,
        // but reweighted stumps combine to fit all bands.
        let x = matrix(&(0..12).map(|i| vec![i as f64]).collect::<Vec<_>>());
        let y: Vec<u8> = (0..12).map(|i| u8::from((4..8).contains(&i))).collect();
        let model = fit_adaboost(&x, &y, 50, 1);
        assert!(model.stages.len() > 1);
        let correct = (0..12)
            .filter(|&i| u8::from(adaboost_score(&model, x.row(i)) >= 0.5) == y[i])
            .count();
        assert!(correct >= 11, "boosting should nearly fit the bands, got {correct}/12");
    }

    fn log_loss(model: &GradientBoostModel, upto: usize, x: &Matrix, y: &[u8]) -> f64 {
        (0..x.rows())
            .map(|i| {
                let raw: f64 = model.initial_raw
                    + model.stages[..upto].iter().map(|t| t.predict_one(x.row(i))).sum::<f64>();
                let p = sigmoid(raw).clamp(1e-15, 1.0 - 1e-15);
                if y[i] == 1 {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            })
            .sum()
    }

    #[test]
    fn gradient_boost_training_loss_never_increases() {
        let (x, y) = noisy();
        let model = fit_gradient_boost(&x, &y, 40, 3, 0.1);
        assert_eq!(model.stages.len(), 40);
        let mut previous = log_loss(&model, 0, &x, &y);
        for stage in 1..=model.stages.len() {
            let current = log_loss(&model, stage, &x, &y);
            assert!(
                current <= previous + 1e-12,
                "loss rose at stage {stage}: {previous} -> {current}"
            );
            previous = current;
        }
    }

    #[test]
    fn gradient_boost_separates_the_separable_set() {
        let (x, y) = separable();
        let model = fit_gradient_boost(&x, &y, 30, 3, 0.1);
        for (i, &label) in y.iter().enumerate() {
            assert_eq!(u8::from(gradient_boost_score(&model, x.row(i)) >= 0.5), label);
        }
    }

    #[test]
    fn gradient_boost_initializes_at_the_log_odds_prior() {
        let (x, y) = separable();
        let model = fit_gradient_boost(&x, &y, 1, 3, 0.1);
        assert!((model.initial_raw - (0.5f64 / 0.5).ln()).abs() < 1e-12);
        let skewed = fit_gradient_boost(&x, &[0, 0, 0, 1], 1, 3, 0.1);
        assert!((skewed.initial_raw - (0.25f64 / 0.75).ln()).abs() < 1e-12);
    }

    #[test]
    fn gradient_boost_first_stage_scales_linearly_with_learning_rate() {
        let (x, y) = noisy();
        let small = fit_gradient_boost(&x, &y, 1, 3, 0.1);
        let large = fit_gradient_boost(&x, &y, 1, 3, 1.0);
        for i in 0..x.rows() {
            let a = small.stages[0].predict_one(x.row(i));
            let b = large.stages[0].predict_one(x.row(i));
            assert!((b - 10.0 * a).abs() < 1e-9, "leaf values scale with the rate");
        }
    }
}
