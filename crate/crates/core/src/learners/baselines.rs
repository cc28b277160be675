//! Non-tree baseline classifiers: k-nearest-neighbors, the three naive
//! Bayes variants, and nearest-centroid.
//!
//! All scores are probabilities (or probability-like fractions) for the
//! homograph class, so the shared `score ≥ 0.5 → homograph` rule applies
//! uniformly.  Multinomial naive Bayes treats features as nonnegative
//! counts; because the SSIM column can be negative, feature values are
//! clamped to [0, 1] there (presence indicators pass through unchanged).

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

/// k-nearest-neighbors: the training matrix is the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KNeighborsModel {
    pub matrix: Matrix,
    pub labels: Vec<u8>,
    pub k: usize,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Fraction of homograph labels among the `k` nearest training rows by
/// Euclidean distance; distance ties break toward the lower row index.
pub fn knn_score(model: &KNeighborsModel, row: &[f64]) -> f64 {
    let n = model.matrix.rows();
    let mut order: Vec<(f64, usize)> =
        (0..n).map(|i| (squared_distance(model.matrix.row(i), row), i)).collect();
    order.sort_unstable_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
    let k = model.k.min(n);
    let positives = order[..k].iter().filter(|(_, i)| model.labels[*i] == 1).count();
    positives as f64 / k as f64
}

/// Per-class first and second moments for Gaussian naive Bayes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianClassStats {
    pub prior: f64,
    pub means: Vec<f64>,
    /// Population variances, floored at 1e-9 so constant features stay
    /// finite in the likelihood.
    pub variances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNbModel {
    pub negative: GaussianClassStats,
    pub positive: GaussianClassStats,
}

const VARIANCE_FLOOR: f64 = 1e-9;

fn gaussian_class_stats(x: &Matrix, rows: &[usize], prior: f64) -> GaussianClassStats {
    let d = x.cols();
    let n = rows.len() as f64;
    let mut means = vec![0.0; d];
    for &i in rows {
        for (m, v) in means.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut variances = vec![0.0; d];
    for &i in rows {
        for (f, v) in x.row(i).iter().enumerate() {
            let c = v - means[f];
            variances[f] += c * c;
        }
    }
    for v in &mut variances {
        *v = (*v / n).max(VARIANCE_FLOOR);
    }
    GaussianClassStats { prior, means, variances }
}

pub fn fit_gaussian_nb(x: &Matrix, y: &[u8]) -> GaussianNbModel {
    let neg_rows: Vec<usize> = (0..x.rows()).filter(|&i| y[i] == 0).collect();
    let pos_rows: Vec<usize> = (0..x.rows()).filter(|&i| y[i] == 1).collect();
    let n = x.rows() as f64;
    GaussianNbModel {
        negative: gaussian_class_stats(x, &neg_rows, neg_rows.len() as f64 / n),
        positive: gaussian_class_stats(x, &pos_rows, pos_rows.len() as f64 / n),
    }
}

fn gaussian_log_joint(stats: &GaussianClassStats, row: &[f64]) -> f64 {
    let mut log = stats.prior.ln();
    for (f, v) in row.iter().enumerate() {
        let var = stats.variances[f];
        let diff = v - stats.means[f];
        log += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - diff * diff / (2.0 * var);
    }
    log
}

/// Posterior probability of the homograph class.
pub fn gaussian_nb_score(model: &GaussianNbModel, row: &[f64]) -> f64 {
    softmax_positive(
        gaussian_log_joint(&model.negative, row),
        gaussian_log_joint(&model.positive, row),
    )
}

/// `exp(l1) / (exp(l0) + exp(l1))`, computed stably.
fn softmax_positive(l0: f64, l1: f64) -> f64 {
    let m = l0.max(l1);
    let e0 = (l0 - m).exp();
    let e1 = (l1 - m).exp();
    e1 / (e0 + e1)
}

/// Multinomial feature values are event counts; clamp maps the SSIM
/// column (range [−1, 1]) into a valid count.
fn multinomial_value(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialClassStats {
    pub log_prior: f64,
    /// ln θ_f with Laplace smoothing α = 1.
    pub feature_log_prob: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialNbModel {
    pub negative: MultinomialClassStats,
    pub positive: MultinomialClassStats,
}

fn multinomial_class_stats(x: &Matrix, rows: &[usize], log_prior: f64) -> MultinomialClassStats {
    let d = x.cols();
    let mut counts = vec![0.0; d];
    for &i in rows {
        for (c, v) in counts.iter_mut().zip(x.row(i)) {
            *c += multinomial_value(*v);
        }
    }
    let total: f64 = counts.iter().sum();
    let denom = total + d as f64;
    let feature_log_prob = counts.iter().map(|c| ((c + 1.0) / denom).ln()).collect();
    MultinomialClassStats { log_prior, feature_log_prob }
}

pub fn fit_multinomial_nb(x: &Matrix, y: &[u8]) -> MultinomialNbModel {
    let neg_rows: Vec<usize> = (0..x.rows()).filter(|&i| y[i] == 0).collect();
    let pos_rows: Vec<usize> = (0..x.rows()).filter(|&i| y[i] == 1).collect();
    let n = x.rows() as f64;
    MultinomialNbModel {
        negative: multinomial_class_stats(x, &neg_rows, (neg_rows.len() as f64 / n).ln()),
        positive: multinomial_class_stats(x, &pos_rows, (pos_rows.len() as f64 / n).ln()),
    }
}

fn multinomial_log_joint(stats: &MultinomialClassStats, row: &[f64]) -> f64 {
    stats.log_prior
        + row
            .iter()
            .zip(&stats.feature_log_prob)
            .map(|(v, lp)| multinomial_value(*v) * lp)
            .sum::<f64>()
}

pub fn multinomial_nb_score(model: &MultinomialNbModel, row: &[f64]) -> f64 {
    softmax_positive(
        multinomial_log_joint(&model.negative, row),
        multinomial_log_joint(&model.positive, row),
    )
}

/// Binarization threshold shared by fit and predict.
fn binarize(v: f64) -> f64 {
    f64::from(v > 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliClassStats {
    pub log_prior: f64,
    /// ln θ_f — probability the binarized feature is 1 (α = 1).
    pub log_theta: Vec<f64>,
    /// ln (1 − θ_f).
    pub log_one_minus_theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliNbModel {
    pub negative: BernoulliClassStats,
    pub positive: BernoulliClassStats,
}

fn bernoulli_class_stats(x: &Matrix, rows: &[usize], log_prior: f64) -> BernoulliClassStats {
    let d = x.cols();
    let mut ones = vec![0.0; d];
    for &i in rows {
        for (c, v) in ones.iter_mut().zip(x.row(i)) {
            *c += binarize(*v);
        }
    }
    let denom = rows.len() as f64 + 2.0;
    let mut log_theta = Vec::with_capacity(d);
    let mut log_one_minus_theta = Vec::with_capacity(d);
    for c in ones {
        let theta = (c + 1.0) / denom;
        log_theta.push(theta.ln());
        log_one_minus_theta.push((1.0 - theta).ln());
    }
    BernoulliClassStats { log_prior, log_theta, log_one_minus_theta }
}

pub fn fit_bernoulli_nb(x: &Matrix, y: &[u8]) -> BernoulliNbModel {
    let neg_rows: Vec<usize> = (0..x.rows()).filter(|&i| y[i] == 0).collect();
    let pos_rows: Vec<usize> = (0..x.rows()).filter(|&i| y[i] == 1).collect();
    let n = x.rows() as f64;
    BernoulliNbModel {
        negative: bernoulli_class_stats(x, &neg_rows, (neg_rows.len() as f64 / n).ln()),
        positive: bernoulli_class_stats(x, &pos_rows, (pos_rows.len() as f64 / n).ln()),
    }
}

fn bernoulli_log_joint(stats: &BernoulliClassStats, row: &[f64]) -> f64 {
    let mut log = stats.log_prior;
    for (f, v) in row.iter().enumerate() {
        log += if binarize(*v) == 1.0 { stats.log_theta[f] } else { stats.log_one_minus_theta[f] };
    }
    log
}

pub fn bernoulli_nb_score(model: &BernoulliNbModel, row: &[f64]) -> f64 {
    softmax_positive(
        bernoulli_log_joint(&model.negative, row),
        bernoulli_log_joint(&model.positive, row),
    )
}

/// Per-class mean vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestCentroidModel {
    pub negative: Vec<f64>,
    pub positive: Vec<f64>,
}

pub fn fit_nearest_centroid(x: &Matrix, y: &[u8]) -> NearestCentroidModel {
    let d = x.cols();
    let mut sums = [vec![0.0; d], vec![0.0; d]];
    let mut counts = [0.0, 0.0];
    for i in 0..x.rows() {
        let c = usize::from(y[i]);
        counts[c] += 1.0;
        for (s, v) in sums[c].iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    for c in 0..2 {
        for s in &mut sums[c] {
            *s /= counts[c];
        }
    }
    let [negative, positive] = sums;
    NearestCentroidModel { negative, positive }
}

/// `d₀ / (d₀ + d₁)` — above ½ exactly when the homograph centroid is
/// nearer; ½ when the distances tie (including the degenerate case of a
/// point sitting on both centroids).
pub fn nearest_centroid_score(model: &NearestCentroidModel, row: &[f64]) -> f64 {
    let d0 = squared_distance(&model.negative, row).sqrt();
    let d1 = squared_distance(&model.positive, row).sqrt();
    if d0 + d1 == 0.0 {
        return 0.5;
    }
    d0 / (d0 + d1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn knn_breaks_distance_ties_by_lower_row_index() {
        let model = KNeighborsModel {
            matrix: matrix(&[vec![0.0], vec![2.0]]),
            labels: vec![0, 1],
            k: 1,
        };
        // The query sits exactly between both rows; row 0 wins the tie.
        assert_eq!(knn_score(&model, &[1.0]), 0.0);
        let swapped = KNeighborsModel {
            matrix: matrix(&[vec![2.0], vec![0.0]]),
            labels: vec![1, 0],
            k: 1,
        };
        assert_eq!(knn_score(&swapped, &[1.0]), 1.0);
    }

    #[test]
    fn knn_majority_over_k_neighbors() {
        let model = KNeighborsModel {
            matrix: matrix(&[vec![0.0], vec![0.1], vec![0.2], vec![9.0], vec![9.1]]),
            labels: vec![1, 1, 0, 0, 0],
            k: 3,
        };
        assert!((knn_score(&model, &[0.05]) - 2.0 / 3.0).abs() < 1e-12);
        assert!(knn_score(&model, &[9.05]) < 0.5);
    }

    #[test]
    fn knn_k_larger_than_the_training_set_degrades_to_all_rows() {
        let model = KNeighborsModel {
            matrix: matrix(&[vec![0.0], vec![1.0]]),
            labels: vec![0, 1],
            k: 5,
        };
        assert_eq!(knn_score(&model, &[0.0]), 0.5);
    }

    #[test]
    fn gaussian_nb_separates_clear_clusters() {
        let x = matrix(&[
            vec![0.0, 0.2],
            vec![0.1, 0.0],
            vec![0.2, 0.1],
            vec![5.0, 5.2],
            vec![5.1, 5.0],
            vec![5.2, 5.1],
        ]);
        let y = [0, 0, 0, 1, 1, 1];
        let model = fit_gaussian_nb(&x, &y);
        assert!(gaussian_nb_score(&model, &[0.1, 0.1]) < 0.01);
        assert!(gaussian_nb_score(&model, &[5.1, 5.1]) > 0.99);
    }

    #[test]
    fn gaussian_nb_is_exactly_half_at_the_symmetric_midpoint() {
        // Mirror-image classes with equal priors: the midpoint's
        // likelihoods cancel, leaving the posterior at ½.
        let x = matrix(&[vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]]);
        let y = [0, 0, 1, 1];
        let model = fit_gaussian_nb(&x, &y);
        assert!((gaussian_nb_score(&model, &[0.0]) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn gaussian_nb_survives_constant_features() {
        let x = matrix(&[vec![1.0, 0.0], vec![1.0, 0.1], vec![1.0, 5.0], vec![1.0, 5.1]]);
        let y = [0, 0, 1, 1];
        let model = fit_gaussian_nb(&x, &y);
        let score = gaussian_nb_score(&model, &[1.0, 5.05]);
        assert!(score.is_finite() && score > 0.99);
    }

    #[test]
    fn multinomial_nb_separates_disjoint_alphabets() {
        // Classes use disjoint presence columns, like disjoint unigram
        // alphabets.
        let x = matrix(&[
            vec![1.0, 1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 1.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ]);
        let y = [0, 0, 1, 1];
        let model = fit_multinomial_nb(&x, &y);
        assert!(multinomial_nb_score(&model, &[1.0, 1.0, 0.0, 0.0]) < 0.5);
        assert!(multinomial_nb_score(&model, &[0.0, 0.0, 1.0, 1.0]) > 0.5);
    }

    #[test]
    fn multinomial_nb_clamps_negative_values_to_zero() {
        let x = matrix(&[vec![-0.7, 1.0], vec![0.0, 1.0], vec![0.9, 0.0], vec![1.0, 0.0]]);
        let y = [0, 0, 1, 1];
        let model = fit_multinomial_nb(&x, &y);
        // A negative first component must behave exactly like zero.
        assert_eq!(
            multinomial_nb_score(&model, &[-0.3, 1.0]),
            multinomial_nb_score(&model, &[0.0, 1.0])
        );
        // And fitting on clamped data equals fitting on pre-clamped data.
        let pre = matrix(&[vec![0.0, 1.0], vec![0.0, 1.0], vec![0.9, 0.0], vec![1.0, 0.0]]);
        assert_eq!(model, fit_multinomial_nb(&pre, &y));
    }

    #[test]
    fn bernoulli_nb_binarizes_at_one_half() {
        let x = matrix(&[vec![0.4], vec![0.2], vec![0.6], vec![0.9]]);
        let y = [0, 0, 1, 1];
        let model = fit_bernoulli_nb(&x, &y);
        // 0.3 and 0.0 binarize identically, as do 0.7 and 1.0.
        assert_eq!(bernoulli_nb_score(&model, &[0.3]), bernoulli_nb_score(&model, &[0.0]));
        assert_eq!(bernoulli_nb_score(&model, &[0.7]), bernoulli_nb_score(&model, &[1.0]));
        assert!(bernoulli_nb_score(&model, &[0.0]) < 0.5);
        assert!(bernoulli_nb_score(&model, &[1.0]) > 0.5);
    }

    #[test]
    fn nearest_centroid_prefers_the_nearer_mean() {
        let x = matrix(&[vec![0.0, 0.0], vec![0.0, 2.0], vec![10.0, 0.0], vec![10.0, 2.0]]);
        let y = [0, 0, 1, 1];
        let model = fit_nearest_centroid(&x, &y);
        assert_eq!(model.negative, vec![0.0, 1.0]);
        assert_eq!(model.positive, vec![10.0, 1.0]);
        assert!(nearest_centroid_score(&model, &[1.0, 1.0]) < 0.5);
        assert!(nearest_centroid_score(&model, &[9.0, 1.0]) > 0.5);
        assert_eq!(nearest_centroid_score(&model, &[5.0, 1.0]), 0.5);
    }

    #[test]
    fn nearest_centroid_coincident_centroids_score_half() {
        let x = matrix(&[vec![3.0], vec![3.0]]);
        let y = [0, 1];
        let model = fit_nearest_centroid(&x, &y);
        assert_eq!(nearest_centroid_score(&model, &[3.0]), 0.5);
    }
}
