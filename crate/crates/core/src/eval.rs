//! Evaluation: stratified k-fold cross-validation, confusion metrics, the
//! three-approach comparison, and the SSIM-binned error analysis.
//!
//! Cross-validation rebuilds the feature schema on each fold's training
//! portion only — in particular the unigram vocabulary — so no test-fold
//! character can leak a column into the model.  Out-of-fold predictions
//! are retained per sample and feed the binned analysis: corpus pairs are
//! grouped by mean SSIM either into ten equal-width sub-ranges or ten
//! equal-count subsets, and accuracy is compared per bin across the
//! SSIM-only, unigram-only, and combined approaches.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::LabeledSample;
use crate::error::{Error, Result};
use crate::exec;
use crate::features::{build_vocabulary, FeatureMode, FeatureSchema, Featurizer};
use crate::learners::{FittedLearner, LearnerSpec};
use crate::render::GlyphSource;
use crate::similarity::{domain_ssim, SsimParams};

/// Confusion counts and the derived rates.  Homograph is the positive
/// class; `fpr`/`tpr` are `None` when their denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub true_positives: usize,
    pub true_negatives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub acc: f64,
    pub fpr: Option<f64>,
    pub tpr: Option<f64>,
}

impl Metrics {
    /// Builds the derived rates from raw counts (total must be ≥ 1).
    pub fn from_counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> Metrics {
        let total = tp + tn + fp + fn_;
        debug_assert!(total > 0);
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        Metrics {
            true_positives: tp,
            true_negatives: tn,
            false_positives: fp,
            false_negatives: fn_,
            acc: (tp + tn) as f64 / total as f64,
            fpr: ratio(fp, fp + tn),
            tpr: ratio(tp, tp + fn_),
        }
    }

    pub fn total(&self) -> usize {
        self.true_positives + self.true_negatives + self.false_positives + self.false_negatives
    }

    pub fn correct(&self) -> usize {
        self.true_positives + self.true_negatives
    }
}

/// Confusion metrics of `y_pred` against `y_true` (homograph = 1).
pub fn compute_metrics(y_true: &[u8], y_pred: &[u8]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch { left: y_true.len(), right: y_pred.len() });
    }
    if y_true.is_empty() {
        return Err(Error::EmptyInput("label vector"));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => tp += 1,
            (0, 0) => tn += 1,
            (0, 1) => fp += 1,
            (1, 0) => fn_ += 1,
            _ => return Err(Error::Config("labels must be 0 or 1".into())),
        }
    }
    Ok(Metrics::from_counts(tp, tn, fp, fn_))
}

/// One fold: training row indices and held-out row indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold split over `labels`.
///
/// Each class's indices are shuffled by the seeded generator and dealt
/// round-robin across folds; the deal position carries over between
/// classes, keeping overall fold sizes within one of each other while
/// every fold's per-class count stays within one of class_total / k.
pub fn kfold_split(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Fold>> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(Error::InvalidK {
            k,
            n,
            reason: "fold count must lie in [2, sample count]".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes: BTreeSet<u8> = labels.iter().copied().collect();
    let mut test_folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut position = 0usize;
    for class in classes {
        let mut members: Vec<usize> =
            (0..n).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for idx in members {
            test_folds[position % k].push(idx);
            position += 1;
        }
    }
    Ok(test_folds
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let in_test: BTreeSet<usize> = test.iter().copied().collect();
            let train: Vec<usize> = (0..n).filter(|i| !in_test.contains(i)).collect();
            Fold { train, test }
        })
        .collect())
}

/// Per-fold evaluation outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub test_indices: Vec<usize>,
    pub metrics: Metrics,
}

/// Everything cross-validation produces: aggregate metrics, per-fold
/// metrics, per-sample out-of-fold predictions, and (for SSIM-bearing
/// modes) the mean SSIM computed per pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub mode: FeatureMode,
    pub overall: Metrics,
    pub folds: Vec<FoldOutcome>,
    /// Out-of-fold hard prediction per corpus sample, in corpus order.
    pub oof_predictions: Vec<u8>,
    /// Out-of-fold score per corpus sample.
    pub oof_scores: Vec<f64>,
    /// The schema each fold trained with (vocabulary from its own
    /// training portion only).
    pub fold_schemas: Vec<FeatureSchema>,
    /// Mean SSIM per corpus sample when the mode renders; `None` for the
    /// unigram-only mode.
    pub mean_ssim: Option<Vec<f64>>,
}

/// Renders each pair once, in parallel, in corpus order.
pub fn corpus_mean_ssim(
    samples: &[LabeledSample],
    source: &dyn GlyphSource,
    params: &SsimParams,
) -> Result<Vec<f64>> {
    let results = exec::map_collect(samples, |s| {
        domain_ssim(&s.candidate, &s.brand, source, params).map(|d| d.mean_ssim)
    });
    results.into_iter().collect()
}

/// Runs stratified k-fold cross-validation of `spec` on `samples` under
/// `mode`.  `source`/`ssim_params` are required for SSIM-bearing modes;
/// `precomputed_ssim`, when given, skips rendering (it must align with
/// `samples`).
#[allow(clippy::too_many_arguments)]
pub fn cross_validate(
    samples: &[LabeledSample],
    mode: FeatureMode,
    source: Option<&dyn GlyphSource>,
    ssim_params: Option<&SsimParams>,
    precomputed_ssim: Option<&[f64]>,
    spec: &LearnerSpec,
    k: usize,
    seed: u64,
) -> Result<CrossValidation> {
    if samples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let labels: Vec<u8> = samples.iter().map(|s| s.label.as_binary()).collect();
    let folds = kfold_split(&labels, k, seed)?;
    let mean_ssim: Option<Vec<f64>> = if mode.uses_ssim() {
        match precomputed_ssim {
            Some(cached) => {
                if cached.len() != samples.len() {
                    return Err(Error::LengthMismatch {
                        left: cached.len(),
                        right: samples.len(),
                    });
                }
                Some(cached.to_vec())
            }
            None => {
                let source = source.ok_or_else(|| {
                    Error::SchemaMismatch(format!(
                        "mode {} requires a glyph source",
                        mode.name()
                    ))
                })?;
                let params = ssim_params.ok_or_else(|| {
                    Error::SchemaMismatch(format!(
                        "mode {} requires ssim parameters",
                        mode.name()
                    ))
                })?;
                Some(corpus_mean_ssim(samples, source, params)?)
            }
        }
    } else {
        None
    };

    let mut oof_predictions = vec![0u8; samples.len()];
    let mut oof_scores = vec![0.0f64; samples.len()];
    let mut fold_outcomes = Vec::with_capacity(folds.len());
    let mut fold_schemas = Vec::with_capacity(folds.len());
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for fold in &folds {
        let train_samples: Vec<LabeledSample> =
            fold.train.iter().map(|&i| samples[i].clone()).collect();
        let test_samples: Vec<LabeledSample> =
            fold.test.iter().map(|&i| samples[i].clone()).collect();
        let vocabulary =
            if mode.uses_unigram() { Some(build_vocabulary(&train_samples)?) } else { None };
        let render_digest = if mode.uses_ssim() {
            Some(
                source
                    .ok_or_else(|| {
                        Error::SchemaMismatch(format!(
                            "mode {} requires a glyph source",
                            mode.name()
                        ))
                    })?
                    .config_digest()
                    .to_string(),
            )
        } else {
            None
        };
        let params_for_schema = if mode.uses_ssim() {
            Some(ssim_params.cloned().unwrap_or_default())
        } else {
            None
        };
        let schema = FeatureSchema::new(mode, vocabulary, render_digest, params_for_schema)?;
        let featurizer = Featurizer::new(&schema, source)?;
        let gather = |indices: &[usize]| -> Option<Vec<f64>> {
            mean_ssim.as_ref().map(|all| indices.iter().map(|&i| all[i]).collect())
        };
        let train_ssim = gather(&fold.train);
        let test_ssim = gather(&fold.test);
        let x_train = featurizer.featurize_matrix(&train_samples, train_ssim.as_deref())?;
        let x_test = featurizer.featurize_matrix(&test_samples, test_ssim.as_deref())?;
        let y_train: Vec<u8> = fold.train.iter().map(|&i| labels[i]).collect();
        let y_test: Vec<u8> = fold.test.iter().map(|&i| labels[i]).collect();
        let learner = FittedLearner::fit(spec, &x_train, &y_train)?;
        let scores = learner.predict_score(&x_test)?;
        let predictions: Vec<u8> = scores.iter().map(|&s| u8::from(s >= 0.5)).collect();
        for ((&i, &p), &s) in fold.test.iter().zip(&predictions).zip(&scores) {
            oof_predictions[i] = p;
            oof_scores[i] = s;
        }
        let metrics = compute_metrics(&y_test, &predictions)?;
        tp += metrics.true_positives;
        tn += metrics.true_negatives;
        fp += metrics.false_positives;
        fn_ += metrics.false_negatives;
        fold_outcomes.push(FoldOutcome { test_indices: fold.test.clone(), metrics });
        fold_schemas.push(schema);
    }
    Ok(CrossValidation {
        mode,
        overall: Metrics::from_counts(tp, tn, fp, fn_),
        folds: fold_outcomes,
        oof_predictions,
        oof_scores,
        fold_schemas,
        mean_ssim,
    })
}

/// The three approaches compared throughout the analysis, in report order.
pub const APPROACH_NAMES: [&str; 3] = ["ssim", "unigram", "combined"];

/// One corpus sample annotated with everything binning needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSample {
    pub candidate: String,
    pub label: u8,
    pub mean_ssim: f64,
    /// Out-of-fold correctness under [ssim, unigram, combined].
    pub correct: [bool; 3],
}

/// Joins the corpus with three cross-validation runs into bin inputs.
pub fn assemble_bin_samples(
    samples: &[LabeledSample],
    mean_ssim: &[f64],
    ssim_cv: &CrossValidation,
    unigram_cv: &CrossValidation,
    combined_cv: &CrossValidation,
) -> Result<Vec<BinSample>> {
    for preds in
        [&ssim_cv.oof_predictions, &unigram_cv.oof_predictions, &combined_cv.oof_predictions]
    {
        if preds.len() != samples.len() {
            return Err(Error::LengthMismatch { left: preds.len(), right: samples.len() });
        }
    }
    if mean_ssim.len() != samples.len() {
        return Err(Error::LengthMismatch { left: mean_ssim.len(), right: samples.len() });
    }
    Ok(samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let label = s.label.as_binary();
            BinSample {
                candidate: s.candidate.clone(),
                label,
                mean_ssim: mean_ssim[i],
                correct: [
                    ssim_cv.oof_predictions[i] == label,
                    unigram_cv.oof_predictions[i] == label,
                    combined_cv.oof_predictions[i] == label,
                ],
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinScheme {
    EqualRange,
    EqualCount,
}

/// One SSIM bin with per-approach accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub lower: f64,
    pub upper: f64,
    pub sample_count: usize,
    /// Correct out-of-fold predictions per approach ([ssim, unigram,
    /// combined]).
    pub correct: [usize; 3],
    /// `correct / sample_count`; `None` for an empty bin.
    pub accuracy: [Option<f64>; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinReport {
    pub scheme: BinScheme,
    pub bins: Vec<BinRow>,
}

fn accumulate_bins(
    scheme: BinScheme,
    bounds: Vec<(f64, f64)>,
    assignment: &[usize],
    samples: &[BinSample],
) -> BinReport {
    let mut counts = vec![0usize; bounds.len()];
    let mut correct = vec![[0usize; 3]; bounds.len()];
    for (sample, &bin) in samples.iter().zip(assignment) {
        counts[bin] += 1;
        for a in 0..3 {
            correct[bin][a] += usize::from(sample.correct[a]);
        }
    }
    let bins = bounds
        .into_iter()
        .enumerate()
        .map(|(b, (lower, upper))| {
            let accuracy = std::array::from_fn(|a| {
                (counts[b] > 0).then(|| correct[b][a] as f64 / counts[b] as f64)
            });
            BinRow { lower, upper, sample_count: counts[b], correct: correct[b], accuracy }
        })
        .collect();
    BinReport { scheme, bins }
}

/// Ten equal-width SSIM sub-ranges spanning [min, max]; every bin is
/// lower-closed and the last is closed at the maximum.  A degenerate
/// corpus (all pairs sharing one SSIM value) collapses into the first bin.
pub fn bin_equal_range(samples: &[BinSample], n_bins: usize) -> Result<BinReport> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("bin samples"));
    }
    debug_assert!(n_bins >= 1);
    let min = samples.iter().map(|s| s.mean_ssim).fold(f64::INFINITY, f64::min);
    let max = samples.iter().map(|s| s.mean_ssim).fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / n_bins as f64;
    let assignment: Vec<usize> = samples
        .iter()
        .map(|s| {
            if width > 0.0 {
                (((s.mean_ssim - min) / width) as usize).min(n_bins - 1)
            } else {
                0
            }
        })
        .collect();
    let bounds: Vec<(f64, f64)> = (0..n_bins)
        .map(|b| {
            let lower = min + b as f64 * width;
            let upper = if b + 1 == n_bins { max } else { min + (b + 1) as f64 * width };
            (lower, upper)
        })
        .collect();
    Ok(accumulate_bins(BinScheme::EqualRange, bounds, &assignment, samples))
}

/// Sort order for equal-count binning: ascending mean SSIM, ties broken
/// by candidate string so the partition is deterministic.
fn equal_count_order(samples: &[BinSample]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| {
        samples[a]
            .mean_ssim
            .partial_cmp(&samples[b].mean_ssim)
            .expect("mean ssim is finite")
            .then_with(|| samples[a].candidate.cmp(&samples[b].candidate))
    });
    order
}

/// Bin index per sample under the equal-count scheme: the first
/// `n_bins − 1` bins take ⌊N / n_bins⌋ samples each and the last absorbs
/// the remainder.
pub fn equal_count_assignment(samples: &[BinSample], n_bins: usize) -> Result<Vec<usize>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("bin samples"));
    }
    let base = samples.len() / n_bins;
    let mut assignment = vec![0usize; samples.len()];
    for (rank, &idx) in equal_count_order(samples).iter().enumerate() {
        assignment[idx] = if base == 0 { n_bins - 1 } else { (rank / base).min(n_bins - 1) };
    }
    Ok(assignment)
}

/// Ten equal-count SSIM subsets (population deciles of mean SSIM).
pub fn bin_equal_count(samples: &[BinSample], n_bins: usize) -> Result<BinReport> {
    let assignment = equal_count_assignment(samples, n_bins)?;
    let mut bounds = vec![(0.0, 0.0); n_bins];
    let mut seen = vec![false; n_bins];
    for (sample, &bin) in samples.iter().zip(&assignment) {
        let (lower, upper) = &mut bounds[bin];
        if !seen[bin] {
            *lower = sample.mean_ssim;
            *upper = sample.mean_ssim;
            seen[bin] = true;
        } else {
            *lower = lower.min(sample.mean_ssim);
            *upper = upper.max(sample.mean_ssim);
        }
    }
    Ok(accumulate_bins(BinScheme::EqualCount, bounds, &assignment, samples))
}

/// Three coarse SSIM ranges over the ten equal-count bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeGroup {
    /// Low-range group: equal-count bins 1–6.
    Low,
    /// Mid-range group: bin 7.
    Mid,
    /// High-range group: bins 8–10.
    High,
}

impl RangeGroup {
    pub fn name(self) -> &'static str {
        match self {
            RangeGroup::Low => "LRG",
            RangeGroup::Mid => "MRG",
            RangeGroup::High => "HRG",
        }
    }
}

const GROUP_BIN_COUNT: usize = 10;

/// Splits corpus indices into the low/mid/high groups (equal-count bins
/// 1–6, 7, and 8–10).
pub fn range_group_indices(samples: &[BinSample]) -> Result<[Vec<usize>; 3]> {
    let assignment = equal_count_assignment(samples, GROUP_BIN_COUNT)?;
    let mut groups: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (i, &bin) in assignment.iter().enumerate() {
        let g = match bin {
            0..=5 => 0,
            6 => 1,
            _ => 2,
        };
        groups[g].push(i);
    }
    Ok(groups)
}

/// One sample both approaches disagreed about, with everything the error
/// tables show.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    pub candidate: String,
    pub brand: String,
    pub label: u8,
    pub mean_ssim: f64,
    pub predicted_by_a: u8,
    pub predicted_by_b: u8,
    pub predicted_by_combined: u8,
    /// Fraction of character positions whose per-character SSIM is below
    /// 1; only defined for equal-length homograph pairs.
    pub char_diff_ratio: Option<f64>,
}

/// Error analysis of one range group: samples approach A got right and
/// approach B got wrong, with the combined approach's verdict on each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSampleReport {
    pub group: RangeGroup,
    /// Name of the approach whose correct predictions define the baseline.
    pub approach_a: String,
    /// Name of the approach whose mistakes are under study.
    pub approach_b: String,
    pub total: usize,
    pub homographs: usize,
    pub non_homographs: usize,
    pub error_samples: Vec<ErrorSample>,
    /// How many of the error samples the combined approach predicts
    /// correctly.
    pub combined_fixed: usize,
}

/// Extracts the error set of a range group: members correct under A but
/// wrong under B.  `indices` selects the group inside the corpus-aligned
/// slices.  `char_diff_ratio` is computed for each equal-length homograph
/// error by re-rendering the pair through `source`.
#[allow(clippy::too_many_arguments)]
pub fn extract_error_samples(
    group: RangeGroup,
    approach_a: &str,
    approach_b: &str,
    indices: &[usize],
    samples: &[LabeledSample],
    mean_ssim: &[f64],
    preds_a: &[u8],
    preds_b: &[u8],
    preds_combined: &[u8],
    source: &dyn GlyphSource,
    params: &SsimParams,
) -> Result<ErrorSampleReport> {
    for slice_len in [mean_ssim.len(), preds_a.len(), preds_b.len(), preds_combined.len()] {
        if slice_len != samples.len() {
            return Err(Error::LengthMismatch { left: slice_len, right: samples.len() });
        }
    }
    let mut homographs = 0;
    let mut non_homographs = 0;
    let mut error_samples = Vec::new();
    let mut combined_fixed = 0;
    for &i in indices {
        let label = samples[i].label.as_binary();
        if label == 1 {
            homographs += 1;
        } else {
            non_homographs += 1;
        }
        let a_correct = preds_a[i] == label;
        let b_correct = preds_b[i] == label;
        if !(a_correct && !b_correct) {
            continue;
        }
        if preds_combined[i] == label {
            combined_fixed += 1;
        }
        let char_diff_ratio = if label == 1 {
            domain_ssim(&samples[i].candidate, &samples[i].brand, source, params)?
                .char_diff_ratio()
                .ok()
        } else {
            None
        };
        error_samples.push(ErrorSample {
            candidate: samples[i].candidate.clone(),
            brand: samples[i].brand.clone(),
            label,
            mean_ssim: mean_ssim[i],
            predicted_by_a: preds_a[i],
            predicted_by_b: preds_b[i],
            predicted_by_combined: preds_combined[i],
            char_diff_ratio,
        });
    }
    Ok(ErrorSampleReport {
        group,
        approach_a: approach_a.to_string(),
        approach_b: approach_b.to_string(),
        total: indices.len(),
        homographs,
        non_homographs,
        error_samples,
        combined_fixed,
    })
}

fn format_accuracy(a: Option<f64>) -> String {
    match a {
        Some(v) => format!("{:.2}%", v * 100.0),
        None => "-".to_string(),
    }
}

/// Aligned-column rendering of labeled metrics (the Table I analogue).
pub fn render_metrics_table(rows: &[(String, Metrics)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<28} {:>8} {:>8} {:>8}\n",
        "configuration", "ACC", "FPR", "TPR"
    ));
    for (label, m) in rows {
        out.push_str(&format!(
            "{:<28} {:>8} {:>8} {:>8}\n",
            label,
            format!("{:.2}%", m.acc * 100.0),
            format_accuracy(m.fpr),
            format_accuracy(m.tpr),
        ));
    }
    out
}

/// Aligned-column rendering of a bin report (the Table II analogue).
pub fn render_bin_table(report: &BinReport) -> String {
    let mut out = String::new();
    let scheme = match report.scheme {
        BinScheme::EqualRange => "equal-range",
        BinScheme::EqualCount => "equal-count",
    };
    out.push_str(&format!(
        "{:<4} {:<18} {:>7} {:>9} {:>9} {:>9}   ({scheme})\n",
        "bin", "ssim range", "count", "ssim", "unigram", "combined"
    ));
    for (i, bin) in report.bins.iter().enumerate() {
        out.push_str(&format!(
            "{:<4} [{:.3}, {:.3}]     {:>7} {:>9} {:>9} {:>9}\n",
            i + 1,
            bin.lower,
            bin.upper,
            bin.sample_count,
            format_accuracy(bin.accuracy[0]),
            format_accuracy(bin.accuracy[1]),
            format_accuracy(bin.accuracy[2]),
        ));
    }
    out
}

/// Aligned-column rendering of an error report (the Table III analogue).
pub fn render_error_table(report: &ErrorSampleReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{} group: {} samples ({} homographs, {} non-homographs)\n",
        report.group.name(),
        report.total,
        report.homographs,
        report.non_homographs
    ));
    out.push_str(&format!(
        "error samples (correct under {}, wrong under {}): {}; combined approach fixes {}\n",
        report.approach_a,
        report.approach_b,
        report.error_samples.len(),
        report.combined_fixed
    ));
    if !report.error_samples.is_empty() {
        out.push_str(&format!(
            "{:<28} {:<28} {:>5} {:>7} {:>3} {:>3} {:>4} {:>6}\n",
            "candidate", "brand", "label", "ssim", "A", "B", "comb", "diff"
        ));
        for e in &report.error_samples {
            out.push_str(&format!(
                "{:<28} {:<28} {:>5} {:>7.3} {:>3} {:>3} {:>4} {:>6}\n",
                e.candidate,
                e.brand,
                e.label,
                e.mean_ssim,
                e.predicted_by_a,
                e.predicted_by_b,
                e.predicted_by_combined,
                e.char_diff_ratio.map_or("-".to_string(), |r| format!("{r:.2}")),
            ));
        }
    }
    out
}

/// CSV with one row per (bin, approach): `bin_index,approach,accuracy`.
/// Bin indices are 1-based; empty bins emit an empty accuracy field.
pub fn figure_csv(report: &BinReport) -> String {
    let mut out = String::from("bin_index,approach,accuracy\n");
    for (i, bin) in report.bins.iter().enumerate() {
        for (a, name) in APPROACH_NAMES.iter().enumerate() {
            let accuracy =
                bin.accuracy[a].map_or(String::new(), |v| format!("{v}"));
            out.push_str(&format!("{},{},{}\n", i + 1, name, accuracy));
        }
    }
    out
}
