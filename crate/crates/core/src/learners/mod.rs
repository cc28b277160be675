//! The classifier suite behind one fit/predict interface.
//!
//! Every learner consumes a feature matrix with homograph = 1 as the
//! positive class, scores rows with a probability-like value in [0, 1],
//! and predicts by thresholding that score at 0.5.  Tree ensembles are
//! built from the CART trees in [`tree`]; the averaging family
//! parallelizes its members under per-index derived seeds, so a spec and
//! a seed pin the model exactly regardless of thread count.

pub mod baselines;
pub mod ensemble;
pub mod tree;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use baselines::{
    BernoulliNbModel, GaussianNbModel, KNeighborsModel, MultinomialNbModel, NearestCentroidModel,
};
pub use ensemble::{AdaBoostModel, ForestOptions, GradientBoostModel};
pub use tree::{ClassificationTree, FeaturePolicy, RegressionTree, SplitKind, TreeConfig};

use crate::error::{Error, Result};
use crate::exec;
use crate::features::FeatureSchema;
use crate::matrix::Matrix;

/// The classification algorithms on offer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    DecisionTree,
    RandomForest,
    ExtraTrees,
    Bagging,
    #[serde(rename = "adaboost")]
    AdaBoost,
    GradientBoost,
    #[serde(rename = "kneighbors")]
    KNeighbors,
    GaussianNb,
    MultinomialNb,
    BernoulliNb,
    NearestCentroid,
}

impl Algorithm {
    pub const ALL: [Algorithm; 11] = [
        Algorithm::DecisionTree,
        Algorithm::RandomForest,
        Algorithm::ExtraTrees,
        Algorithm::Bagging,
        Algorithm::AdaBoost,
        Algorithm::GradientBoost,
        Algorithm::KNeighbors,
        Algorithm::GaussianNb,
        Algorithm::MultinomialNb,
        Algorithm::BernoulliNb,
        Algorithm::NearestCentroid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::DecisionTree => "decision_tree",
            Algorithm::RandomForest => "random_forest",
            Algorithm::ExtraTrees => "extra_trees",
            Algorithm::Bagging => "bagging",
            Algorithm::AdaBoost => "adaboost",
            Algorithm::GradientBoost => "gradient_boost",
            Algorithm::KNeighbors => "kneighbors",
            Algorithm::GaussianNb => "gaussian_nb",
            Algorithm::MultinomialNb => "multinomial_nb",
            Algorithm::BernoulliNb => "bernoulli_nb",
            Algorithm::NearestCentroid => "nearest_centroid",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_n_estimators() -> usize {
    100
}
fn default_k_neighbors() -> usize {
    5
}
fn default_learning_rate() -> f64 {
    0.1
}
fn default_rng_seed() -> u64 {
    42
}

/// Algorithm choice plus its hyperparameters.
///
/// `max_depth` limits the single decision tree and every averaging-family
/// member (`None` = unlimited); for the boosting family it overrides the
/// base-learner depth, which defaults to 1 (AdaBoost stumps) and 3
/// (gradient-boosting regression trees).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub algorithm: Algorithm,
    #[serde(default = "default_n_estimators")]
    pub n_estimators: usize,
    #[serde(default = "default_k_neighbors")]
    pub k_neighbors: usize,
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_rng_seed")]
    pub rng_seed: u64,
}

impl LearnerSpec {
    /// A spec with the default hyperparameters.
    pub fn new(algorithm: Algorithm) -> Self {
        LearnerSpec {
            algorithm,
            n_estimators: default_n_estimators(),
            k_neighbors: default_k_neighbors(),
            max_depth: None,
            learning_rate: default_learning_rate(),
            rng_seed: default_rng_seed(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_estimators < 1 {
            return Err(Error::Config("n_estimators must be at least 1".into()));
        }
        if self.k_neighbors < 1 || self.k_neighbors % 2 == 0 {
            return Err(Error::Config(format!(
                "k_neighbors must be odd and positive, got {}",
                self.k_neighbors
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!(
                "learning_rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Algorithm-specific fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Tree { tree: ClassificationTree },
    Forest { trees: Vec<ClassificationTree> },
    #[serde(rename = "adaboost")]
    AdaBoost { model: AdaBoostModel },
    GradientBoost { model: GradientBoostModel },
    #[serde(rename = "kneighbors")]
    KNeighbors { model: KNeighborsModel },
    GaussianNb { model: GaussianNbModel },
    MultinomialNb { model: MultinomialNbModel },
    BernoulliNb { model: BernoulliNbModel },
    NearestCentroid { model: NearestCentroidModel },
}

/// A fitted classifier: spec, expected feature count, and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedLearner {
    pub spec: LearnerSpec,
    pub n_features: usize,
    pub params: ModelParams,
}

impl FittedLearner {
    /// Fits `spec` on `x`/`y` (homograph = 1).
    pub fn fit(spec: &LearnerSpec, x: &Matrix, y: &[u8]) -> Result<FittedLearner> {
        spec.validate()?;
        if x.rows() != y.len() {
            return Err(Error::LengthMismatch { left: x.rows(), right: y.len() });
        }
        if y.is_empty() {
            return Err(Error::EmptyInput("training set"));
        }
        if x.cols() == 0 {
            return Err(Error::Config("training matrix has no feature columns".into()));
        }
        if y.iter().any(|&l| l > 1) {
            return Err(Error::Config("labels must be 0 or 1".into()));
        }
        if !(y.contains(&0) && y.contains(&1)) {
            return Err(Error::DegenerateLabels);
        }
        let params = match spec.algorithm {
            Algorithm::DecisionTree => {
                let rows: Vec<usize> = (0..x.rows()).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
                ModelParams::Tree {
                    tree: ClassificationTree::fit(
                        x,
                        y,
                        &rows,
                        None,
                        &TreeConfig::exhaustive(spec.max_depth),
                        &mut rng,
                    ),
                }
            }
            Algorithm::RandomForest => ModelParams::Forest {
                trees: ensemble::fit_forest(
                    x,
                    y,
                    &ForestOptions::random_forest(spec.n_estimators, spec.max_depth, spec.rng_seed),
                ),
            },
            Algorithm::ExtraTrees => ModelParams::Forest {
                trees: ensemble::fit_forest(
                    x,
                    y,
                    &ForestOptions::extra_trees(spec.n_estimators, spec.max_depth, spec.rng_seed),
                ),
            },
            Algorithm::Bagging => ModelParams::Forest {
                trees: ensemble::fit_forest(
                    x,
                    y,
                    &ForestOptions::bagging(spec.n_estimators, spec.max_depth, spec.rng_seed),
                ),
            },
            Algorithm::AdaBoost => ModelParams::AdaBoost {
                model: ensemble::fit_adaboost(
                    x,
                    y,
                    spec.n_estimators,
                    spec.max_depth.unwrap_or(1),
                ),
            },
            Algorithm::GradientBoost => ModelParams::GradientBoost {
                model: ensemble::fit_gradient_boost(
                    x,
                    y,
                    spec.n_estimators,
                    spec.max_depth.unwrap_or(3),
                    spec.learning_rate,
                ),
            },
            Algorithm::KNeighbors => ModelParams::KNeighbors {
                model: KNeighborsModel {
                    matrix: x.clone(),
                    labels: y.to_vec(),
                    k: spec.k_neighbors,
                },
            },
            Algorithm::GaussianNb => {
                ModelParams::GaussianNb { model: baselines::fit_gaussian_nb(x, y) }
            }
            Algorithm::MultinomialNb => {
                ModelParams::MultinomialNb { model: baselines::fit_multinomial_nb(x, y) }
            }
            Algorithm::BernoulliNb => {
                ModelParams::BernoulliNb { model: baselines::fit_bernoulli_nb(x, y) }
            }
            Algorithm::NearestCentroid => {
                ModelParams::NearestCentroid { model: baselines::fit_nearest_centroid(x, y) }
            }
        };
        Ok(FittedLearner { spec: spec.clone(), n_features: x.cols(), params })
    }

    fn check_columns(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.n_features {
            return Err(Error::FeatureDimension { expected: self.n_features, found: x.cols() });
        }
        Ok(())
    }

    fn score_row(&self, row: &[f64]) -> f64 {
        match &self.params {
            ModelParams::Tree { tree } => tree.score_one(row),
            ModelParams::Forest { trees } => ensemble::forest_score(trees, row),
            ModelParams::AdaBoost { model } => ensemble::adaboost_score(model, row),
            ModelParams::GradientBoost { model } => ensemble::gradient_boost_score(model, row),
            ModelParams::KNeighbors { model } => baselines::knn_score(model, row),
            ModelParams::GaussianNb { model } => baselines::gaussian_nb_score(model, row),
            ModelParams::MultinomialNb { model } => baselines::multinomial_nb_score(model, row),
            ModelParams::BernoulliNb { model } => baselines::bernoulli_nb_score(model, row),
            ModelParams::NearestCentroid { model } => {
                baselines::nearest_centroid_score(model, row)
            }
        }
    }

    /// Vote fraction / posterior probability / distance margin per row.
    pub fn predict_score(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.check_columns(x)?;
        Ok(exec::map_indices(x.rows(), |i| self.score_row(x.row(i))))
    }

    /// Hard labels: score thresholded at 0.5.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        Ok(self.predict_score(x)?.into_iter().map(|s| u8::from(s >= 0.5)).collect())
    }

    /// Structural validation of the stored parameters against the spec —
    /// run on every loaded model before it is trusted.
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let d = self.n_features;
        let bad = |reason: &str| Error::Config(format!("invalid model parameters: {reason}"));
        match (self.spec.algorithm, &self.params) {
            (Algorithm::DecisionTree, ModelParams::Tree { tree }) => tree.validate(d)?,
            (
                Algorithm::RandomForest | Algorithm::ExtraTrees | Algorithm::Bagging,
                ModelParams::Forest { trees },
            ) => {
                if trees.len() != self.spec.n_estimators {
                    return Err(bad("ensemble size disagrees with n_estimators"));
                }
                for tree in trees {
                    tree.validate(d)?;
                }
            }
            (Algorithm::AdaBoost, ModelParams::AdaBoost { model }) => {
                if model.stages.len() != model.stage_weights.len() {
                    return Err(bad("stage and weight counts disagree"));
                }
                if model.stages.len() > self.spec.n_estimators {
                    return Err(bad("more stages than n_estimators"));
                }
                if !model.stage_weights.iter().all(|a| a.is_finite() && *a > 0.0) {
                    return Err(bad("stage weights must be finite and positive"));
                }
                if !(0.0..=1.0).contains(&model.prior_positive) {
                    return Err(bad("prior outside [0, 1]"));
                }
                for stage in &model.stages {
                    stage.validate(d)?;
                }
            }
            (Algorithm::GradientBoost, ModelParams::GradientBoost { model }) => {
                if model.stages.len() != self.spec.n_estimators {
                    return Err(bad("stage count disagrees with n_estimators"));
                }
                if !model.initial_raw.is_finite() {
                    return Err(bad("non-finite initial score"));
                }
                for stage in &model.stages {
                    stage.validate(d)?;
                }
            }
            (Algorithm::KNeighbors, ModelParams::KNeighbors { model }) => {
                if model.matrix.cols() != d {
                    return Err(bad("stored matrix width disagrees with n_features"));
                }
                if model.matrix.rows() != model.labels.len() {
                    return Err(bad("stored matrix and labels disagree"));
                }
                if model.labels.iter().any(|&l| l > 1) {
                    return Err(bad("stored labels must be 0 or 1"));
                }
                if model.k != self.spec.k_neighbors {
                    return Err(bad("stored k disagrees with the spec"));
                }
            }
            (Algorithm::GaussianNb, ModelParams::GaussianNb { model }) => {
                for class in [&model.negative, &model.positive] {
                    if class.means.len() != d || class.variances.len() != d {
                        return Err(bad("class statistics width disagrees with n_features"));
                    }
                    if !(0.0..=1.0).contains(&class.prior)
                        || !class.means.iter().all(|v| v.is_finite())
                        || !class.variances.iter().all(|v| v.is_finite() && *v > 0.0)
                    {
                        return Err(bad("non-finite or invalid class statistics"));
                    }
                }
            }
            (Algorithm::MultinomialNb, ModelParams::MultinomialNb { model }) => {
                for class in [&model.negative, &model.positive] {
                    if class.feature_log_prob.len() != d {
                        return Err(bad("class statistics width disagrees with n_features"));
                    }
                    if !class.log_prior.is_finite()
                        || !class.feature_log_prob.iter().all(|v| v.is_finite() && *v <= 0.0)
                    {
                        return Err(bad("invalid log-probabilities"));
                    }
                }
            }
            (Algorithm::BernoulliNb, ModelParams::BernoulliNb { model }) => {
                for class in [&model.negative, &model.positive] {
                    if class.log_theta.len() != d || class.log_one_minus_theta.len() != d {
                        return Err(bad("class statistics width disagrees with n_features"));
                    }
                    if !class.log_prior.is_finite()
                        || !class.log_theta.iter().all(|v| v.is_finite() && *v <= 0.0)
                        || !class.log_one_minus_theta.iter().all(|v| v.is_finite() && *v <= 0.0)
                    {
                        return Err(bad("invalid log-probabilities"));
                    }
                }
            }
            (Algorithm::NearestCentroid, ModelParams::NearestCentroid { model }) => {
                if model.negative.len() != d || model.positive.len() != d {
                    return Err(bad("centroid width disagrees with n_features"));
                }
                if !model.negative.iter().chain(&model.positive).all(|v| v.is_finite()) {
                    return Err(bad("non-finite centroid"));
                }
            }
            _ => return Err(bad("stored parameters do not match the algorithm")),
        }
        Ok(())
    }
}

/// A fitted learner bound to the feature schema it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub learner: FittedLearner,
    pub schema: FeatureSchema,
}

impl TrainedModel {
    pub fn new(learner: FittedLearner, schema: FeatureSchema) -> Result<TrainedModel> {
        schema.validate()?;
        if schema.dimensionality() != learner.n_features {
            return Err(Error::FeatureDimension {
                expected: schema.dimensionality(),
                found: learner.n_features,
            });
        }
        Ok(TrainedModel { learner, schema })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        self.learner.predict(x)
    }

    pub fn predict_score(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.learner.predict_score(x)
    }
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    #[serde(default)]
    tool_version: String,
    /// Digest of the resolved run configuration the model was trained
    /// under, when the caller tracks one.
    #[serde(default)]
    config_digest: Option<String>,
    spec: LearnerSpec,
    schema: FeatureSchema,
    schema_digest: String,
    n_features: usize,
    params: ModelParams,
}

/// Serializes the model to a self-describing, versioned JSON file.
pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    save_model_with_digest(model, path, None)
}

/// [`save_model`], additionally stamping the resolved run-configuration
/// digest into the file.
pub fn save_model_with_digest(
    model: &TrainedModel,
    path: &Path,
    config_digest: Option<&str>,
) -> Result<()> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        tool_version: crate::TOOL_VERSION.to_string(),
        config_digest: config_digest.map(str::to_string),
        spec: model.learner.spec.clone(),
        schema: model.schema.clone(),
        schema_digest: model.schema.digest(),
        n_features: model.learner.n_features,
        params: model.learner.params.clone(),
    };
    let mut text = serde_json::to_string(&file).expect("model serializes");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Loads and fully validates a model file.
pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("unreadable model file: {e}")))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Config("model file lacks a format_version".into()))?;
    if version != u64::from(MODEL_FORMAT_VERSION) {
        return Err(Error::Version {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            supported: MODEL_FORMAT_VERSION,
        });
    }
    let file: ModelFile = serde_json::from_value(value)
        .map_err(|e| Error::Config(format!("malformed model file: {e}")))?;
    if file.schema.digest() != file.schema_digest {
        return Err(Error::SchemaMismatch(
            "stored schema digest does not match the stored schema".into(),
        ));
    }
    let learner =
        FittedLearner { spec: file.spec, n_features: file.n_features, params: file.params };
    learner.validate()?;
    let model = TrainedModel::new(learner, file.schema)?;
    Ok(model)
}
