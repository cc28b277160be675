//! The `homograph` executable: corpus generation, featurization, training,
//! prediction, evaluation, and error analysis behind one command.
//!
//! Every run resolves one [`RunConfig`] with the precedence
//! built-in defaults < `--config` file < explicit flags, prints the
//! sha-256 digest of the resolved configuration to stderr, and stamps that
//! digest (plus the tool version) into everything it writes.  All
//! randomness is seeded through the configuration, so identical inputs
//! and configuration produce byte-identical outputs.
//!
//! Exit codes: 0 on success, 1 on a usage or configuration error, 2 on a
//! data or model error.  Expected failures print a one-line diagnostic.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use homograph_core::datagen::{
    decode_domain, generate_corpus, load_confusables, load_corpus, save_corpus, CorpusMeta,
    CorpusPlan, Label, LabeledSample, Origin,
};
use homograph_core::eval::{
    assemble_bin_samples, bin_equal_count, bin_equal_range, corpus_mean_ssim, cross_validate,
    extract_error_samples, figure_csv, range_group_indices, render_bin_table, render_error_table,
    render_metrics_table, BinReport, CrossValidation, ErrorSampleReport, Metrics, RangeGroup,
};
use homograph_core::features::{
    build_vocabulary, write_feature_csv, FeatureMode, FeatureSchema, Featurizer,
};
use homograph_core::learners::{
    load_model, save_model_with_digest, Algorithm, FittedLearner, LearnerSpec, TrainedModel,
};
use homograph_core::render::{GlyphRenderer, GlyphSource, RenderConfig};
use homograph_core::similarity::{domain_ssim, SsimParams};
use homograph_core::{
    bundled_brands_path, bundled_confusables_path, bundled_font_path, sha256_hex, TOOL_VERSION,
};

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

/// Visual homograph-domain detection toolkit.
#[derive(Parser)]
#[command(name = "homograph", version = TOOL_VERSION, max_term_width = 100)]
struct Cli {
    /// JSON run-configuration file; explicit flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Rendering of reports: machine JSON or aligned text columns.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled corpus of homograph and non-homograph candidates.
    Generate(GenerateArgs),
    /// Turn a corpus into a feature matrix (CSV).
    Featurize(FeaturizeArgs),
    /// Train a classifier on a full corpus and write the model file.
    Train(TrainArgs),
    /// Score candidate/brand pairs with a trained model (JSONL to stdout).
    Predict(PredictArgs),
    /// Cross-validate one or more feature approaches on a corpus.
    Evaluate(EvaluateArgs),
    /// Similarity-binned accuracy breakdown and per-range error listings.
    Analyze(AnalyzeArgs),
    /// Per-character and mean visual similarity of two domains.
    Ssim(SsimArgs),
}

/// Glyph-rendering and SSIM knobs shared by every rendering subcommand.
#[derive(Args)]
struct RenderFlags {
    /// Font file to rasterize with (repeatable; earlier fonts win).
    /// Defaults to the bundled DejaVu Sans.
    #[arg(long = "font", value_name = "PATH")]
    font: Vec<PathBuf>,

    /// Square glyph bitmap side in pixels.
    #[arg(long, value_name = "PX")]
    bitmap_side: Option<usize>,

    /// Grayscale depth of rendered glyphs (8 or 16).
    #[arg(long, value_name = "BITS")]
    bits_per_pixel: Option<u8>,

    /// Fraction of the bitmap side kept as margin on each edge.
    #[arg(long, value_name = "FRACTION")]
    padding_fraction: Option<f64>,

    /// SSIM luminance stabilizer coefficient.
    #[arg(long, value_name = "K1")]
    ssim_k1: Option<f64>,

    /// SSIM contrast stabilizer coefficient.
    #[arg(long, value_name = "K2")]
    ssim_k2: Option<f64>,
}

/// Classifier choice and hyperparameters.
#[derive(Args)]
struct LearnerFlags {
    /// Algorithm: decision_tree, random_forest, extra_trees, bagging,
    /// adaboost, gradient_boost, kneighbors, gaussian_nb, multinomial_nb,
    /// bernoulli_nb, or nearest_centroid.
    #[arg(long, value_name = "NAME")]
    algo: Option<String>,

    /// Ensemble size.
    #[arg(long, value_name = "N")]
    n_estimators: Option<usize>,

    /// Neighbor count for kneighbors (odd).
    #[arg(long, value_name = "K")]
    k_neighbors: Option<usize>,

    /// Depth cap for trees and ensemble members.
    #[arg(long, value_name = "DEPTH")]
    max_depth: Option<usize>,

    /// Gradient-boosting learning rate in (0, 1].
    #[arg(long, value_name = "RATE")]
    learning_rate: Option<f64>,

    /// Model-fitting seed.
    #[arg(long, value_name = "SEED")]
    model_seed: Option<u64>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Where to write the corpus (JSONL).
    #[arg(short, long, value_name = "PATH")]
    output: PathBuf,

    /// Brand-domain list, one per line. Defaults to the bundled list.
    #[arg(long, value_name = "PATH")]
    brands: Option<PathBuf>,

    /// Confusables table in the Unicode format. Defaults to the bundled table.
    #[arg(long, value_name = "PATH")]
    confusables: Option<PathBuf>,

    /// Homograph candidates per brand.
    #[arg(long, value_name = "N")]
    homographs_per_brand: Option<usize>,

    /// Non-homograph candidates per brand.
    #[arg(long, value_name = "N")]
    nonhomographs_per_brand: Option<usize>,

    /// Most confusable substitutions per homograph.
    #[arg(long, value_name = "N")]
    max_substitutions: Option<usize>,

    /// Corpus-generation seed.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct FeaturizeArgs {
    /// Input corpus (JSONL).
    #[arg(short, long, value_name = "PATH")]
    corpus: PathBuf,

    /// Feature approach: ssim, unigram, or combined.
    #[arg(short, long, value_name = "MODE", default_value = "combined")]
    mode: String,

    /// Where to write the feature matrix (CSV).
    #[arg(short, long, value_name = "PATH")]
    output: PathBuf,

    #[command(flatten)]
    render: RenderFlags,
}

#[derive(Args)]
struct TrainArgs {
    /// Input corpus (JSONL); the model trains on all of it.
    #[arg(short, long, value_name = "PATH")]
    corpus: PathBuf,

    /// Feature approach: ssim, unigram, or combined.
    #[arg(short, long, value_name = "MODE", default_value = "combined")]
    mode: String,

    /// Where to write the model (JSON).
    #[arg(short, long, value_name = "PATH")]
    output: PathBuf,

    #[command(flatten)]
    render: RenderFlags,

    #[command(flatten)]
    learner: LearnerFlags,
}

#[derive(Args)]
struct PredictArgs {
    /// Trained model file.
    #[arg(short, long, value_name = "PATH")]
    model: PathBuf,

    /// Candidate and brand domains, alternating: `cand brand [cand brand …]`.
    #[arg(value_name = "DOMAIN")]
    pairs: Vec<String>,

    /// Score every sample of this corpus instead of positional pairs.
    #[arg(long, value_name = "PATH", conflicts_with = "pairs")]
    corpus: Option<PathBuf>,

    /// Expected feature approach; fails if the model was trained otherwise.
    #[arg(long, value_name = "MODE")]
    mode: Option<String>,

    #[command(flatten)]
    render: RenderFlags,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Input corpus (JSONL).
    #[arg(short, long, value_name = "PATH")]
    corpus: PathBuf,

    /// Comma-separated feature approaches to compare.
    #[arg(long, value_name = "LIST", default_value = "ssim,unigram,combined")]
    modes: String,

    /// Fold count for cross-validation.
    #[arg(short = 'k', long, value_name = "K")]
    folds: Option<usize>,

    /// Fold-shuffle seed.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,

    /// Write the report here instead of stdout.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Override the algorithm for the ssim approach only.
    #[arg(long, value_name = "NAME")]
    ssim_algo: Option<String>,

    /// Override the algorithm for the unigram approach only.
    #[arg(long, value_name = "NAME")]
    unigram_algo: Option<String>,

    /// Override the algorithm for the combined approach only.
    #[arg(long, value_name = "NAME")]
    combined_algo: Option<String>,

    #[command(flatten)]
    render: RenderFlags,

    #[command(flatten)]
    learner: LearnerFlags,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input corpus (JSONL).
    #[arg(short, long, value_name = "PATH")]
    corpus: PathBuf,

    /// Fold count for cross-validation.
    #[arg(short = 'k', long, value_name = "K")]
    folds: Option<usize>,

    /// Fold-shuffle seed.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,

    /// Write the report here instead of stdout.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Also write the per-bin accuracy CSV (for plotting) here.
    #[arg(long, value_name = "PATH")]
    figure_csv: Option<PathBuf>,

    #[command(flatten)]
    render: RenderFlags,

    #[command(flatten)]
    learner: LearnerFlags,
}

#[derive(Args)]
struct SsimArgs {
    /// Candidate domain (Punycode accepted).
    candidate: String,

    /// Brand domain to compare against (Punycode accepted).
    brand: String,

    /// Compare the strings exactly as given, skipping IDN decoding.
    #[arg(long)]
    raw: bool,

    #[command(flatten)]
    render: RenderFlags,
}

// ---------------------------------------------------------------------------
// Run configuration: defaults < config file < flags
// ---------------------------------------------------------------------------

/// The fully resolved configuration a run executes under.  Serialized in
/// field order to compute the digest stamped into every output.
#[derive(Debug, Clone, Serialize)]
struct RunConfig {
    font_paths: Vec<PathBuf>,
    bitmap_side: usize,
    bits_per_pixel: u8,
    padding_fraction: f64,
    ssim_k1: f64,
    ssim_k2: f64,
    algo: String,
    n_estimators: usize,
    k_neighbors: usize,
    max_depth: Option<usize>,
    learning_rate: f64,
    model_seed: u64,
    folds: usize,
    fold_seed: u64,
    corpus_seed: u64,
    homographs_per_brand: usize,
    nonhomographs_per_brand: usize,
    max_substitutions: usize,
    brands_path: Option<PathBuf>,
    confusables_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            font_paths: Vec::new(),
            bitmap_side: 64,
            bits_per_pixel: 8,
            padding_fraction: 0.125,
            ssim_k1: 0.01,
            ssim_k2: 0.03,
            algo: "bagging".to_string(),
            n_estimators: 100,
            k_neighbors: 5,
            max_depth: None,
            learning_rate: 0.1,
            model_seed: 42,
            folds: 5,
            fold_seed: 7,
            corpus_seed: 7,
            homographs_per_brand: 15,
            nonhomographs_per_brand: 29,
            max_substitutions: 6,
            brands_path: None,
            confusables_path: None,
        }
    }
}

/// The config-file view of [`RunConfig`]: every field optional, unknown
/// keys rejected so typos fail loudly.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    font_paths: Option<Vec<PathBuf>>,
    bitmap_side: Option<usize>,
    bits_per_pixel: Option<u8>,
    padding_fraction: Option<f64>,
    ssim_k1: Option<f64>,
    ssim_k2: Option<f64>,
    algo: Option<String>,
    n_estimators: Option<usize>,
    k_neighbors: Option<usize>,
    max_depth: Option<usize>,
    learning_rate: Option<f64>,
    model_seed: Option<u64>,
    folds: Option<usize>,
    fold_seed: Option<u64>,
    corpus_seed: Option<u64>,
    homographs_per_brand: Option<usize>,
    nonhomographs_per_brand: Option<usize>,
    max_substitutions: Option<usize>,
    brands_path: Option<PathBuf>,
    confusables_path: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:expr, $src:expr, { $($field:ident),+ $(,)? }) => {
        $( if let Some(v) = $src.$field { $dst.$field = v; } )+
    };
}

impl RunConfig {
    fn apply_file(&mut self, file: ConfigFile) {
        overlay!(self, file, {
            font_paths,
            bitmap_side,
            bits_per_pixel,
            padding_fraction,
            ssim_k1,
            ssim_k2,
            algo,
            n_estimators,
            k_neighbors,
            learning_rate,
            model_seed,
            folds,
            fold_seed,
            corpus_seed,
            homographs_per_brand,
            nonhomographs_per_brand,
            max_substitutions,
        });
        // Option-valued settings: present in the file means set.
        if file.max_depth.is_some() {
            self.max_depth = file.max_depth;
        }
        if file.brands_path.is_some() {
            self.brands_path = file.brands_path;
        }
        if file.confusables_path.is_some() {
            self.confusables_path = file.confusables_path;
        }
    }

    fn apply_render(&mut self, flags: &RenderFlags) {
        if !flags.font.is_empty() {
            self.font_paths = flags.font.clone();
        }
        overlay!(self, flags, { bitmap_side, bits_per_pixel, padding_fraction, ssim_k1, ssim_k2 });
    }

    fn apply_learner(&mut self, flags: &LearnerFlags) {
        if let Some(algo) = &flags.algo {
            self.algo = algo.clone();
        }
        overlay!(self, flags, { n_estimators, k_neighbors, learning_rate, model_seed });
        if flags.max_depth.is_some() {
            self.max_depth = flags.max_depth;
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.bits_per_pixel != 8 && self.bits_per_pixel != 16 {
            return Err(CliError::Usage(format!(
                "bits_per_pixel must be 8 or 16, got {}",
                self.bits_per_pixel
            )));
        }
        if self.folds < 2 {
            return Err(CliError::Usage(format!(
                "cross-validation needs at least 2 folds, got {}",
                self.folds
            )));
        }
        self.ssim_params().map(|_| ())
    }

    fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    fn render_config(&self) -> RenderConfig {
        let mut fonts = self.font_paths.clone();
        if fonts.is_empty() {
            fonts.push(bundled_font_path());
        }
        let level = ((1u32 << self.bits_per_pixel) - 1) as u16;
        RenderConfig {
            bitmap_side: self.bitmap_side,
            bits_per_pixel: self.bits_per_pixel,
            font_sources: fonts,
            background_level: 0,
            foreground_level: level,
            padding_fraction: self.padding_fraction,
        }
    }

    fn ssim_params(&self) -> Result<SsimParams, CliError> {
        let level = f64::from((1u32 << self.bits_per_pixel) - 1);
        SsimParams::new(self.ssim_k1, self.ssim_k2, level)
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    fn learner_spec(&self, algo_override: Option<&str>) -> Result<LearnerSpec, CliError> {
        let name = algo_override.unwrap_or(&self.algo);
        let algorithm: Algorithm =
            name.parse().map_err(|e: homograph_core::error::Error| {
                CliError::Usage(e.to_string())
            })?;
        let mut spec = LearnerSpec::new(algorithm);
        spec.n_estimators = self.n_estimators;
        spec.k_neighbors = self.k_neighbors;
        spec.max_depth = self.max_depth;
        spec.learning_rate = self.learning_rate;
        spec.rng_seed = self.model_seed;
        spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(spec)
    }

    fn brands(&self) -> Result<Vec<String>, CliError> {
        let path = self.brands_path.clone().unwrap_or_else(bundled_brands_path);
        let text = std::fs::read_to_string(&path).map_err(|e| {
            CliError::Data(format!("brand list {}: {e}", path.display()))
        })?;
        let brands: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        if brands.is_empty() {
            return Err(CliError::Data(format!(
                "brand list {} contains no domains",
                path.display()
            )));
        }
        Ok(brands)
    }
}

// ---------------------------------------------------------------------------
// Error handling and exit codes
// ---------------------------------------------------------------------------

enum CliError {
    /// Bad flags or configuration: exit code 1.
    Usage(String),
    /// Bad data or model inputs, or a failed pipeline stage: exit code 2.
    Data(String),
}

impl From<homograph_core::error::Error> for CliError {
    fn from(e: homograph_core::error::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests land here too; they are not errors.
            let code = if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        let file: ConfigFile = serde_json::from_str(&text).map_err(|e| {
            CliError::Usage(format!("config {}: {e}", path.display()))
        })?;
        config.apply_file(file);
    }
    match cli.command {
        Command::Generate(args) => cmd_generate(config, args),
        Command::Featurize(args) => cmd_featurize(config, args),
        Command::Train(args) => cmd_train(config, args),
        Command::Predict(args) => cmd_predict(config, args),
        Command::Evaluate(args) => cmd_evaluate(config, args, cli.format),
        Command::Analyze(args) => cmd_analyze(config, args, cli.format),
        Command::Ssim(args) => cmd_ssim(config, args),
    }
}

/// Finalizes the configuration: validates it, announces its digest, and
/// hands both back.
fn seal(config: RunConfig) -> Result<(RunConfig, String), CliError> {
    config.validate()?;
    let digest = config.digest();
    eprintln!("resolved-config digest: {digest}");
    Ok((config, digest))
}

/// Attaches the offending path to a load error's diagnostic.
fn load_context<T>(
    result: homograph_core::error::Result<T>,
    what: &str,
    path: &Path,
) -> Result<T, CliError> {
    result.map_err(|e| CliError::Data(format!("{what} {}: {e}", path.display())))
}

fn read_corpus(path: &Path) -> Result<Vec<LabeledSample>, CliError> {
    load_context(load_corpus(path), "corpus", path)
}

fn write_or_stdout(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(path) => {
            std::fs::write(path, content)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_generate(mut config: RunConfig, args: GenerateArgs) -> Result<(), CliError> {
    overlay!(config, args, {
        homographs_per_brand,
        nonhomographs_per_brand,
        max_substitutions,
    });
    if let Some(seed) = args.seed {
        config.corpus_seed = seed;
    }
    if args.brands.is_some() {
        config.brands_path = args.brands;
    }
    if args.confusables.is_some() {
        config.confusables_path = args.confusables;
    }
    let (config, digest) = seal(config)?;
    let brands = config.brands()?;
    let confusables_path =
        config.confusables_path.clone().unwrap_or_else(bundled_confusables_path);
    let table = load_context(
        load_confusables(&confusables_path),
        "confusables table",
        &confusables_path,
    )?;
    let plan = CorpusPlan {
        homographs_per_brand: config.homographs_per_brand,
        nonhomographs_per_brand: config.nonhomographs_per_brand,
        max_substitutions: config.max_substitutions,
        seed: config.corpus_seed,
    };
    let samples = generate_corpus(&brands, &table, &plan)?;
    let meta =
        CorpusMeta { tool_version: TOOL_VERSION.to_string(), config_digest: digest };
    save_corpus(&samples, &args.output, Some(&meta))?;
    let homographs = samples.iter().filter(|s| s.label == Label::Homograph).count();
    eprintln!(
        "wrote {} ({} samples: {} homographs, {} non-homographs, {} brands)",
        args.output.display(),
        samples.len(),
        homographs,
        samples.len() - homographs,
        brands.len()
    );
    Ok(())
}

/// Builds the feature schema a corpus needs under `mode`.
fn schema_for(
    config: &RunConfig,
    mode: FeatureMode,
    samples: &[LabeledSample],
    renderer: Option<&GlyphRenderer>,
) -> Result<FeatureSchema, CliError> {
    let vocabulary =
        if mode.uses_unigram() { Some(build_vocabulary(samples)?) } else { None };
    let (render_digest, params) = if mode.uses_ssim() {
        let renderer = renderer.expect("ssim modes carry a renderer");
        (Some(renderer.config_digest().to_string()), Some(config.ssim_params()?))
    } else {
        (None, None)
    };
    FeatureSchema::new(mode, vocabulary, render_digest, params).map_err(CliError::from)
}

fn parse_mode(name: &str) -> Result<FeatureMode, CliError> {
    name.parse::<FeatureMode>().map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_featurize(mut config: RunConfig, args: FeaturizeArgs) -> Result<(), CliError> {
    config.apply_render(&args.render);
    let (config, digest) = seal(config)?;
    let mode = parse_mode(&args.mode)?;
    let samples = read_corpus(&args.corpus)?;
    let renderer = if mode.uses_ssim() {
        Some(GlyphRenderer::new(config.render_config())?)
    } else {
        None
    };
    let schema = schema_for(&config, mode, &samples, renderer.as_ref())?;
    let featurizer =
        Featurizer::new(&schema, renderer.as_ref().map(|r| r as &dyn GlyphSource))?;
    let matrix = featurizer.featurize_matrix(&samples, None)?;
    let labels: Vec<u8> = samples.iter().map(|s| s.label.as_binary()).collect();
    let file = std::fs::File::create(&args.output)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.output.display())))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "# tool_version: {TOOL_VERSION}")?;
    writeln!(out, "# config_digest: {digest}")?;
    writeln!(out, "# schema_digest: {}", schema.digest())?;
    write_feature_csv(&mut out, &schema, &matrix, &labels)?;
    out.flush()?;
    eprintln!(
        "wrote {} ({} rows x {} feature columns)",
        args.output.display(),
        matrix.rows(),
        matrix.cols()
    );
    Ok(())
}

fn cmd_train(mut config: RunConfig, args: TrainArgs) -> Result<(), CliError> {
    config.apply_render(&args.render);
    config.apply_learner(&args.learner);
    let (config, digest) = seal(config)?;
    let mode = parse_mode(&args.mode)?;
    let spec = config.learner_spec(None)?;
    let samples = read_corpus(&args.corpus)?;
    let renderer = if mode.uses_ssim() {
        Some(GlyphRenderer::new(config.render_config())?)
    } else {
        None
    };
    let schema = schema_for(&config, mode, &samples, renderer.as_ref())?;
    let featurizer =
        Featurizer::new(&schema, renderer.as_ref().map(|r| r as &dyn GlyphSource))?;
    let matrix = featurizer.featurize_matrix(&samples, None)?;
    let labels: Vec<u8> = samples.iter().map(|s| s.label.as_binary()).collect();
    let learner = FittedLearner::fit(&spec, &matrix, &labels)?;
    let model = TrainedModel::new(learner, schema)?;
    save_model_with_digest(&model, &args.output, Some(&digest))?;
    eprintln!(
        "wrote {} ({} on {} samples, {} features)",
        args.output.display(),
        spec.algorithm,
        samples.len(),
        matrix.cols()
    );
    Ok(())
}

#[derive(Serialize)]
struct PredictionLine<'a> {
    candidate: &'a str,
    brand: &'a str,
    label: Label,
    prediction: u8,
    score: f64,
}

fn cmd_predict(mut config: RunConfig, args: PredictArgs) -> Result<(), CliError> {
    config.apply_render(&args.render);
    let (config, digest) = seal(config)?;
    let model = load_context(load_model(&args.model), "model", &args.model)?;
    if let Some(mode) = &args.mode {
        let requested = parse_mode(mode)?;
        if requested != model.schema.mode {
            return Err(CliError::Data(format!(
                "feature schema mismatch: the model was trained for the {} approach, \
                 but {} was requested",
                model.schema.mode.name(),
                requested.name()
            )));
        }
    }
    // Assemble the pairs to score.
    let samples: Vec<LabeledSample> = if let Some(path) = &args.corpus {
        read_corpus(path)?
    } else {
        if args.pairs.is_empty() {
            return Err(CliError::Usage(
                "nothing to score: give candidate/brand pairs or --corpus".to_string(),
            ));
        }
        if args.pairs.len() % 2 != 0 {
            return Err(CliError::Usage(format!(
                "domains come in candidate/brand pairs, got {} names",
                args.pairs.len()
            )));
        }
        args.pairs
            .chunks(2)
            .map(|pair| {
                Ok(LabeledSample {
                    candidate: decode_domain(&pair[0])?,
                    brand: decode_domain(&pair[1])?,
                    label: Label::NonHomograph, // placeholder; never reported
                    origin: Origin::External,
                })
            })
            .collect::<Result<_, homograph_core::error::Error>>()?
    };
    // The model's stored schema decides how to featurize; the renderer must
    // reproduce the training render configuration or the digest check fails.
    let renderer = if model.schema.mode.uses_ssim() {
        Some(GlyphRenderer::new(config.render_config())?)
    } else {
        None
    };
    let featurizer =
        Featurizer::new(&model.schema, renderer.as_ref().map(|r| r as &dyn GlyphSource))?;
    let matrix = featurizer.featurize_matrix(&samples, None)?;
    let scores = model.predict_score(&matrix)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let meta = serde_json::json!({
        "_meta": {
            "tool_version": TOOL_VERSION,
            "config_digest": digest,
            "model_schema_digest": model.schema.digest(),
        }
    });
    writeln!(out, "{meta}")?;
    for (sample, &score) in samples.iter().zip(&scores) {
        let prediction = u8::from(score >= 0.5);
        let line = PredictionLine {
            candidate: &sample.candidate,
            brand: &sample.brand,
            label: Label::from_binary(prediction),
            prediction,
            score,
        };
        writeln!(out, "{}", serde_json::to_string(&line).expect("line serializes"))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EvaluateRow {
    mode: String,
    algorithm: String,
    metrics: Metrics,
}

#[derive(Serialize)]
struct EvaluateReport {
    tool_version: String,
    config_digest: String,
    corpus: String,
    samples: usize,
    homographs: usize,
    non_homographs: usize,
    folds: usize,
    fold_seed: u64,
    rows: Vec<EvaluateRow>,
}

/// Cross-validates `modes` (with per-mode learner specs) over one corpus,
/// reusing a single mean-SSIM pass for every mode that needs one.
fn run_modes(
    config: &RunConfig,
    samples: &[LabeledSample],
    modes: &[(FeatureMode, LearnerSpec)],
) -> Result<(Vec<CrossValidation>, Option<Vec<f64>>, Option<GlyphRenderer>), CliError> {
    let needs_ssim = modes.iter().any(|(m, _)| m.uses_ssim());
    let (renderer, params, mean_ssim) = if needs_ssim {
        let renderer = GlyphRenderer::new(config.render_config())?;
        let params = config.ssim_params()?;
        let mean = corpus_mean_ssim(samples, &renderer, &params)?;
        (Some(renderer), Some(params), Some(mean))
    } else {
        (None, None, None)
    };
    let mut runs = Vec::new();
    for (mode, spec) in modes {
        let cv = cross_validate(
            samples,
            *mode,
            renderer.as_ref().map(|r| r as &dyn GlyphSource),
            params.as_ref(),
            mean_ssim.as_deref(),
            spec,
            config.folds,
            config.fold_seed,
        )?;
        runs.push(cv);
    }
    Ok((runs, mean_ssim, renderer))
}

fn cmd_evaluate(mut config: RunConfig, args: EvaluateArgs, format: Format) -> Result<(), CliError> {
    config.apply_render(&args.render);
    config.apply_learner(&args.learner);
    if let Some(folds) = args.folds {
        config.folds = folds;
    }
    if let Some(seed) = args.seed {
        config.fold_seed = seed;
    }
    let (config, digest) = seal(config)?;
    let mode_names: Vec<&str> =
        args.modes.split(',').map(str::trim).filter(|m| !m.is_empty()).collect();
    if mode_names.is_empty() {
        return Err(CliError::Usage("--modes lists no feature approach".to_string()));
    }
    let mut modes = Vec::new();
    for name in &mode_names {
        let mode = parse_mode(name)?;
        let algo_override = match mode {
            FeatureMode::SsimOnly => args.ssim_algo.as_deref(),
            FeatureMode::UnigramOnly => args.unigram_algo.as_deref(),
            FeatureMode::Combined => args.combined_algo.as_deref(),
        };
        modes.push((mode, config.learner_spec(algo_override)?));
    }
    let samples = read_corpus(&args.corpus)?;
    let homographs = samples.iter().filter(|s| s.label == Label::Homograph).count();
    let (runs, _, _) = run_modes(&config, &samples, &modes)?;
    let rows: Vec<EvaluateRow> = modes
        .iter()
        .zip(&runs)
        .map(|((mode, spec), cv)| EvaluateRow {
            mode: mode.name().to_string(),
            algorithm: spec.algorithm.name().to_string(),
            metrics: cv.overall,
        })
        .collect();
    let report = EvaluateReport {
        tool_version: TOOL_VERSION.to_string(),
        config_digest: digest,
        corpus: args.corpus.display().to_string(),
        samples: samples.len(),
        homographs,
        non_homographs: samples.len() - homographs,
        folds: config.folds,
        fold_seed: config.fold_seed,
        rows,
    };
    let content = match format {
        Format::Json => pretty_json(&report),
        Format::Table => {
            let labeled: Vec<(String, Metrics)> = report
                .rows
                .iter()
                .map(|r| (format!("{} / {}", r.mode, r.algorithm), r.metrics))
                .collect();
            format!(
                "corpus {} ({} samples) — {}-fold cross-validation, seed {}\n\
                 tool {} config {}\n\n{}",
                report.corpus,
                report.samples,
                report.folds,
                report.fold_seed,
                report.tool_version,
                report.config_digest,
                render_metrics_table(&labeled)
            )
        }
    };
    write_or_stdout(args.output.as_deref(), &content)
}

#[derive(Serialize)]
struct AnalysisReport {
    tool_version: String,
    config_digest: String,
    corpus: String,
    samples: usize,
    folds: usize,
    fold_seed: u64,
    algorithm: String,
    metrics: Vec<EvaluateRow>,
    equal_count_bins: BinReport,
    equal_range_bins: BinReport,
    error_reports: Vec<ErrorSampleReport>,
}

fn cmd_analyze(mut config: RunConfig, args: AnalyzeArgs, format: Format) -> Result<(), CliError> {
    config.apply_render(&args.render);
    config.apply_learner(&args.learner);
    if let Some(folds) = args.folds {
        config.folds = folds;
    }
    if let Some(seed) = args.seed {
        config.fold_seed = seed;
    }
    let (config, digest) = seal(config)?;
    let spec = config.learner_spec(None)?;
    let modes = vec![
        (FeatureMode::SsimOnly, spec.clone()),
        (FeatureMode::UnigramOnly, spec.clone()),
        (FeatureMode::Combined, spec.clone()),
    ];
    let samples = read_corpus(&args.corpus)?;
    let (runs, mean_ssim, renderer) = run_modes(&config, &samples, &modes)?;
    let mean_ssim = mean_ssim.expect("ssim approach always runs here");
    let renderer = renderer.expect("ssim approach always runs here");
    let params = config.ssim_params()?;
    let bin_samples =
        assemble_bin_samples(&samples, &mean_ssim, &runs[0], &runs[1], &runs[2])?;
    let equal_count_bins = bin_equal_count(&bin_samples, 10)?;
    let equal_range_bins = bin_equal_range(&bin_samples, 10)?;
    // Per similarity-range group, list each single-feature approach's
    // mistakes that the other approach avoids, and count how many of them
    // the combined approach repairs.
    let groups = range_group_indices(&bin_samples)?;
    let mut error_reports = Vec::new();
    for (group, indices) in
        [RangeGroup::Low, RangeGroup::Mid, RangeGroup::High].iter().zip(&groups)
    {
        for (a, b) in [(0usize, 1usize), (1, 0)] {
            let names = ["ssim", "unigram"];
            error_reports.push(extract_error_samples(
                *group,
                names[a],
                names[b],
                indices,
                &samples,
                &mean_ssim,
                &runs[a].oof_predictions,
                &runs[b].oof_predictions,
                &runs[2].oof_predictions,
                &renderer,
                &params,
            )?);
        }
    }
    let metrics: Vec<EvaluateRow> = modes
        .iter()
        .zip(&runs)
        .map(|((mode, spec), cv)| EvaluateRow {
            mode: mode.name().to_string(),
            algorithm: spec.algorithm.name().to_string(),
            metrics: cv.overall,
        })
        .collect();
    let report = AnalysisReport {
        tool_version: TOOL_VERSION.to_string(),
        config_digest: digest.clone(),
        corpus: args.corpus.display().to_string(),
        samples: samples.len(),
        folds: config.folds,
        fold_seed: config.fold_seed,
        algorithm: spec.algorithm.name().to_string(),
        metrics,
        equal_count_bins,
        equal_range_bins,
        error_reports,
    };
    if let Some(path) = &args.figure_csv {
        let mut csv = format!("# tool_version: {TOOL_VERSION}\n# config_digest: {digest}\n");
        csv.push_str(&figure_csv(&report.equal_count_bins));
        std::fs::write(path, csv)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        eprintln!("wrote {}", path.display());
    }
    let content = match format {
        Format::Json => pretty_json(&report),
        Format::Table => {
            let labeled: Vec<(String, Metrics)> = report
                .metrics
                .iter()
                .map(|r| (format!("{} / {}", r.mode, r.algorithm), r.metrics))
                .collect();
            let mut text = format!(
                "corpus {} ({} samples) — {}-fold cross-validation, seed {}\n\
                 tool {} config {}\n\n{}\n",
                report.corpus,
                report.samples,
                report.folds,
                report.fold_seed,
                report.tool_version,
                report.config_digest,
                render_metrics_table(&labeled)
            );
            text.push_str("\nequal-count bins\n");
            text.push_str(&render_bin_table(&report.equal_count_bins));
            text.push_str("\nequal-range bins\n");
            text.push_str(&render_bin_table(&report.equal_range_bins));
            for er in &report.error_reports {
                text.push('\n');
                text.push_str(&render_error_table(er));
            }
            text
        }
    };
    write_or_stdout(args.output.as_deref(), &content)
}

#[derive(Serialize)]
struct SsimReport {
    tool_version: String,
    config_digest: String,
    candidate: String,
    brand: String,
    mean_ssim: f64,
    per_char_ssim: Vec<f64>,
    diff_positions: Vec<usize>,
    char_diff_ratio: Option<f64>,
}

fn cmd_ssim(mut config: RunConfig, args: SsimArgs) -> Result<(), CliError> {
    config.apply_render(&args.render);
    let (config, digest) = seal(config)?;
    let (candidate, brand) = if args.raw {
        (args.candidate.clone(), args.brand.clone())
    } else {
        (decode_domain(&args.candidate)?, decode_domain(&args.brand)?)
    };
    let renderer = GlyphRenderer::new(config.render_config())?;
    let params = config.ssim_params()?;
    let similarity = domain_ssim(&candidate, &brand, &renderer, &params)?;
    let report = SsimReport {
        tool_version: TOOL_VERSION.to_string(),
        config_digest: digest,
        candidate: similarity.candidate.clone(),
        brand: similarity.brand.clone(),
        mean_ssim: similarity.mean_ssim,
        char_diff_ratio: similarity.char_diff_ratio().ok(),
        per_char_ssim: similarity.per_char_ssim,
        diff_positions: similarity.diff_positions,
    };
    print!("{}", pretty_json(&report));
    Ok(())
}
