//! One error type for the whole crate.
//!
//! Every fallible operation returns [`Result`].  Variants are grouped by the
//! stage that raises them; the CLI maps any of these to exit code 2.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A font file could not be read or parsed.
    #[error("font {path}: {reason}")]
    FontLoad { path: String, reason: String },

    /// A configuration value violates its documented invariants.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Two bitmaps passed to SSIM have different sides.
    #[error("bitmap dimension mismatch: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },

    /// `char_diff_ratio` was asked for a pair whose strings have different
    /// lengths, where no per-character alignment exists.
    #[error("character-difference ratio is undefined for length-mismatched domains")]
    UndefinedForLengthMismatch,

    /// A confusables-table line could not be parsed.
    #[error("confusables line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// A punycode label failed to decode.
    #[error("punycode label {label:?}: {reason}")]
    Punycode { label: String, reason: String },

    /// Homograph generation was requested for a brand none of whose
    /// substitutable characters appears in the confusables table.
    #[error("no character of {brand:?} outside the TLD has a confusable mapping")]
    NoConfusableCoverage { brand: String },

    /// Filesystem failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A corpus line is not a valid labeled sample.
    #[error("corpus line {line}: {reason}")]
    Schema { line: usize, reason: String },

    /// An operation that needs at least one sample got none.
    #[error("corpus contains no samples")]
    EmptyCorpus,

    /// Training data contains a single class; no decision boundary exists.
    #[error("training labels contain a single class")]
    DegenerateLabels,

    /// A feature matrix has the wrong number of columns for the model.
    #[error("feature matrix has {found} columns, model expects {expected}")]
    FeatureDimension { expected: usize, found: usize },

    /// A model file declares an unsupported format version.
    #[error("unsupported model format version {found} (this build reads {supported})")]
    Version { found: u32, supported: u32 },

    /// Feature schemas that must agree do not.
    #[error("feature schema mismatch: {0}")]
    SchemaMismatch(String),

    /// The fold count is unusable for the given corpus.
    #[error("cannot split {n} samples into {k} folds: {reason}")]
    InvalidK { k: usize, n: usize, reason: String },

    /// Paired slices (labels vs. predictions) have different lengths.
    #[error("paired sequences have lengths {left} and {right}")]
    LengthMismatch { left: usize, right: usize },

    /// An aggregate operation received an empty input slice.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
}
