//! Feature assembly: the unigram vocabulary and the three feature sets.
//!
//! The vocabulary is the sorted union of every character appearing in the
//! corpus' candidate strings; a domain's unigram vector holds a 0/1
//! presence indicator per vocabulary character.  The three approaches are
//! assembled from two ingredients:
//!
//! * `SsimOnly` — one column: the pair's mean per-character SSIM.
//! * `UnigramOnly` — λ columns: the candidate's presence indicators.
//! * `Combined` — 1 + λ columns: the SSIM scalar prepended to the unigram
//!   vector.
//!
//! A [`FeatureSchema`] pins everything a vector's meaning depends on —
//! mode, vocabulary, render configuration, SSIM stabilizers — and its
//! digest travels with feature vectors and trained models so mismatched
//! pipelines fail loudly instead of predicting garbage.

use serde::{Deserialize, Serialize};

use crate::datagen::LabeledSample;
use crate::error::{Error, Result};
use crate::exec;
use crate::matrix::Matrix;
use crate::render::GlyphSource;
use crate::sha256_hex;
use crate::similarity::{domain_ssim, SsimParams};

/// Corpus-wide character vocabulary (Eq.-3 style union).
///
/// `chars` is strictly ascending by codepoint, so position lookup is a
/// binary search and construction order cannot leak into the layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    chars: Vec<char>,
    /// Digest of the candidate multiset the vocabulary was built from.
    corpus_digest: String,
}

impl Vocabulary {
    /// Number of characters, λ.
    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    /// Column position of `c`, if in vocabulary.
    pub fn position_of(&self, c: char) -> Option<usize> {
        self.chars.binary_search(&c).ok()
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn corpus_digest(&self) -> &str {
        &self.corpus_digest
    }
}

/// Builds the vocabulary over the candidate strings of `samples`.
///
/// Candidates only: the discriminative characters (the confusables) occur
/// in candidates, and a predict-time pipeline has no brand list to extend
/// the vocabulary with.  The digest is order-independent.
pub fn build_vocabulary(samples: &[LabeledSample]) -> Result<Vocabulary> {
    if samples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut chars: Vec<char> =
        samples.iter().flat_map(|s| s.candidate.chars()).collect();
    chars.sort_unstable();
    chars.dedup();
    let mut candidates: Vec<&str> = samples.iter().map(|s| s.candidate.as_str()).collect();
    candidates.sort_unstable();
    let corpus_digest = sha256_hex(candidates.join("\n").as_bytes());
    Ok(Vocabulary { chars, corpus_digest })
}

/// Presence indicators of `domain` over the vocabulary (Eq.-4 style).
///
/// Out-of-vocabulary characters touch no position.
pub fn unigram_vector(domain: &str, vocab: &Vocabulary) -> Vec<f64> {
    let mut values = vec![0.0; vocab.len()];
    for c in domain.chars() {
        if let Some(i) = vocab.position_of(c) {
            values[i] = 1.0;
        }
    }
    values
}

/// Which feature set a pipeline uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    SsimOnly,
    UnigramOnly,
    Combined,
}

impl FeatureMode {
    pub fn uses_ssim(self) -> bool {
        matches!(self, FeatureMode::SsimOnly | FeatureMode::Combined)
    }

    pub fn uses_unigram(self) -> bool {
        matches!(self, FeatureMode::UnigramOnly | FeatureMode::Combined)
    }

    /// Stable lowercase name used on the CLI and in reports.
    pub fn name(self) -> &'static str {
        match self {
            FeatureMode::SsimOnly => "ssim",
            FeatureMode::UnigramOnly => "unigram",
            FeatureMode::Combined => "combined",
        }
    }
}

impl std::str::FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ssim" => Ok(FeatureMode::SsimOnly),
            "unigram" => Ok(FeatureMode::UnigramOnly),
            "combined" => Ok(FeatureMode::Combined),
            other => Err(Error::Config(format!(
                "unknown feature mode {other:?} (expected ssim, unigram, or combined)"
            ))),
        }
    }
}

/// Everything a feature vector's interpretation depends on.
///
/// The vocabulary travels with the schema when the mode uses unigram
/// columns; the render-config digest and SSIM stabilizers travel with it
/// when the mode uses the SSIM column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub mode: FeatureMode,
    pub vocabulary: Option<Vocabulary>,
    pub render_config_digest: Option<String>,
    pub ssim_params: Option<SsimParams>,
}

impl FeatureSchema {
    /// Assembles and validates a schema for `mode`.
    pub fn new(
        mode: FeatureMode,
        vocabulary: Option<Vocabulary>,
        render_config_digest: Option<String>,
        ssim_params: Option<SsimParams>,
    ) -> Result<Self> {
        let schema = FeatureSchema { mode, vocabulary, render_config_digest, ssim_params };
        schema.validate()?;
        Ok(schema)
    }

    /// Checks that the parts required by the mode are present (and the
    /// parts foreign to it absent).
    pub fn validate(&self) -> Result<()> {
        if self.mode.uses_unigram() && self.vocabulary.is_none() {
            return Err(Error::SchemaMismatch(format!(
                "mode {} requires a vocabulary",
                self.mode.name()
            )));
        }
        if !self.mode.uses_unigram() && self.vocabulary.is_some() {
            return Err(Error::SchemaMismatch("ssim-only schema carries a vocabulary".into()));
        }
        if self.mode.uses_ssim() && (self.ssim_params.is_none() || self.render_config_digest.is_none())
        {
            return Err(Error::SchemaMismatch(format!(
                "mode {} requires ssim_params and a render-config digest",
                self.mode.name()
            )));
        }
        if !self.mode.uses_ssim() && (self.ssim_params.is_some() || self.render_config_digest.is_some())
        {
            return Err(Error::SchemaMismatch(
                "unigram-only schema carries rendering parameters".into(),
            ));
        }
        if let Some(p) = &self.ssim_params {
            p.validate()?;
        }
        Ok(())
    }

    /// Feature-vector length: 1, λ, or 1 + λ.
    pub fn dimensionality(&self) -> usize {
        let unigram = self.vocabulary.as_ref().map_or(0, Vocabulary::len);
        let ssim = usize::from(self.mode.uses_ssim());
        ssim + unigram
    }

    /// Content digest; equal digests mean interchangeable vectors.
    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("schema serializes").as_bytes())
    }

    /// CSV/report column names in vector order: `ssim`, then `u+XXXX` per
    /// vocabulary character.
    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dimensionality());
        if self.mode.uses_ssim() {
            names.push("ssim".to_string());
        }
        if let Some(vocab) = &self.vocabulary {
            names.extend(vocab.chars().iter().map(|&c| format!("u+{:04X}", c as u32)));
        }
        names
    }
}

/// One featurized sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub schema_digest: String,
}

/// Schema plus the renderer it needs; the reusable featurizing context.
pub struct Featurizer<'a> {
    schema: &'a FeatureSchema,
    source: Option<&'a dyn GlyphSource>,
}

impl<'a> Featurizer<'a> {
    /// Binds a schema to an optional glyph source, checking coherence:
    /// SSIM-bearing modes need a source whose configuration digest matches
    /// the schema.
    pub fn new(schema: &'a FeatureSchema, source: Option<&'a dyn GlyphSource>) -> Result<Self> {
        schema.validate()?;
        if schema.mode.uses_ssim() {
            let source = source.ok_or_else(|| {
                Error::SchemaMismatch(format!(
                    "mode {} requires a glyph source",
                    schema.mode.name()
                ))
            })?;
            let expected = schema.render_config_digest.as_deref().expect("validated");
            if source.config_digest() != expected {
                return Err(Error::SchemaMismatch(format!(
                    "glyph source digest {} does not match schema digest {}",
                    source.config_digest(),
                    expected
                )));
            }
        }
        Ok(Featurizer { schema, source })
    }

    /// Mean SSIM of the pair, rendering through the bound source.
    fn mean_ssim(&self, sample: &LabeledSample) -> Result<f64> {
        let source = self.source.expect("checked in constructor");
        let params = self.schema.ssim_params.as_ref().expect("validated");
        Ok(domain_ssim(&sample.candidate, &sample.brand, source, params)?.mean_ssim)
    }

    /// Assembles the feature row, optionally reusing a precomputed mean
    /// SSIM (cross-validation computes each pair's SSIM exactly once).
    fn row(&self, sample: &LabeledSample, cached_ssim: Option<f64>) -> Result<Vec<f64>> {
        let mut values = Vec::with_capacity(self.schema.dimensionality());
        if self.schema.mode.uses_ssim() {
            let s = match cached_ssim {
                Some(s) => s,
                None => self.mean_ssim(sample)?,
            };
            values.push(s);
        }
        if let Some(vocab) = &self.schema.vocabulary {
            values.extend(unigram_vector(&sample.candidate, vocab));
        }
        Ok(values)
    }

    /// Featurizes one sample.
    pub fn featurize(&self, sample: &LabeledSample) -> Result<FeatureVector> {
        Ok(FeatureVector { values: self.row(sample, None)?, schema_digest: self.schema.digest() })
    }

    /// Featurizes a batch into a matrix, in sample order.
    ///
    /// `cached_mean_ssim`, when given, must align with `samples` and
    /// short-circuits rendering entirely.
    pub fn featurize_matrix(
        &self,
        samples: &[LabeledSample],
        cached_mean_ssim: Option<&[f64]>,
    ) -> Result<Matrix> {
        if let Some(cached) = cached_mean_ssim {
            if cached.len() != samples.len() {
                return Err(Error::LengthMismatch { left: cached.len(), right: samples.len() });
            }
        }
        let rows: Vec<Result<Vec<f64>>> = exec::map_indices(samples.len(), |i| {
            self.row(&samples[i], cached_mean_ssim.map(|c| c[i]))
        });
        let mut matrix = Matrix::with_cols(self.schema.dimensionality());
        for row in rows {
            matrix.push_row(&row?)?;
        }
        Ok(matrix)
    }
}

/// Writes the feature matrix as CSV: named feature columns, then `label`.
pub fn write_feature_csv(
    out: &mut dyn std::io::Write,
    schema: &FeatureSchema,
    matrix: &Matrix,
    labels: &[u8],
) -> Result<()> {
    if matrix.rows() != labels.len() {
        return Err(Error::LengthMismatch { left: matrix.rows(), right: labels.len() });
    }
    if matrix.cols() != schema.dimensionality() {
        return Err(Error::FeatureDimension {
            expected: schema.dimensionality(),
            found: matrix.cols(),
        });
    }
    let mut header = schema.column_names().join(",");
    header.push_str(",label");
    writeln!(out, "{header}")?;
    for (row, label) in matrix.iter_rows().zip(labels) {
        let mut line = String::new();
        for v in row {
            // Shortest round-trip formatting; integers print bare.
            if *v == v.trunc() && v.abs() < 1e15 {
                line.push_str(&format!("{}", *v as i64));
            } else {
                line.push_str(&format!("{v}"));
            }
            line.push(',');
        }
        line.push_str(&format!("{label}"));
        writeln!(out, "{line}")?;
    }
    Ok(())
}
