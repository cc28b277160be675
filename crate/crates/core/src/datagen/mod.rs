//! Labeled-corpus generation and domain normalization.
//!
//! A corpus is a list of (candidate, brand) pairs labeled homograph or
//! non-homograph.  Homographs come from seeded confusable-character
//! substitution against a brand list; non-homographs come from seeded
//! dissimilar mutation — either heavy character replacement at preserved
//! length or a length change, which the similarity module scores as 0 by
//! definition.  Everything is a pure function of (inputs, seed), so
//! corpora regenerate byte-identically.
//!
//! Incoming domains are normalized once, up front: `xn--` labels are
//! Punycode-decoded, the result is NFC-normalized and lowercased.  All
//! downstream comparison operates on the normalized form.

mod confusables;
pub mod punycode;

use std::collections::BTreeSet;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

pub use confusables::{load_confusables, parse_confusables, ConfusablesTable, TableProvenance};

use crate::error::{Error, Result};
use crate::exec::derive_seed;

/// Classification target. The positive class is [`Label::Homograph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Homograph,
    NonHomograph,
}

impl Label {
    /// Binary encoding used by the learners; homograph = 1.
    pub fn as_binary(self) -> u8 {
        match self {
            Label::Homograph => 1,
            Label::NonHomograph => 0,
        }
    }

    pub fn from_binary(bit: u8) -> Self {
        if bit == 1 {
            Label::Homograph
        } else {
            Label::NonHomograph
        }
    }
}

/// How a sample entered the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Generated by confusable-character substitution.
    ConfusableSub,
    /// Generated by dissimilar mutation.
    DissimilarMut,
    /// Imported from outside the generator (hand-labeled data).
    External,
}

/// One labeled candidate/brand pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub candidate: String,
    pub brand: String,
    pub label: Label,
    pub origin: Origin,
}

impl LabeledSample {
    /// Structural validity; violated rows are rejected at corpus load.
    fn check(&self) -> std::result::Result<(), String> {
        if self.candidate == self.brand {
            return Err("candidate equals brand".into());
        }
        if self.label == Label::Homograph && self.origin == Origin::DissimilarMut {
            return Err("homograph labels cannot originate from dissimilar mutation".into());
        }
        Ok(())
    }
}

/// Decodes `xn--` labels, NFC-normalizes, and lowercases a raw domain.
pub fn decode_domain(raw: &str) -> Result<String> {
    let mut labels = Vec::new();
    for label in raw.split('.') {
        let bytes = label.as_bytes();
        let is_encoded = bytes.len() >= 4 && bytes[..4].eq_ignore_ascii_case(b"xn--");
        if is_encoded {
            let decoded = punycode::decode(&label[4..]).map_err(|reason| Error::Punycode {
                label: label.to_string(),
                reason,
            })?;
            labels.push(decoded);
        } else {
            labels.push(label.to_string());
        }
    }
    let joined = labels.join(".");
    let normalized: String = joined.nfc().collect();
    Ok(normalized.chars().flat_map(char::to_lowercase).collect())
}

/// Index of the character that starts the TLD label (the last dot), or the
/// string length when there is no dot.  Characters at or past this index
/// are never substituted.
fn tld_start(chars: &[char]) -> usize {
    chars.iter().rposition(|&c| c == '.').unwrap_or(chars.len())
}

/// Generates up to `budget` distinct homograph candidates for one brand.
///
/// Each candidate substitutes 1..=`max_substitutions` positions (before
/// the TLD) with confusables drawn from the table; positions and
/// replacements come from a seeded generator, so equal inputs give equal
/// output lists.
pub fn generate_homographs(
    brand: &str,
    table: &ConfusablesTable,
    max_substitutions: usize,
    budget: usize,
    rng_seed: u64,
) -> Result<Vec<LabeledSample>> {
    let chars: Vec<char> = brand.chars().collect();
    let substitutable: Vec<usize> =
        (0..tld_start(&chars)).filter(|&i| table.contains(chars[i])).collect();
    if substitutable.is_empty() {
        return Err(Error::NoConfusableCoverage { brand: brand.to_string() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::with_capacity(budget);
    let mut seen = BTreeSet::new();
    // The distinct-candidate space can be smaller than the budget; a
    // bounded number of attempts keeps generation total.
    let attempts = budget.saturating_mul(30).max(128);
    for _ in 0..attempts {
        if out.len() == budget {
            break;
        }
        let count = rng.random_range(1..=max_substitutions.min(substitutable.len()).max(1));
        let picks = rand::seq::index::sample(&mut rng, substitutable.len(), count);
        let mut mutated = chars.clone();
        for pick in picks {
            let pos = substitutable[pick];
            let options = table.confusables_of(chars[pos]).expect("position pre-filtered");
            // BTreeSet iteration is ordered, so the nth choice is stable.
            let chosen = rng.random_range(0..options.len());
            mutated[pos] = *options.iter().nth(chosen).expect("index in range");
        }
        let candidate: String = mutated.into_iter().collect();
        if candidate != brand && seen.insert(candidate.clone()) {
            out.push(LabeledSample {
                candidate,
                brand: brand.to_string(),
                label: Label::Homograph,
                origin: Origin::ConfusableSub,
            });
        }
    }
    Ok(out)
}

/// ASCII characters that casually pass for each other; dissimilar mutation
/// must not use these as replacements or the result would be a homograph
/// in disguise.
fn ascii_lookalikes(c: char) -> &'static [char] {
    match c {
        'o' => &['0'],
        '0' => &['o'],
        'l' => &['1', 'i'],
        '1' => &['l', 'i'],
        'i' => &['1', 'l'],
        's' => &['5'],
        '5' => &['s'],
        'z' => &['2'],
        '2' => &['z'],
        'g' => &['9', 'q'],
        '9' => &['g', 'q'],
        'q' => &['g', '9'],
        'b' => &['8', '6'],
        '8' => &['b'],
        '6' => &['b'],
        _ => &[],
    }
}

const ALNUM: &[char] = &[
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r',
    's', 't', 'u', 'v', 'w', 'x', 'y', 'z', '0', '1', '2', '3', '4', '5', '6', '7', '8', '9',
];

/// Generates `count` distinct non-homograph candidates for one brand.
///
/// Two modes, chosen per candidate by the seeded generator: (a) preserve
/// length but replace enough name characters — at least 40% of the whole
/// domain when the name is long enough to allow it — with alphanumerics
/// that are neither the original nor a look-alike of it; (b) change
/// length, replacing the name with a fresh random one of different length.
pub fn generate_nonhomographs(brand: &str, count: usize, rng_seed: u64) -> Vec<LabeledSample> {
    let chars: Vec<char> = brand.chars().collect();
    let name_end = tld_start(&chars);
    let name_positions: Vec<usize> = (0..name_end).filter(|&i| chars[i] != '.').collect();
    let tld_suffix: String = chars[name_end..].iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::with_capacity(count);
    let mut seen = BTreeSet::new();
    let attempts = count.saturating_mul(30).max(128);
    for _ in 0..attempts {
        if out.len() == count {
            break;
        }
        let length_preserving = rng.random_bool(0.5) && !name_positions.is_empty();
        let candidate = if length_preserving {
            // Replace at least 40% of the full string's characters so the
            // difference ratio stays high even counting the unchanged TLD.
            let floor = ((0.4 * chars.len() as f64).ceil() as usize)
                .clamp(1, name_positions.len());
            let k = rng.random_range(floor..=name_positions.len());
            let picks = rand::seq::index::sample(&mut rng, name_positions.len(), k);
            let mut mutated = chars.clone();
            for pick in picks {
                let pos = name_positions[pick];
                let original = chars[pos];
                loop {
                    let replacement = *ALNUM.choose(&mut rng).expect("non-empty alphabet");
                    if replacement != original && !ascii_lookalikes(original).contains(&replacement)
                    {
                        mutated[pos] = replacement;
                        break;
                    }
                }
            }
            mutated.into_iter().collect()
        } else {
            let target_len = loop {
                let lo = name_positions.len().saturating_sub(3).max(1);
                let hi = name_positions.len() + 3;
                let len = rng.random_range(lo..=hi);
                if len != name_positions.len() {
                    break len;
                }
            };
            let name: String =
                (0..target_len).map(|_| *ALNUM.choose(&mut rng).expect("non-empty")).collect();
            format!("{name}{tld_suffix}")
        };
        if candidate != brand && seen.insert(candidate.clone()) {
            out.push(LabeledSample {
                candidate,
                brand: brand.to_string(),
                label: Label::NonHomograph,
                origin: Origin::DissimilarMut,
            });
        }
    }
    out
}

/// Corpus-level generation plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusPlan {
    /// Homograph candidates requested per brand.
    pub homographs_per_brand: usize,
    /// Non-homograph candidates requested per brand.
    pub nonhomographs_per_brand: usize,
    /// Upper bound on substituted positions per homograph.
    pub max_substitutions: usize,
    pub seed: u64,
}

/// Runs both generators over a brand list and enforces corpus-wide
/// uniqueness: every candidate appears once, tied to exactly one brand,
/// and never collides with a brand name.
pub fn generate_corpus(
    brands: &[String],
    table: &ConfusablesTable,
    plan: &CorpusPlan,
) -> Result<Vec<LabeledSample>> {
    if brands.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut taken: BTreeSet<String> = brands.iter().cloned().collect();
    let mut out = Vec::new();
    for (index, brand) in brands.iter().enumerate() {
        let positives = generate_homographs(
            brand,
            table,
            plan.max_substitutions,
            plan.homographs_per_brand,
            derive_seed(plan.seed, 2 * index as u64),
        )?;
        let negatives = generate_nonhomographs(
            brand,
            plan.nonhomographs_per_brand,
            derive_seed(plan.seed, 2 * index as u64 + 1),
        );
        for sample in positives.into_iter().chain(negatives) {
            if taken.insert(sample.candidate.clone()) {
                out.push(sample);
            }
        }
    }
    Ok(out)
}

/// Checks whether a candidate domain is actually registered.
///
/// Live corpus work filters generated candidates against registration
/// records; that requires an external service, so the trait keeps the
/// lookup pluggable and [`NullRegistrationCheck`] (the only bundled
/// implementation) reports everything unknown, which filters nothing.
pub trait RegistrationCheck {
    fn status(&self, domain: &str) -> RegistrationStatus;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegistrationStatus {
    Registered,
    Unknown,
}

/// The no-op lookup: every domain is `Unknown`.
pub struct NullRegistrationCheck;

impl RegistrationCheck for NullRegistrationCheck {
    fn status(&self, _domain: &str) -> RegistrationStatus {
        RegistrationStatus::Unknown
    }
}

/// Drops samples whose candidate is a live registration (a real site must
/// not be labeled by a generator). With [`NullRegistrationCheck`] this is
/// the identity.
pub fn filter_registered(
    samples: Vec<LabeledSample>,
    check: &dyn RegistrationCheck,
) -> Vec<LabeledSample> {
    samples
        .into_iter()
        .filter(|s| check.status(&s.candidate) != RegistrationStatus::Registered)
        .collect()
}

/// Reproducibility header written as the first line of a corpus file,
/// wrapped in an object under the `_meta` key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub tool_version: String,
    pub config_digest: String,
}

/// Writes samples as JSONL, one object per line, with an optional leading
/// `_meta` line.
pub fn save_corpus(
    samples: &[LabeledSample],
    path: impl AsRef<Path>,
    meta: Option<&CorpusMeta>,
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut writer = BufWriter::new(file);
    if let Some(meta) = meta {
        let line = serde_json::to_string(&serde_json::json!({ "_meta": meta }))
            .expect("meta serializes");
        writeln!(writer, "{line}")?;
    }
    for sample in samples {
        let line = serde_json::to_string(sample).expect("sample serializes");
        writeln!(writer, "{line}")?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a JSONL corpus, skipping blank lines and the `_meta` header;
/// malformed or invalid rows fail with their line number.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<LabeledSample>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut samples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(trimmed).map_err(|e| Error::Schema {
                line: line_no,
                reason: e.to_string(),
            })?;
        if value.get("_meta").is_some() {
            continue;
        }
        let sample: LabeledSample =
            serde_json::from_value(value).map_err(|e| Error::Schema {
                line: line_no,
                reason: e.to_string(),
            })?;
        sample.check().map_err(|reason| Error::Schema { line: line_no, reason })?;
        samples.push(sample);
    }
    Ok(samples)
}

/// Reads the `_meta` header of a corpus file, if present.
pub fn load_corpus_meta(path: impl AsRef<Path>) -> Result<Option<CorpusMeta>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    if let Some(first) = reader.lines().next() {
        let first = first?;
        if let Ok(value) = serde_json::from_str::<serde_json::Value>(first.trim()) {
            if let Some(meta) = value.get("_meta") {
                let meta: CorpusMeta = serde_json::from_value(meta.clone())
                    .map_err(|e| Error::Schema { line: 1, reason: e.to_string() })?;
                return Ok(Some(meta));
            }
        }
    }
    Ok(None)
}
