//! Visual homograph-domain detection.
//!
//! An attacker registers `gòogle.com` hoping a victim reads `google.com`.
//! This crate decides, for a candidate/brand domain pair, whether the
//! candidate is a *visual homograph* of the brand.  The signal is built in
//! three stages:
//!
//! 1. [`render`] rasterizes every character of both domains to fixed-size
//!    grayscale bitmaps with a deterministic font stack.
//! 2. [`similarity`] scores aligned character pairs with the structural
//!    similarity index (SSIM) and aggregates them into a per-domain mean and
//!    a set of visually-different positions.
//! 3. [`features`] turns a pair into a feature vector — the SSIM mean, the
//!    character-presence unigram indicators of the candidate string, or
//!    both concatenated — and [`learners`] fits decision-tree ensembles and
//!    simple baselines over those vectors (implemented from scratch; no ML
//!    dependency).
//!
//! [`datagen`] produces labeled corpora (confusable-substitution homographs
//!    and deliberately dissimilar non-homographs) and [`eval`] runs
//!    stratified cross-validation, confusion metrics, SSIM-binned error
//!    analysis, and cross-approach error extraction.
//!
//! Batch operations (rendering, featurization, ensemble fitting) go through
//! [`exec`], which runs on rayon when the default `parallel` feature is
//! enabled and falls back to plain iterators otherwise.  Both paths produce
//! bit-identical results; `benches/parallel_vs_sequential.rs` compares them.

pub mod datagen;
pub mod error;
pub mod eval;
pub mod exec;
pub mod features;
pub mod learners;
pub mod matrix;
pub mod render;
pub mod similarity;

pub use error::{Error, Result};

/// Version tag stamped into generated corpora and reports.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Path of the grayscale font bundled for tests, examples, and default CLI
/// runs.  Resolved relative to this crate, so it is valid for any process
/// built from this workspace.
pub fn bundled_font_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("assets/fonts/DejaVuSans.ttf")
}

/// Path of the bundled confusable-character table (UTS #39 text format).
pub fn bundled_confusables_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/confusables.txt")
}

/// Path of the bundled brand-domain list, one domain per line.
pub fn bundled_brands_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/brands.txt")
}

/// Hex-encoded SHA-256 of `bytes`; the digest primitive used for config,
/// schema, and corpus fingerprints throughout the crate.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        let _ = write!(out, "{byte:02x}");
    }
    out
}
