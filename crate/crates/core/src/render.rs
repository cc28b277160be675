//! Deterministic glyph rasterization.
//!
//! Every character of a domain is drawn into a fixed-size grayscale bitmap
//! so that two characters can be compared with SSIM.  Rendering must be a
//! pure function of (codepoint, configuration): the same inputs always
//! produce bit-identical pixels, bitmaps are cached, and codepoints no font
//! in the stack covers fall back to a hollow "tofu" box instead of failing,
//! so corpus generation over large confusables tables never aborts.
//!
//! Glyphs are scaled so the font's em box (ascent to descent) spans the
//! bitmap minus padding, centered horizontally on their ink and aligned
//! vertically on the baseline.  Rasterization is anti-aliased grayscale
//! coverage — SSIM's variance terms degenerate on near-binary images.

use std::path::PathBuf;
use std::sync::Arc;

use dashmap::DashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sha256_hex;

/// Pixel size used to probe font metrics before solving for the real scale.
const PROBE_PX: f32 = 100.0;

/// How glyph bitmaps are produced.
///
/// `foreground_level`/`background_level` default to full-scale ink on an
/// empty background; both must lie in `[0, L]` where `L = 2^bits_per_pixel − 1`
/// is the dynamic range that SSIM's stabilizers are derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    /// Square bitmap side in pixels.
    pub bitmap_side: usize,
    /// Grayscale depth; 8 or 16.
    pub bits_per_pixel: u8,
    /// Ordered font stack; the first font covering a codepoint wins.
    pub font_sources: Vec<PathBuf>,
    /// Pixel value of empty background.
    pub background_level: u16,
    /// Pixel value of fully covered ink.
    pub foreground_level: u16,
    /// Fraction of the side reserved as margin on each edge.
    pub padding_fraction: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            bitmap_side: 64,
            bits_per_pixel: 8,
            font_sources: Vec::new(),
            background_level: 0,
            foreground_level: 255,
            padding_fraction: 0.125,
        }
    }
}

impl RenderConfig {
    /// Default configuration at a given depth (foreground = `L`).
    pub fn for_bits(bits_per_pixel: u8) -> Self {
        let mut cfg = RenderConfig { bits_per_pixel, ..RenderConfig::default() };
        cfg.foreground_level = cfg.max_level();
        cfg
    }

    /// Dynamic range `L = 2^bits_per_pixel − 1`.
    pub fn max_level(&self) -> u16 {
        ((1u32 << self.bits_per_pixel) - 1) as u16
    }

    /// Checks the documented invariants.
    pub fn validate(&self) -> Result<()> {
        if self.bitmap_side < 8 {
            return Err(Error::Config(format!(
                "bitmap_side must be >= 8, got {}",
                self.bitmap_side
            )));
        }
        if !matches!(self.bits_per_pixel, 8 | 16) {
            return Err(Error::Config(format!(
                "bits_per_pixel must be 8 or 16, got {}",
                self.bits_per_pixel
            )));
        }
        if self.font_sources.is_empty() {
            return Err(Error::Config("font_sources must not be empty".into()));
        }
        if !(0.0..0.5).contains(&self.padding_fraction) {
            return Err(Error::Config(format!(
                "padding_fraction must lie in [0, 0.5), got {}",
                self.padding_fraction
            )));
        }
        let l = self.max_level();
        if self.background_level > l || self.foreground_level > l {
            return Err(Error::Config(format!(
                "background/foreground levels must lie in [0, {l}]"
            )));
        }
        Ok(())
    }
}

/// A rasterized character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlyphBitmap {
    /// The character this bitmap draws.
    pub codepoint: char,
    /// Square side in pixels.
    pub side: usize,
    /// Row-major intensities, length `side²`, each in `[0, L]`.
    pub pixels: Vec<u16>,
    /// True when no font covered the codepoint and the tofu box was drawn.
    pub rendered_with_fallback: bool,
}

/// Anything that can hand out glyph bitmaps for characters.
///
/// The production implementation is [`GlyphRenderer`]; tests substitute
/// stubs with engineered pixel content.
pub trait GlyphSource: Sync {
    /// Bitmap for `c`; never fails (uncovered codepoints fall back to tofu).
    fn glyph(&self, c: char) -> Arc<GlyphBitmap>;
    /// Digest identifying the rendering configuration, including font
    /// file contents; equal digests guarantee bit-identical bitmaps.
    fn config_digest(&self) -> &str;
    /// Dynamic range `L` of produced pixels.
    fn max_level(&self) -> u16;
}

/// Material hashed into the renderer digest: every field that can change a
/// produced pixel, with font files identified by content, not path.
#[derive(Serialize)]
struct DigestMaterial<'a> {
    bitmap_side: usize,
    bits_per_pixel: u8,
    background_level: u16,
    foreground_level: u16,
    padding_fraction: f64,
    font_digests: &'a [String],
}

/// Font-stack rasterizer with a concurrent glyph cache.
///
/// Read-only after construction; the cache accepts idempotent concurrent
/// inserts (duplicate renders of one key produce identical values), so the
/// renderer is freely shared across threads.
pub struct GlyphRenderer {
    config: RenderConfig,
    fonts: Vec<fontdue::Font>,
    digest: String,
    cache: DashMap<char, Arc<GlyphBitmap>>,
}

impl GlyphRenderer {
    /// Loads the font stack and validates the configuration.
    pub fn new(config: RenderConfig) -> Result<Self> {
        config.validate()?;
        let mut fonts = Vec::with_capacity(config.font_sources.len());
        let mut font_digests = Vec::with_capacity(config.font_sources.len());
        for path in &config.font_sources {
            let shown = path.display().to_string();
            let bytes = std::fs::read(path)
                .map_err(|e| Error::FontLoad { path: shown.clone(), reason: e.to_string() })?;
            font_digests.push(sha256_hex(&bytes));
            let font = fontdue::Font::from_bytes(bytes, fontdue::FontSettings::default())
                .map_err(|msg| Error::FontLoad { path: shown.clone(), reason: msg.to_string() })?;
            match font.horizontal_line_metrics(PROBE_PX) {
                Some(lm) if lm.ascent - lm.descent > 0.0 => {}
                _ => {
                    return Err(Error::FontLoad {
                        path: shown,
                        reason: "font has no usable horizontal line metrics".into(),
                    })
                }
            }
            fonts.push(font);
        }
        let material = DigestMaterial {
            bitmap_side: config.bitmap_side,
            bits_per_pixel: config.bits_per_pixel,
            background_level: config.background_level,
            foreground_level: config.foreground_level,
            padding_fraction: config.padding_fraction,
            font_digests: &font_digests,
        };
        let digest = sha256_hex(
            serde_json::to_string(&material)
                .expect("digest material serializes")
                .as_bytes(),
        );
        Ok(GlyphRenderer { config, fonts, digest, cache: DashMap::new() })
    }

    pub fn config(&self) -> &RenderConfig {
        &self.config
    }

    /// Renders `c`, serving repeated requests from the cache.
    pub fn render(&self, c: char) -> Arc<GlyphBitmap> {
        if let Some(hit) = self.cache.get(&c) {
            return Arc::clone(&hit);
        }
        let fresh = Arc::new(self.rasterize(c));
        // entry() keeps the first insert on a race; both values are
        // bit-identical by determinism, so either is correct.
        Arc::clone(&self.cache.entry(c).or_insert(fresh))
    }

    /// First font in the stack covering `c`, with its glyph index.
    fn font_for(&self, c: char) -> Option<(&fontdue::Font, u16)> {
        self.fonts.iter().find_map(|f| {
            let idx = f.lookup_glyph_index(c);
            (idx != 0).then_some((f, idx))
        })
    }

    /// Pure rasterization; cache-free.
    fn rasterize(&self, c: char) -> GlyphBitmap {
        let cfg = &self.config;
        let side = cfg.bitmap_side;
        // floor keeps the content box non-empty for every padding < 0.5.
        let pad = (side as f64 * cfg.padding_fraction).floor() as usize;
        let content = side - 2 * pad;
        let mut pixels = vec![cfg.background_level; side * side];

        let Some((font, glyph_idx)) = self.font_for(c) else {
            self.draw_tofu(&mut pixels, pad);
            return GlyphBitmap { codepoint: c, side, pixels, rendered_with_fallback: true };
        };

        // Solve for the pixel size whose em box (ascent..descent) spans the
        // content height; metrics scale linearly with the probe size.
        let probe = font.horizontal_line_metrics(PROBE_PX).expect("validated at load");
        let em_height = probe.ascent - probe.descent;
        let mut px = PROBE_PX * content as f32 / em_height;
        let (mut metrics, mut coverage) = font.rasterize_indexed(glyph_idx, px);
        if metrics.width > content || metrics.height > content {
            // Ink outruns the em box (stacked diacritics, wide glyphs):
            // shrink once so it fits; any residual pixel is clipped below.
            let shrink = (content as f32 / metrics.width.max(1) as f32)
                .min(content as f32 / metrics.height.max(1) as f32);
            px *= shrink;
            let redone = font.rasterize_indexed(glyph_idx, px);
            metrics = redone.0;
            coverage = redone.1;
        }

        let line = font.horizontal_line_metrics(px).expect("validated at load");
        let baseline_row = pad as i64 + line.ascent.round() as i64;
        // fontdue's ymin is the bitmap bottom relative to the baseline,
        // positive up; convert to top-down image rows.
        let top = baseline_row - metrics.ymin as i64 - metrics.height as i64;
        let left = (side as i64 - metrics.width as i64) / 2;
        let bg = cfg.background_level as f64;
        let fg = cfg.foreground_level as f64;
        for row in 0..metrics.height {
            let y = top + row as i64;
            if y < 0 || y >= side as i64 {
                continue;
            }
            for col in 0..metrics.width {
                let x = left + col as i64;
                if x < 0 || x >= side as i64 {
                    continue;
                }
                let cov = coverage[row * metrics.width + col] as f64 / 255.0;
                let value = (bg + (fg - bg) * cov).round() as u16;
                pixels[y as usize * side + x as usize] = value;
            }
        }
        GlyphBitmap { codepoint: c, side, pixels, rendered_with_fallback: false }
    }

    /// Hollow rectangle filling the content box — the "missing glyph" mark.
    fn draw_tofu(&self, pixels: &mut [u16], pad: usize) {
        let side = self.config.bitmap_side;
        let fg = self.config.foreground_level;
        let thickness = (side / 16).max(1);
        let (lo, hi) = (pad, side - pad);
        for y in lo..hi {
            for x in lo..hi {
                let border = y < lo + thickness
                    || y >= hi - thickness
                    || x < lo + thickness
                    || x >= hi - thickness;
                if border {
                    pixels[y * side + x] = fg;
                }
            }
        }
    }
}

impl GlyphSource for GlyphRenderer {
    fn glyph(&self, c: char) -> Arc<GlyphBitmap> {
        self.render(c)
    }

    fn config_digest(&self) -> &str {
        &self.digest
    }

    fn max_level(&self) -> u16 {
        self.config.max_level()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled_font_path;

    fn bundled_config() -> RenderConfig {
        RenderConfig { font_sources: vec![bundled_font_path()], ..RenderConfig::default() }
    }

    fn renderer() -> GlyphRenderer {
        GlyphRenderer::new(bundled_config()).expect("bundled font loads")
    }

    #[test]
    fn latin_a_renders_with_ink_in_range() {
        let r = renderer();
        let b = r.render('a');
        assert_eq!(b.side, 64);
        assert_eq!(b.pixels.len(), 64 * 64);
        assert!(!b.rendered_with_fallback);
        assert!(b.pixels.iter().any(|&p| p > 0), "glyph must leave ink");
        assert!(b.pixels.iter().all(|&p| p <= 255));
    }

    #[test]
    fn cyrillic_a_is_visually_near_identical_to_latin_a() {
        // DejaVu draws U+0430 with the same outline as 'a'; the bitmaps
        // coincide exactly, which is the strongest form of "near-identical".
        let r = renderer();
        assert_eq!(r.render('a').pixels, r.render('\u{0430}').pixels);
    }

    #[test]
    fn uncovered_codepoint_falls_back_to_tofu() {
        let r = renderer();
        let b = r.render('\u{e003}'); // private use, never in DejaVu
        assert!(b.rendered_with_fallback);
        assert!(b.pixels.iter().any(|&p| p > 0), "tofu box must be visible");
    }

    #[test]
    fn rendering_is_deterministic_and_cache_transparent() {
        let warm = renderer();
        let first = warm.render('g');
        let second = warm.render('g'); // cache hit
        assert_eq!(first.pixels, second.pixels);
        let cold = renderer(); // fresh cache
        assert_eq!(first.pixels, cold.render('g').pixels);
    }

    #[test]
    fn sixteen_bit_configuration_scales_the_dynamic_range() {
        let mut cfg = RenderConfig::for_bits(16);
        cfg.font_sources = vec![bundled_font_path()];
        assert_eq!(cfg.foreground_level, 65535);
        let r = GlyphRenderer::new(cfg).unwrap();
        let b = r.render('a');
        assert!(b.pixels.iter().any(|&p| p > 255), "16-bit ink uses the wide range");
    }

    #[test]
    fn sample_corpus_characters_stay_in_range() {
        let r = renderer();
        for c in "abcdefghijklmnopqrstuvwxyz0123456789.-éа".chars() {
            let b = r.render(c);
            assert!(b.pixels.iter().all(|&p| p <= 255), "{c:?} out of range");
        }
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let bad = [
            RenderConfig { bitmap_side: 4, ..bundled_config() },
            RenderConfig { bits_per_pixel: 12, ..bundled_config() },
            RenderConfig { padding_fraction: 0.6, ..bundled_config() },
            RenderConfig { foreground_level: 300, ..bundled_config() },
            RenderConfig { font_sources: vec![], ..RenderConfig::default() },
        ];
        for cfg in bad {
            assert!(matches!(GlyphRenderer::new(cfg), Err(Error::Config(_))));
        }
    }

    #[test]
    fn unreadable_font_is_a_font_load_error() {
        let cfg = RenderConfig {
            font_sources: vec!["/nonexistent/font.ttf".into()],
            ..RenderConfig::default()
        };
        assert!(matches!(GlyphRenderer::new(cfg), Err(Error::FontLoad { .. })));
    }

    #[test]
    fn digest_identifies_the_configuration() {
        let a = renderer();
        let b = renderer();
        assert_eq!(a.config_digest(), b.config_digest());
        let mut other_cfg = bundled_config();
        other_cfg.bitmap_side = 32;
        let c = GlyphRenderer::new(other_cfg).unwrap();
        assert_ne!(a.config_digest(), c.config_digest());
    }
}
