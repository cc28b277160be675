//! Confusable-character tables in the UTS #39 text format.
//!
//! Each line maps a source character to a visually confusable target:
//!
//! ```text
//! 0441 ; 0063 ; SL # CYRILLIC SMALL LETTER ES → LATIN SMALL LETTER C
//! ```
//!
//! The table keeps only single-scalar-to-single-scalar mappings — the
//! substitution generator swaps one character for one character — and
//! makes every mapping bidirectional.  Multi-scalar entries (ligature
//! decompositions, combining sequences) are counted and skipped, as are
//! self-mappings.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sha256_hex;

/// Where a table came from, for provenance in reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableProvenance {
    pub path: String,
    /// SHA-256 of the raw file content.
    pub digest: String,
}

/// Bidirectional visual-confusability mapping between Unicode scalars.
#[derive(Debug, Clone, Default)]
pub struct ConfusablesTable {
    map: BTreeMap<char, BTreeSet<char>>,
    /// Lines skipped because source or target spanned multiple scalars.
    pub skipped_multi_scalar: usize,
    /// Lines skipped because the mapping was the identity.
    pub skipped_self_mappings: usize,
    /// Set when the table was loaded from a file.
    pub provenance: Option<TableProvenance>,
}

impl ConfusablesTable {
    /// Characters confusable with `c`, if any; deterministic order.
    pub fn confusables_of(&self, c: char) -> Option<&BTreeSet<char>> {
        self.map.get(&c)
    }

    /// Whether any mapping exists for `c`.
    pub fn contains(&self, c: char) -> bool {
        self.map.contains_key(&c)
    }

    /// All characters that appear on either side of a mapping.
    pub fn chars(&self) -> impl Iterator<Item = char> + '_ {
        self.map.keys().copied()
    }

    /// Number of directed mappings.
    pub fn mapping_count(&self) -> usize {
        self.map.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn insert_pair(&mut self, a: char, b: char) {
        self.map.entry(a).or_default().insert(b);
        self.map.entry(b).or_default().insert(a);
    }
}

/// Parses hex scalar tokens like `"0441"` or `"0066 0069"`.
fn parse_hex_scalars(field: &str, line: usize) -> Result<Vec<char>> {
    field
        .split_whitespace()
        .map(|token| {
            let value = u32::from_str_radix(token, 16).map_err(|_| Error::Parse {
                line,
                reason: format!("invalid hex scalar {token:?}"),
            })?;
            char::from_u32(value).ok_or_else(|| Error::Parse {
                line,
                reason: format!("{token} is not a Unicode scalar value"),
            })
        })
        .collect()
}

/// Parses the UTS #39-style text format described in the module docs.
pub fn parse_confusables(text: &str) -> Result<ConfusablesTable> {
    let mut table = ConfusablesTable::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split(';').collect();
        if fields.len() < 2 {
            return Err(Error::Parse {
                line,
                reason: "expected `source ; target ; class`".into(),
            });
        }
        let sources = parse_hex_scalars(fields[0], line)?;
        let targets = parse_hex_scalars(fields[1], line)?;
        if sources.is_empty() || targets.is_empty() {
            return Err(Error::Parse { line, reason: "missing source or target field".into() });
        }
        if sources.len() > 1 || targets.len() > 1 {
            table.skipped_multi_scalar += 1;
            continue;
        }
        if sources[0] == targets[0] {
            table.skipped_self_mappings += 1;
            continue;
        }
        table.insert_pair(sources[0], targets[0]);
    }
    Ok(table)
}

/// Loads and parses a table file, recording provenance.
pub fn load_confusables(path: impl AsRef<Path>) -> Result<ConfusablesTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut table = parse_confusables(&text)?;
    table.provenance = Some(TableProvenance {
        path: path.display().to_string(),
        digest: sha256_hex(text.as_bytes()),
    });
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_scalar_lines_map_both_directions() {
        let table = parse_confusables("0441 ; 0063 ;\n").unwrap();
        assert!(table.confusables_of('\u{0441}').unwrap().contains(&'c'));
        assert!(table.confusables_of('c').unwrap().contains(&'\u{0441}'));
        assert_eq!(table.mapping_count(), 2);
    }

    #[test]
    fn multi_scalar_entries_are_counted_and_skipped() {
        let text = "0066 0066 ; FB00 ;\nFB01 ; 0066 0069 ;\n0441 ; 0063 ;\n";
        let table = parse_confusables(text).unwrap();
        assert_eq!(table.skipped_multi_scalar, 2);
        assert!(!table.contains('\u{FB00}'));
        assert!(table.contains('c'));
    }

    #[test]
    fn self_mappings_are_skipped() {
        let table = parse_confusables("0063 ; 0063 ;\n").unwrap();
        assert_eq!(table.skipped_self_mappings, 1);
        assert!(table.is_empty());
        // The invariant: no character ever maps to itself.
        let table = parse_confusables("0441 ; 0063 ;\n0063 ; 006F ;\n").unwrap();
        for c in table.chars() {
            assert!(!table.confusables_of(c).unwrap().contains(&c));
        }
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# header comment\n\n0441 ; 0063 ; SL # letter es\n   \n";
        let table = parse_confusables(text).unwrap();
        assert_eq!(table.mapping_count(), 2);
    }

    #[test]
    fn empty_input_is_an_empty_table() {
        let table = parse_confusables("").unwrap();
        assert!(table.is_empty());
        assert_eq!(table.skipped_multi_scalar, 0);
    }

    #[test]
    fn malformed_lines_report_their_line_number() {
        let err = parse_confusables("0441 ; 0063 ;\nzzzz . 0063\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let err = parse_confusables("GGGG ; 0063 ;\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_confusables("D800 ; 0063 ;\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "surrogates are not scalars");
    }

    #[test]
    fn missing_fields_are_rejected() {
        assert!(parse_confusables("0441\n").is_err());
        assert!(parse_confusables(" ; 0063 ;\n").is_err());
    }
}
