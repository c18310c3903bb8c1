//! Pre-trained word vectors in the plain text format and phrase similarity
//! over them.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::math;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VectorError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("no vectors found")]
    Empty,
}

/// Lowercase token to unit-norm vector.
#[derive(Clone, Debug, PartialEq)]
pub struct WordVectorTable {
    dimension: usize,
    entries: BTreeMap<String, Vec<f64>>,
}

impl WordVectorTable {
    /// Parses the text vector format: an optional `count dim` header, then
    /// one `token v1 .. vdim` line per word. Tokens are lowercased, the
    /// first occurrence of a token wins, and vectors are L2-normalized.
    /// Blank lines are skipped. Line numbers in errors are 1-based.
    pub fn parse(text: &str) -> Result<Self, VectorError> {
        let mut dimension: Option<usize> = None;
        let mut entries = BTreeMap::new();
        let mut first = true;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let mut fields = raw.split_whitespace();
            let Some(token) = fields.next() else {
                continue;
            };
            let rest: Vec<&str> = fields.collect();

            if first {
                first = false;
                if let Some(dim) = parse_header(token, &rest) {
                    if dim == 0 {
                        return Err(VectorError::Malformed {
                            line,
                            reason: "header declares dimension 0".to_string(),
                        });
                    }
                    dimension = Some(dim);
                    continue;
                }
            }

            let expected = match dimension {
                Some(d) => d,
                None if rest.is_empty() => {
                    return Err(VectorError::Malformed {
                        line,
                        reason: "token without vector components".to_string(),
                    })
                }
                None => *dimension.insert(rest.len()),
            };
            if rest.len() != expected {
                return Err(VectorError::DimensionMismatch {
                    line,
                    expected,
                    found: rest.len(),
                });
            }
            let mut vector = Vec::with_capacity(expected);
            for field in &rest {
                match field.parse::<f64>() {
                    Ok(v) if v.is_finite() => vector.push(v),
                    _ => {
                        return Err(VectorError::Malformed {
                            line,
                            reason: alloc::format!("invalid number {field:?}"),
                        })
                    }
                }
            }
            math::normalize_in_place(&mut vector);
            entries.entry(token.to_lowercase()).or_insert(vector);
        }

        match dimension {
            Some(dimension) if !entries.is_empty() => Ok(WordVectorTable { dimension, entries }),
            _ => Err(VectorError::Empty),
        }
    }

    /// Builds a table from in-memory vectors, normalizing each one. Returns
    /// a dimension error on the first vector of the wrong length; the
    /// reported line is the 1-based position in `entries`.
    pub fn from_entries<I, S>(dimension: usize, entries: I) -> Result<Self, VectorError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        let mut map = BTreeMap::new();
        for (i, (token, mut vector)) in entries.into_iter().enumerate() {
            if vector.len() != dimension {
                return Err(VectorError::DimensionMismatch {
                    line: i + 1,
                    expected: dimension,
                    found: vector.len(),
                });
            }
            math::normalize_in_place(&mut vector);
            map.entry(token.as_ref().to_lowercase()).or_insert(vector);
        }
        if dimension == 0 || map.is_empty() {
            return Err(VectorError::Empty);
        }
        Ok(WordVectorTable {
            dimension,
            entries: map,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Case-insensitive lookup.
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries
            .get(token)
            .or_else(|| self.entries.get(&token.to_lowercase()))
            .map(Vec::as_slice)
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.keys().map(String::as_str)
    }

    /// Mean of the in-vocabulary token vectors of a phrase, renormalized.
    /// `None` when no token is in the vocabulary or the mean vanishes.
    pub fn phrase_vector(&self, phrase: &str) -> Option<Vec<f64>> {
        let tokens = tokenize(phrase);
        let mut mean = math::mean_vector(
            tokens.iter().filter_map(|t| self.entries.get(t).map(Vec::as_slice)),
            self.dimension,
        )?;
        math::normalize_in_place(&mut mean).then_some(mean)
    }
}

fn parse_header(first: &str, rest: &[&str]) -> Option<usize> {
    match rest {
        [dim] => {
            first.parse::<usize>().ok()?;
            dim.parse::<usize>().ok()
        }
        _ => None,
    }
}

/// Whitespace split, surrounding ASCII punctuation stripped, lowercased.
pub fn tokenize(phrase: &str) -> Vec<String> {
    phrase
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| c.is_ascii_punctuation()))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Similarity of two short phrases in `[0, 1]`: the clamped cosine of their
/// mean token vectors. When either side has no known token the phrases are
/// compared as strings (case-insensitive): 1 when equal, 0 otherwise.
pub fn word_similarity(a: &str, b: &str, table: &WordVectorTable) -> f64 {
    match (table.phrase_vector(a), table.phrase_vector(b)) {
        (Some(va), Some(vb)) if va == vb => 1.0,
        (Some(va), Some(vb)) => math::clamped_cosine(&va, &vb),
        _ => {
            if a.trim().to_lowercase() == b.trim().to_lowercase() {
                1.0
            } else {
                0.0
            }
        }
    }
}
