//! Sentence embedders used for the description term.

use alloc::string::String;
use alloc::vec::Vec;

use crate::math;

/// Dimension of [`HashedTrigramEmbedder`] outputs.
pub const TRIGRAM_DIMENSION: usize = 256;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding request failed: {0}")]
    Transport(String),
    #[error("embedding service answered with status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed embedding response: {0}")]
    Malformed(String),
    #[error("embedding has dimension {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbedderKind {
    Remote,
    DeterministicLocal,
}

/// Maps text to a unit-norm vector of fixed dimension. Implementations must
/// return the same vector for the same text within a session.
pub trait SentenceEmbedder {
    fn kind(&self) -> EmbedderKind;

    fn dimension(&self) -> usize;

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError>;
}

impl<E: SentenceEmbedder + ?Sized> SentenceEmbedder for &E {
    fn kind(&self) -> EmbedderKind {
        (**self).kind()
    }

    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        (**self).embed(text)
    }
}

/// Offline embedder: character 3-grams of the trimmed, lowercased text,
/// each hashed with 64-bit FNV-1a over its UTF-8 bytes into one of 256
/// buckets, counted, then L2-normalized. Texts shorter than three
/// characters form a single gram.
#[derive(Clone, Copy, Debug, Default)]
pub struct HashedTrigramEmbedder;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME))
}

impl SentenceEmbedder for HashedTrigramEmbedder {
    fn kind(&self) -> EmbedderKind {
        EmbedderKind::DeterministicLocal
    }

    fn dimension(&self) -> usize {
        TRIGRAM_DIMENSION
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let text = text.trim().to_lowercase();
        if text.is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let chars: Vec<char> = text.chars().collect();
        let mut bag = alloc::vec![0.0; TRIGRAM_DIMENSION];
        let mut buf = [0u8; 12];
        let mut bump = |gram: &[char]| {
            let mut len = 0;
            for c in gram {
                len += c.encode_utf8(&mut buf[len..]).len();
            }
            bag[(fnv1a(&buf[..len]) % TRIGRAM_DIMENSION as u64) as usize] += 1.0;
        };
        if chars.len() < 3 {
            bump(&chars);
        } else {
            chars.windows(3).for_each(&mut bump);
        }
        math::normalize_in_place(&mut bag);
        Ok(bag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_norm_and_deterministic() {
        let e = HashedTrigramEmbedder;
        let a = e.embed("abc").unwrap();
        assert_eq!(a, e.embed("abc").unwrap());
        assert_eq!(a.len(), 256);
        assert!((math::l2_norm(&a) - 1.0).abs() < 1e-12);
        // a single trigram lands in exactly one bucket
        assert_eq!(a.iter().filter(|v| **v != 0.0).count(), 1);
        assert_eq!(e.embed("ab").unwrap().iter().filter(|v| **v != 0.0).count(), 1);
    }

    #[test]
    fn case_and_padding_are_ignored() {
        let e = HashedTrigramEmbedder;
        assert_eq!(e.embed("  Worn Red Hammer ").unwrap(), e.embed("worn red hammer").unwrap());
    }

    #[test]
    fn empty_text_is_an_error() {
        assert_eq!(HashedTrigramEmbedder.embed("   "), Err(EmbedError::EmptyText));
    }

    #[test]
    fn fnv_reference_values() {
        // published FNV-1a 64 test vectors
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }
}
