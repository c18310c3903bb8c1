//! Text-to-vector providers behind the four similarity terms: word vectors
//! for labels and materials, a sentence embedder for descriptions, and the
//! color-name table.

mod color;
mod sentence;
mod words;

pub use color::{color_to_rgb, lookup_css, RgbColor, CSS_COLORS};
pub use sentence::{
    EmbedError, EmbedderKind, HashedTrigramEmbedder, SentenceEmbedder, TRIGRAM_DIMENSION,
};
pub use words::{tokenize, word_similarity, VectorError, WordVectorTable};
