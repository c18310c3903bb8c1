//! Loading word-vector files.

use std::io::Read;
use std::path::Path;

use lost3dsg_core::{VectorError, WordVectorTable};

/// Small vocabulary covering the bundled scenarios.
pub const BUNDLED_VECTORS: &str = include_str!("../fixtures/vectors.txt");

#[derive(Debug, thiserror::Error)]
pub enum LoadVectorsError {
    #[error("reading word vectors: {0}")]
    Io(#[from] std::io::Error),
    #[error("word vectors: {0}")]
    Format(#[from] VectorError),
}

pub fn load_word_vectors<R: Read>(mut reader: R) -> Result<WordVectorTable, LoadVectorsError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    Ok(WordVectorTable::parse(&text)?)
}

pub fn load_word_vectors_file(path: &Path) -> Result<WordVectorTable, LoadVectorsError> {
    load_word_vectors(std::fs::File::open(path)?)
}

pub fn bundled_word_vectors() -> WordVectorTable {
    WordVectorTable::parse(BUNDLED_VECTORS).expect("bundled vectors are well formed")
}
