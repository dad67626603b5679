//! GloVe-style text embeddings: one word per line followed by `dim` floats.
//! Out-of-vocabulary words map to the all-zeros vector; embeddings are
//! frozen, never trained.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Result, SercError};

#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, word: &str, vector: Vec<f32>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(SercError::Dimension(format!(
                "embedding for {word:?} has {} values, table dim is {}",
                vector.len(),
                self.dim
            )));
        }
        self.vectors.insert(word.to_string(), vector);
        Ok(())
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.vectors.get(word).map(|v| v.as_slice())
    }

    /// Lookup with the OOV convention: absent words yield all zeros.
    pub fn lookup(&self, word: &str) -> Vec<f32> {
        self.vectors
            .get(word)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.dim])
    }
}

pub fn parse_embeddings(text: &str, dim: usize) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::new(dim);
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().ok_or_else(|| SercError::Parse {
            line: lineno,
            message: "empty embedding line".into(),
        })?;
        let values: Vec<f32> = parts
            .map(|p| {
                p.parse::<f32>().map_err(|_| SercError::Parse {
                    line: lineno,
                    message: format!("bad float {p:?}"),
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(SercError::Dimension(format!(
                "line {lineno}: {} values for word {word:?}, expected {dim}",
                values.len()
            )));
        }
        table.insert(word, values)?;
    }
    Ok(table)
}

pub fn load_embeddings(path: &Path, dim: usize) -> Result<EmbeddingTable> {
    parse_embeddings(&std::fs::read_to_string(path)?, dim)
}
