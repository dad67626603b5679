use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Document;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TagKind {
    Pos,
    Dep,
}

/// Ordered tag list defining the one-hot basis. Slot 0 is reserved for UNK;
/// lookup of an unseen tag returns 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagInventory {
    pub kind: TagKind,
    tags: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

pub const UNK: &str = "<UNK>";

impl TagInventory {
    pub fn new(kind: TagKind) -> Self {
        let mut inv = TagInventory {
            kind,
            tags: vec![UNK.to_string()],
            index: HashMap::new(),
        };
        inv.index.insert(UNK.to_string(), 0);
        inv
    }

    pub fn from_tags(kind: TagKind, tags: Vec<String>) -> Self {
        let mut inv = TagInventory::new(kind);
        for tag in tags {
            inv.insert(&tag);
        }
        inv
    }

    /// Rebuilds the lookup index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .tags
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    pub fn insert(&mut self, tag: &str) -> usize {
        if let Some(&id) = self.index.get(tag) {
            return id;
        }
        let id = self.tags.len();
        self.tags.push(tag.to_string());
        self.index.insert(tag.to_string(), id);
        id
    }

    /// Total lookup: unseen tags map to the UNK slot.
    pub fn id(&self, tag: &str) -> usize {
        self.index.get(tag).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }
}

/// Word -> id map over lowercased surface forms, id 0 reserved for UNK.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    words: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new() -> Self {
        let mut v = Vocabulary {
            words: vec![UNK.to_string()],
            index: HashMap::new(),
        };
        v.index.insert(UNK.to_string(), 0);
        v
    }

    pub fn reindex(&mut self) {
        self.index = self
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
    }

    fn insert(&mut self, word: &str) -> usize {
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        let id = self.words.len();
        self.words.push(word.to_string());
        self.index.insert(word.to_string(), id);
        id
    }

    pub fn id(&self, word: &str) -> usize {
        self.index.get(&word.to_lowercase()).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// SHA-256 over the ordered word list, for checkpoint provenance.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for w in &self.words {
            hasher.update(w.as_bytes());
            hasher.update([0u8]);
        }
        format!("{:x}", hasher.finalize())
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::new()
    }
}

/// Scan the documents and build the word vocabulary (frequency >= min_count,
/// lowercased) and the POS/DEP tag inventories in first-occurrence order.
pub fn build_inventories(
    docs: &[Document],
    min_count: usize,
) -> (Vocabulary, TagInventory, TagInventory) {
    let mut pos_inv = TagInventory::new(TagKind::Pos);
    let mut dep_inv = TagInventory::new(TagKind::Dep);
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut order: Vec<String> = Vec::new();
    for doc in docs {
        for sent in &doc.sentences {
            for tok in &sent.tokens {
                pos_inv.insert(&tok.pos);
                dep_inv.insert(&tok.dep_label);
                let word = tok.surface.to_lowercase();
                let count = counts.entry(word.clone()).or_insert(0);
                if *count == 0 {
                    order.push(word);
                }
                *count += 1;
            }
        }
    }
    let mut vocab = Vocabulary::new();
    for word in order {
        if counts[&word] >= min_count.max(1) {
            vocab.insert(&word);
        }
    }
    (vocab, pos_inv, dep_inv)
}
