//! Corpus ingestion: dependency-parsed documents, event-pair relation
//! annotations, vocabularies and tag inventories, word embeddings, document
//! level splits, and synthetic corpora for end-to-end checks.

mod conllu;
mod embeddings;
mod inventory;
mod relations;
mod split;
mod synthetic;

pub use conllu::{parse_conllu, to_conllu};
pub use embeddings::{load_embeddings, parse_embeddings, EmbeddingTable};
pub use inventory::{build_inventories, TagInventory, TagKind, Vocabulary, UNK};
pub use relations::{parse_relations, parse_relations_lenient, to_jsonl};
pub use split::split_corpus;
pub use synthetic::{
    coupled_causal_id, generate_synthetic, synthetic_embeddings, Coupling, SyntheticCorpus,
    SyntheticSpec,
};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SercError};

/// One token of a dependency-parsed sentence. `head` follows the CoNLL-U
/// convention: 0 for the sentence root, otherwise the 1-based index of the
/// head token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// 1-based position within the sentence.
    pub index: usize,
    pub surface: String,
    pub pos: String,
    pub dep_label: String,
    pub head: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Checks the tree invariants: a unique root, in-range heads, no
    /// self-loops, and an acyclic head graph.
    pub fn validate(&self, sentence_no: usize) -> Result<()> {
        let n = self.tokens.len();
        let err = |message: String| SercError::Structure {
            sentence: sentence_no,
            message,
        };
        if n == 0 {
            return Err(err("empty sentence".into()));
        }
        let mut roots = 0;
        for (k, tok) in self.tokens.iter().enumerate() {
            if tok.index != k + 1 {
                return Err(err(format!(
                    "token id {} at position {} (ids must be 1..n)",
                    tok.index,
                    k + 1
                )));
            }
            if tok.pos.is_empty() || tok.dep_label.is_empty() {
                return Err(err(format!("token {} has empty POS or deprel", tok.index)));
            }
            if tok.head == tok.index {
                return Err(err(format!("token {} is its own head", tok.index)));
            }
            if tok.head > n {
                return Err(err(format!(
                    "token {} has head {} beyond sentence length {}",
                    tok.index, tok.head, n
                )));
            }
            if tok.head == 0 {
                roots += 1;
            }
        }
        if roots != 1 {
            return Err(err(format!("{roots} roots, expected exactly 1")));
        }
        // Walk each token to the root; a cycle never reaches head 0.
        for tok in &self.tokens {
            let mut cur = tok.head;
            let mut hops = 0;
            while cur != 0 {
                cur = self.tokens[cur - 1].head;
                hops += 1;
                if hops > n {
                    return Err(err(format!("head cycle involving token {}", tok.index)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub sentences: Vec<Sentence>,
}

impl Document {
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }
}

/// A pointer to one event token: 0-based sentence and token indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventMention {
    #[serde(rename = "sent")]
    pub sentence_idx: usize,
    #[serde(rename = "tok")]
    pub token_idx: usize,
}

impl EventMention {
    pub fn new(sentence_idx: usize, token_idx: usize) -> Self {
        EventMention {
            sentence_idx,
            token_idx,
        }
    }

    pub fn check_in(&self, doc: &Document) -> Result<()> {
        let sent = doc.sentences.get(self.sentence_idx).ok_or_else(|| {
            SercError::Index(format!(
                "sentence {} in document {} with {} sentences",
                self.sentence_idx,
                doc.doc_id,
                doc.sentences.len()
            ))
        })?;
        if self.token_idx >= sent.tokens.len() {
            return Err(SercError::Index(format!(
                "token {} in sentence {} of {} ({} tokens)",
                self.token_idx,
                self.sentence_idx,
                doc.doc_id,
                sent.tokens.len()
            )));
        }
        Ok(())
    }
}

/// Classification task kind. The task fixes the label set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "TEMPORAL6")]
    Temporal6,
    #[serde(rename = "TEMPORAL14")]
    Temporal14,
    #[serde(rename = "CAUSAL3")]
    Causal3,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Temporal6 => "TEMPORAL6",
            Task::Temporal14 => "TEMPORAL14",
            Task::Causal3 => "CAUSAL3",
        }
    }

    pub fn parse(s: &str) -> Result<Task> {
        match s {
            "TEMPORAL6" => Ok(Task::Temporal6),
            "TEMPORAL14" => Ok(Task::Temporal14),
            "CAUSAL3" => Ok(Task::Causal3),
            other => Err(SercError::validation(format!("unknown task {other:?}"))),
        }
    }

    pub fn num_classes(&self) -> usize {
        LabelSet::for_task(*self).len()
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One labeled event pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationInstance {
    pub doc_id: String,
    pub e1: EventMention,
    pub e2: EventMention,
    pub task: Task,
    pub label: String,
}

impl RelationInstance {
    pub fn validate(&self) -> Result<()> {
        let labels = LabelSet::for_task(self.task);
        if labels.id(&self.label).is_none() {
            return Err(SercError::validation(format!(
                "label {:?} not in {} label set",
                self.label, self.task
            )));
        }
        if self.e1 == self.e2 {
            return Err(SercError::validation(format!(
                "e1 and e2 coincide in document {}",
                self.doc_id
            )));
        }
        if self.e1 > self.e2 {
            return Err(SercError::validation(format!(
                "e1 must precede e2 in textual order (document {})",
                self.doc_id
            )));
        }
        Ok(())
    }

    pub fn label_id(&self) -> usize {
        LabelSet::for_task(self.task)
            .id(&self.label)
            .expect("validated label")
    }
}

/// Ordered label list of a task, with a label -> id map implied by position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    pub task: Task,
    pub labels: Vec<String>,
}

pub const TEMPORAL6_LABELS: [&str; 6] = [
    "AFTER",
    "BEFORE",
    "SIMULTANEOUS",
    "INCLUDES",
    "IS_INCLUDED",
    "VAGUE",
];

pub const TEMPORAL14_LABELS: [&str; 14] = [
    "AFTER",
    "BEFORE",
    "BEGINS",
    "BEGUN_BY",
    "DURING",
    "DURING_INV",
    "ENDS",
    "ENDED_BY",
    "IAFTER",
    "IBEFORE",
    "IDENTITY",
    "INCLUDES",
    "IS_INCLUDED",
    "SIMULTANEOUS",
];

pub const CAUSAL3_LABELS: [&str; 3] = ["CAUSES", "CAUSED_BY", "NONE"];

impl LabelSet {
    pub fn for_task(task: Task) -> LabelSet {
        let labels: Vec<String> = match task {
            Task::Temporal6 => TEMPORAL6_LABELS.iter().map(|s| s.to_string()).collect(),
            Task::Temporal14 => TEMPORAL14_LABELS.iter().map(|s| s.to_string()).collect(),
            Task::Causal3 => CAUSAL3_LABELS.iter().map(|s| s.to_string()).collect(),
        };
        LabelSet { task, labels }
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}
