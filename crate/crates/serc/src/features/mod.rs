//! Feature extraction: the dependency graph over an instance's sentence
//! span, the path between the two event mentions, the three feature
//! sequences, and their numeric encoding.
//!
//! Cross-sentence instances are joined by a virtual document root adjacent
//! to every sentence root. The virtual node emits no token.

use std::collections::VecDeque;

use crate::corpus::{
    Document, EmbeddingTable, EventMention, RelationInstance, TagInventory,
    Task,
};
use crate::error::{Result, SercError};
use crate::nn::{Matrix, Scalar};

/// Path words are capped at this many tokens (endpoints kept, middle dropped).
pub const PATH_CAP: usize = 40;
/// Full-text sequences are capped at this many tokens by windowing so both
/// event tokens stay inside the window.
pub const TEXT_CAP: usize = 200;

/// Undirected view of the dependency trees covering the instance's sentence
/// span, with an optional virtual root joining sentence roots.
#[derive(Debug, Clone)]
pub struct DepGraph {
    adj: Vec<Vec<usize>>,
    /// (sentence_idx, token_idx) of each token node; the virtual root, when
    /// present, is the last node and has no entry here.
    node_pos: Vec<(usize, usize)>,
    virtual_root: Option<usize>,
    first_sentence: usize,
    /// Node offset of each sentence in the span.
    offsets: Vec<usize>,
}

impl DepGraph {
    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|n| n.len()).sum::<usize>() / 2
    }

    pub fn has_virtual_root(&self) -> bool {
        self.virtual_root.is_some()
    }

    pub fn node_of(&self, m: &EventMention) -> Result<usize> {
        if m.sentence_idx < self.first_sentence
            || m.sentence_idx - self.first_sentence >= self.offsets.len()
        {
            return Err(SercError::Index(format!(
                "mention sentence {} outside graph span",
                m.sentence_idx
            )));
        }
        let node = self.offsets[m.sentence_idx - self.first_sentence] + m.token_idx;
        let next_offset = self
            .offsets
            .get(m.sentence_idx - self.first_sentence + 1)
            .copied()
            .unwrap_or(self.node_pos.len());
        if node >= next_offset {
            return Err(SercError::Index(format!(
                "mention token {} outside sentence {}",
                m.token_idx, m.sentence_idx
            )));
        }
        Ok(node)
    }
}

/// Build the graph over sentences min(e1.sent, e2.sent)..=max(...). A
/// virtual root is added iff the events live in different sentences.
pub fn build_dep_graph(doc: &Document, e1: &EventMention, e2: &EventMention) -> Result<DepGraph> {
    e1.check_in(doc)?;
    e2.check_in(doc)?;
    let lo = e1.sentence_idx.min(e2.sentence_idx);
    let hi = e1.sentence_idx.max(e2.sentence_idx);

    let mut node_pos = Vec::new();
    let mut offsets = Vec::new();
    for s in lo..=hi {
        offsets.push(node_pos.len());
        for t in 0..doc.sentences[s].tokens.len() {
            node_pos.push((s, t));
        }
    }
    let token_nodes = node_pos.len();
    let needs_root = e1.sentence_idx != e2.sentence_idx;
    let total = token_nodes + usize::from(needs_root);
    let mut adj = vec![Vec::new(); total];
    let virtual_root = needs_root.then_some(token_nodes);

    for (si, s) in (lo..=hi).enumerate() {
        let base = offsets[si];
        for (t, tok) in doc.sentences[s].tokens.iter().enumerate() {
            let node = base + t;
            if tok.head == 0 {
                if let Some(root) = virtual_root {
                    adj[node].push(root);
                    adj[root].push(node);
                }
            } else {
                let head = base + tok.head - 1;
                adj[node].push(head);
                adj[head].push(node);
            }
        }
    }
    Ok(DepGraph {
        adj,
        node_pos,
        virtual_root,
        first_sentence: lo,
        offsets,
    })
}

/// Ordered token references from e1's token to e2's token; the virtual root
/// contributes no entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyPath {
    pub tokens: Vec<(usize, usize)>,
}

/// The unique simple path in the tree, found by breadth-first search.
pub fn extract_path(graph: &DepGraph, e1: &EventMention, e2: &EventMention) -> Result<DependencyPath> {
    let start = graph.node_of(e1)?;
    let goal = graph.node_of(e2)?;
    let mut prev = vec![usize::MAX; graph.adj.len()];
    let mut seen = vec![false; graph.adj.len()];
    let mut queue = VecDeque::new();
    seen[start] = true;
    queue.push_back(start);
    while let Some(node) = queue.pop_front() {
        if node == goal {
            break;
        }
        for &next in &graph.adj[node] {
            if !seen[next] {
                seen[next] = true;
                prev[next] = node;
                queue.push_back(next);
            }
        }
    }
    if !seen[goal] {
        return Err(SercError::Structure {
            sentence: e2.sentence_idx,
            message: "dependency graph is disconnected".into(),
        });
    }
    let mut nodes = vec![goal];
    let mut cur = goal;
    while cur != start {
        cur = prev[cur];
        nodes.push(cur);
    }
    nodes.reverse();
    let tokens = nodes
        .into_iter()
        .filter(|n| Some(*n) != graph.virtual_root)
        .map(|n| graph.node_pos[n])
        .collect();
    Ok(DependencyPath { tokens })
}

/// The three raw sequences of one instance: surface words along the
/// dependency path, and the full-text POS and dependency-label sequences
/// (index-aligned) over the instance's sentence span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSequences {
    pub path_words: Vec<String>,
    pub pos_tags: Vec<String>,
    pub dep_labels: Vec<String>,
    /// Positions of e1 and e2 within the (possibly windowed) full-text
    /// sequences.
    pub event_positions: (usize, usize),
}

fn truncate_middle<T: Clone>(items: &[T], cap: usize) -> Vec<T> {
    if items.len() <= cap {
        return items.to_vec();
    }
    let head = cap / 2;
    let tail = cap - head;
    let mut out = items[..head].to_vec();
    out.extend_from_slice(&items[items.len() - tail..]);
    out
}

pub fn extract_sequences(doc: &Document, inst: &RelationInstance) -> Result<FeatureSequences> {
    let graph = build_dep_graph(doc, &inst.e1, &inst.e2)?;
    let path = extract_path(&graph, &inst.e1, &inst.e2)?;
    let path_words: Vec<String> = truncate_middle(
        &path
            .tokens
            .iter()
            .map(|&(s, t)| doc.sentences[s].tokens[t].surface.clone())
            .collect::<Vec<_>>(),
        PATH_CAP,
    );

    let lo = inst.e1.sentence_idx.min(inst.e2.sentence_idx);
    let hi = inst.e1.sentence_idx.max(inst.e2.sentence_idx);
    let mut span: Vec<(usize, usize)> = Vec::new();
    for s in lo..=hi {
        for t in 0..doc.sentences[s].tokens.len() {
            span.push((s, t));
        }
    }
    let find = |m: &EventMention| {
        span.iter()
            .position(|&p| p == (m.sentence_idx, m.token_idx))
            .expect("mention inside span")
    };
    let (p1, p2) = (find(&inst.e1), find(&inst.e2));

    // Window to TEXT_CAP tokens, keeping both event tokens inside.
    let (kept, e1_pos, e2_pos) = if span.len() <= TEXT_CAP {
        (span, p1, p2)
    } else if p2 - p1 < TEXT_CAP {
        let max_start = span.len() - TEXT_CAP;
        let start = ((p1 + p2 + 1) / 2)
            .saturating_sub(TEXT_CAP / 2)
            .min(p1)
            .max(p2 + 1 - TEXT_CAP.min(p2 + 1))
            .min(max_start);
        (
            span[start..start + TEXT_CAP].to_vec(),
            p1 - start,
            p2 - start,
        )
    } else {
        // Events too far apart for one window: a chunk after e1 and a chunk
        // before e2.
        let half = TEXT_CAP / 2;
        let mut kept = span[p1..p1 + half].to_vec();
        let e2_chunk_start = p2 + 1 - half;
        let e2_pos = kept.len() + (p2 - e2_chunk_start);
        kept.extend_from_slice(&span[e2_chunk_start..=p2]);
        (kept, 0, e2_pos)
    };

    let pos_tags = kept
        .iter()
        .map(|&(s, t)| doc.sentences[s].tokens[t].pos.clone())
        .collect();
    let dep_labels = kept
        .iter()
        .map(|&(s, t)| doc.sentences[s].tokens[t].dep_label.clone())
        .collect();
    Ok(FeatureSequences {
        path_words,
        pos_tags,
        dep_labels,
        event_positions: (e1_pos, e2_pos),
    })
}

/// Numeric form of one instance: path-word embeddings plus full-text one-hot
/// matrices. Each one-hot row has exactly one 1 (plus an optional trailing
/// event-marker bit when enabled).
#[derive(Debug, Clone)]
pub struct EncodedInstance<F> {
    pub word_vecs: Matrix<F>,
    pub pos_onehots: Matrix<F>,
    pub dep_onehots: Matrix<F>,
    pub label_id: usize,
    pub task: Task,
}

impl<F: Scalar> EncodedInstance<F> {
    /// The same instance with values converted to another scalar type.
    pub fn cast<G: Scalar>(&self) -> EncodedInstance<G> {
        EncodedInstance {
            word_vecs: self.word_vecs.cast(),
            pos_onehots: self.pos_onehots.cast(),
            dep_onehots: self.dep_onehots.cast(),
            label_id: self.label_id,
            task: self.task,
        }
    }
}

fn onehots<F: Scalar>(
    tags: &[String],
    inv: &TagInventory,
    event_marker: bool,
    events: (usize, usize),
) -> Matrix<F> {
    let width = inv.len() + usize::from(event_marker);
    let mut m = Matrix::zeros(tags.len(), width);
    for (t, tag) in tags.iter().enumerate() {
        m.set(t, inv.id(tag), F::one());
        if event_marker && (t == events.0 || t == events.1) {
            m.set(t, width - 1, F::one());
        }
    }
    m
}

pub fn encode<F: Scalar>(
    seqs: &FeatureSequences,
    pos_inv: &TagInventory,
    dep_inv: &TagInventory,
    emb: &EmbeddingTable,
    label_id: usize,
    task: Task,
    event_marker: bool,
) -> EncodedInstance<F> {
    let mut word_vecs = Matrix::zeros(seqs.path_words.len(), emb.dim());
    for (t, word) in seqs.path_words.iter().enumerate() {
        let vec = emb.lookup(&word.to_lowercase());
        for (c, v) in vec.iter().enumerate() {
            word_vecs.set(t, c, F::from_f32(*v));
        }
    }
    EncodedInstance {
        word_vecs,
        pos_onehots: onehots(&seqs.pos_tags, pos_inv, event_marker, seqs.event_positions),
        dep_onehots: onehots(&seqs.dep_labels, dep_inv, event_marker, seqs.event_positions),
        label_id,
        task,
    }
}

/// Convenience wrapper: sequences + encoding for one instance.
pub fn encode_instance<F: Scalar>(
    doc: &Document,
    inst: &RelationInstance,
    pos_inv: &TagInventory,
    dep_inv: &TagInventory,
    emb: &EmbeddingTable,
    event_marker: bool,
) -> Result<EncodedInstance<F>> {
    let seqs = extract_sequences(doc, inst)?;
    Ok(encode(
        &seqs,
        pos_inv,
        dep_inv,
        emb,
        inst.label_id(),
        inst.task,
        event_marker,
    ))
}
