//! CoNLL-U reader and writer. Columns read: ID, FORM, UPOS, HEAD, DEPREL.
//! Documents are delimited by `# newdoc id = <id>` comment lines, sentences
//! by blank lines. Multiword-token ranges (`1-2`) and empty nodes (`1.1`)
//! are skipped.

use super::{Document, Sentence, Token};
use crate::error::{Result, SercError};

pub fn parse_conllu(text: &str) -> Result<Vec<Document>> {
    let mut docs: Vec<Document> = Vec::new();
    let mut current: Option<Document> = None;
    let mut sentence = Sentence::default();
    let mut sentence_no = 0usize;

    let flush_sentence =
        |current: &mut Option<Document>, sentence: &mut Sentence, sentence_no: &mut usize| -> Result<()> {
            if sentence.tokens.is_empty() {
                return Ok(());
            }
            sentence.validate(*sentence_no)?;
            *sentence_no += 1;
            current
                .get_or_insert_with(|| Document {
                    doc_id: "doc0".into(),
                    sentences: Vec::new(),
                })
                .sentences
                .push(std::mem::take(sentence));
            Ok(())
        };

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            flush_sentence(&mut current, &mut sentence, &mut sentence_no)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(id) = comment.strip_prefix("newdoc id =") {
                flush_sentence(&mut current, &mut sentence, &mut sentence_no)?;
                if let Some(doc) = current.take() {
                    docs.push(doc);
                }
                current = Some(Document {
                    doc_id: id.trim().to_string(),
                    sentences: Vec::new(),
                });
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(SercError::Parse {
                line: lineno,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        // Skip range and empty-node ids.
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let index: usize = cols[0].parse().map_err(|_| SercError::Parse {
            line: lineno,
            message: format!("bad token id {:?}", cols[0]),
        })?;
        let head: usize = cols[6].parse().map_err(|_| SercError::Parse {
            line: lineno,
            message: format!("bad HEAD {:?}", cols[6]),
        })?;
        sentence.tokens.push(Token {
            index,
            surface: cols[1].to_string(),
            pos: cols[3].to_string(),
            dep_label: cols[7].to_string(),
            head,
        });
    }
    flush_sentence(&mut current, &mut sentence, &mut sentence_no)?;
    if let Some(doc) = current.take() {
        docs.push(doc);
    }

    let mut seen = std::collections::HashSet::new();
    for doc in &docs {
        if !seen.insert(doc.doc_id.clone()) {
            return Err(SercError::validation(format!(
                "duplicate document id {:?}",
                doc.doc_id
            )));
        }
    }
    Ok(docs)
}

/// Serialize documents back to the 10-column form. Columns not modeled are
/// written as `_`.
pub fn to_conllu(docs: &[Document]) -> String {
    let mut out = String::new();
    for doc in docs {
        out.push_str(&format!("# newdoc id = {}\n", doc.doc_id));
        for sent in &doc.sentences {
            for tok in &sent.tokens {
                out.push_str(&format!(
                    "{}\t{}\t_\t{}\t_\t_\t{}\t{}\t_\t_\n",
                    tok.index, tok.surface, tok.pos, tok.head, tok.dep_label
                ));
            }
            out.push('\n');
        }
    }
    out
}
