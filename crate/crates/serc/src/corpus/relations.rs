//! JSON Lines reader for relation annotations. One object per line:
//! {"doc_id": str, "e1": {"sent": int, "tok": int}, "e2": {...},
//!  "task": "TEMPORAL6"|"TEMPORAL14"|"CAUSAL3", "label": str}

use super::RelationInstance;
use crate::error::{Result, SercError};

fn parse_line(line: &str, lineno: usize) -> Result<RelationInstance> {
    let inst: RelationInstance = serde_json::from_str(line).map_err(|e| SercError::Parse {
        line: lineno,
        message: e.to_string(),
    })?;
    inst.validate().map_err(|e| SercError::Validation {
        line: Some(lineno),
        message: e.to_string(),
    })?;
    Ok(inst)
}

/// Strict mode: the first malformed or invalid line aborts the parse.
pub fn parse_relations(jsonl: &str) -> Result<Vec<RelationInstance>> {
    let mut out = Vec::new();
    for (lineno, line) in jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_line(line, lineno + 1)?);
    }
    Ok(out)
}

/// Lenient mode: bad lines are collected instead of aborting.
pub fn parse_relations_lenient(jsonl: &str) -> (Vec<RelationInstance>, Vec<SercError>) {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (lineno, line) in jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line, lineno + 1) {
            Ok(inst) => out.push(inst),
            Err(e) => errors.push(e),
        }
    }
    (out, errors)
}

/// Serialize instances to the JSON Lines schema.
pub fn to_jsonl(instances: &[RelationInstance]) -> Result<String> {
    let mut out = String::new();
    for inst in instances {
        out.push_str(&serde_json::to_string(inst)?);
        out.push('\n');
    }
    Ok(out)
}
