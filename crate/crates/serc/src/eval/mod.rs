//! Confusion-matrix scoring: per-class precision/recall/F1, micro averages,
//! accuracy, and text/JSON report rendering.
//!
//! All percentages are carried at full precision; rounding (half away from
//! zero, one decimal) happens only in the text renderer. A class for which
//! the model made no predictions has undefined precision and is rendered
//! `-`; micro metrics are computed from raw counts and stay well-defined.

use serde::{Deserialize, Serialize};

use crate::corpus::LabelSet;
use crate::error::{Result, SercError};

/// C×C counts, rows = gold, cols = predicted.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    labels: LabelSet,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(labels: LabelSet) -> Self {
        let c = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![0; c * c],
        }
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn add(&mut self, gold_id: usize, pred_id: usize) -> Result<()> {
        let c = self.labels.len();
        if gold_id >= c || pred_id >= c {
            return Err(SercError::Index(format!(
                "class id out of range: gold {gold_id}, pred {pred_id}, {c} classes"
            )));
        }
        self.counts[gold_id * c + pred_id] += 1;
        Ok(())
    }

    pub fn count(&self, gold_id: usize, pred_id: usize) -> u64 {
        self.counts[gold_id * self.labels.len() + pred_id]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Diagonal sum: instances whose prediction equals the gold label.
    pub fn correct(&self) -> u64 {
        let c = self.labels.len();
        (0..c).map(|i| self.counts[i * c + i]).sum()
    }

    pub fn support(&self, gold_id: usize) -> u64 {
        let c = self.labels.len();
        self.counts[gold_id * c..(gold_id + 1) * c].iter().sum()
    }

    pub fn predicted(&self, pred_id: usize) -> u64 {
        let c = self.labels.len();
        (0..c).map(|g| self.counts[g * c + pred_id]).sum()
    }
}

/// Tally gold/predicted label pairs against a label set.
pub fn confusion(golds: &[&str], preds: &[&str], labels: &LabelSet) -> Result<ConfusionMatrix> {
    if golds.len() != preds.len() {
        return Err(SercError::validation(format!(
            "{} gold labels but {} predictions",
            golds.len(),
            preds.len()
        )));
    }
    let mut cm = ConfusionMatrix::new(labels.clone());
    for (g, p) in golds.iter().zip(preds) {
        let gid = labels
            .id(g)
            .ok_or_else(|| SercError::validation(format!("unknown gold label {g:?}")))?;
        let pid = labels
            .id(p)
            .ok_or_else(|| SercError::validation(format!("unknown predicted label {p:?}")))?;
        cm.add(gid, pid)?;
    }
    Ok(cm)
}

/// Per-class scores as percentages. `None` marks an undefined value:
/// precision when the class was never predicted, recall when it has no gold
/// instances, F1 when either side is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub support: u64,
    pub predicted: u64,
}

/// Harmonic mean of two percentages; 0 when both are 0.
pub fn harmonic_f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

pub fn per_class_metrics(cm: &ConfusionMatrix) -> Vec<ClassMetrics> {
    (0..cm.num_classes())
        .map(|i| {
            let tp = cm.count(i, i);
            let support = cm.support(i);
            let predicted = cm.predicted(i);
            let precision = (predicted > 0).then(|| 100.0 * tp as f64 / predicted as f64);
            let recall = (support > 0).then(|| 100.0 * tp as f64 / support as f64);
            let f1 = match (precision, recall) {
                (Some(p), Some(r)) => Some(harmonic_f1(p, r)),
                _ => None,
            };
            ClassMetrics {
                label: cm.labels().label(i).expect("id in range").to_string(),
                precision,
                recall,
                f1,
                support,
                predicted,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Pooled-count scores. Every instance has exactly one gold and one predicted
/// label, so micro precision = recall = F1 = accuracy = correct/total.
pub fn micro_metrics(cm: &ConfusionMatrix) -> Result<(MicroMetrics, f64)> {
    let total = cm.total();
    if total == 0 {
        return Err(SercError::validation("empty confusion matrix"));
    }
    let acc = 100.0 * cm.correct() as f64 / total as f64;
    Ok((
        MicroMetrics {
            precision: acc,
            recall: acc,
            f1: acc,
        },
        acc,
    ))
}

/// Everything the renderers need, in exact (unrounded) form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub per_class: Vec<ClassMetrics>,
    pub micro: MicroMetrics,
    pub accuracy: f64,
    pub n: u64,
}

pub fn report(cm: &ConfusionMatrix) -> Result<Report> {
    let (micro, accuracy) = micro_metrics(cm)?;
    Ok(Report {
        per_class: per_class_metrics(cm),
        micro,
        accuracy,
        n: cm.total(),
    })
}

/// Round half away from zero to one decimal place.
pub fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{:.1}", round1(v)),
        None => "-".to_string(),
    }
}

/// One row per class plus an Avg row; `-` where a value is undefined.
pub fn render_text(r: &Report) -> String {
    let label_w = r
        .per_class
        .iter()
        .map(|c| c.label.len())
        .chain(["Class".len(), "Avg".len()])
        .max()
        .unwrap_or(5);
    let mut out = String::new();
    out.push_str(&format!(
        "{:<label_w$}  {:>7}  {:>7}  {:>7}  {:>8}\n",
        "Class", "P", "R", "F1", "Support"
    ));
    for c in &r.per_class {
        out.push_str(&format!(
            "{:<label_w$}  {:>7}  {:>7}  {:>7}  {:>8}\n",
            c.label,
            cell(c.precision),
            cell(c.recall),
            cell(c.f1),
            c.support
        ));
    }
    out.push_str(&format!(
        "{:<label_w$}  {:>7}  {:>7}  {:>7}  {:>8}\n",
        "Avg",
        cell(Some(r.micro.precision)),
        cell(Some(r.micro.recall)),
        cell(Some(r.micro.f1)),
        r.n
    ));
    out.push_str(&format!(
        "Accuracy: {:.1} (n={})\n",
        round1(r.accuracy),
        r.n
    ));
    out
}

/// Exact numbers (no rounding); undefined values serialize as null.
pub fn render_json(r: &Report) -> Result<String> {
    Ok(serde_json::to_string_pretty(r)?)
}
