use super::matrix::Scalar;
use crate::error::{Result, SercError};

/// Numerically stable softmax (max subtraction).
pub fn softmax<F: Scalar>(logits: &[F]) -> Vec<F> {
    let max = logits
        .iter()
        .cloned()
        .fold(F::neg_infinity(), |a, b| a.max(b));
    let exps: Vec<F> = logits.iter().map(|z| (*z - max).exp()).collect();
    let sum: F = exps.iter().cloned().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Softmax cross-entropy: loss = -ln probs[gold], dlogits = probs - onehot(gold).
pub fn softmax_xent<F: Scalar>(logits: &[F], gold: usize) -> Result<(F, Vec<F>, Vec<F>)> {
    if gold >= logits.len() {
        return Err(SercError::Index(format!(
            "gold class {gold} out of range for {} logits",
            logits.len()
        )));
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(SercError::Numerical("non-finite logits".into()));
    }
    let probs = softmax(logits);
    let loss = -probs[gold].max(F::from_f64(f64::MIN_POSITIVE)).ln();
    let mut dlogits = probs.clone();
    dlogits[gold] -= F::one();
    Ok((loss, probs, dlogits))
}
