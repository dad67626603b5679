//! Central finite-difference verification of analytic gradients.
//!
//! The check runs the whole graph in 64-bit over [`FdPair`] values: each
//! parameter element in turn is seeded with the two perturbed settings
//! θ+ε and θ−ε, the loss is evaluated once for both paths simultaneously,
//! and the central difference is read off the exactly-propagated loss
//! difference. This keeps the comparison meaningful even for gradient
//! components far below the f64 cancellation floor of a naive
//! (loss₊ − loss₋)/2ε.

use num_traits::Float;

use super::fdpair::FdPair;
use super::gradients::{Gradients, ParamAccess};
use crate::error::{Result, SercError};

#[derive(Debug, Clone)]
pub struct GradCheckResult {
    pub max_rel_err: f64,
    /// Name of the worst parameter, with the flat element index.
    pub worst_param: String,
}

/// Compare `analytic` against central differences of `loss` (ε per element).
/// `model` must hold constant pairs (as produced by casting from f64);
/// `loss` must be a pure function of the model's current tensors.
///
/// Relative error per element: |a − fd| / max(|a|, |fd|, 1e-8).
pub fn grad_check<M: ParamAccess<FdPair>>(
    model: &mut M,
    analytic: &Gradients<f64>,
    mut loss: impl FnMut(&M) -> Result<FdPair>,
    eps: f64,
) -> Result<GradCheckResult> {
    let names = model.param_names();
    let mut max_rel_err = 0.0f64;
    let mut worst_param = String::new();
    for name in names {
        let len = model.param(&name).expect("name from param_names").len();
        for idx in 0..len {
            let orig = {
                let tensors = model.tensors_mut();
                let (_, tensor) = tensors.into_iter().find(|(n, _)| *n == name).unwrap();
                let orig = tensor.data()[idx];
                let plus = orig.a + eps;
                let minus = orig.a - eps;
                // The exact step actually applied (plus/minus are rounded).
                let step = (plus - orig.a) + (orig.a - minus);
                tensor.data_mut()[idx] = FdPair::seeded(plus, minus, step);
                orig
            };
            let out = loss(model);
            {
                let tensors = model.tensors_mut();
                let (_, tensor) = tensors.into_iter().find(|(n, _)| *n == name).unwrap();
                tensor.data_mut()[idx] = orig;
            }
            let out = out?;
            if !out.is_finite() {
                return Err(SercError::Numerical(format!(
                    "non-finite loss while perturbing {name}[{idx}]"
                )));
            }
            let step = {
                let plus = orig.a + eps;
                let minus = orig.a - eps;
                (plus - orig.a) + (orig.a - minus)
            };
            let fd = out.d / step;
            let a = analytic.get(&name).map(|m| m.data()[idx]).unwrap_or(0.0);
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-8);
            if rel > max_rel_err {
                max_rel_err = rel;
                worst_param = format!("{name}[{idx}]");
            }
        }
    }
    Ok(GradCheckResult {
        max_rel_err,
        worst_param,
    })
}
