use std::collections::BTreeMap;

use super::gradients::{Gradients, ParamAccess};
use super::matrix::{Matrix, Scalar};
use crate::error::{Result, SercError};

/// Optimizer hyperparameters. Defaults: lr 1e-3, beta1 0.9, beta2 0.999,
/// eps 1e-8.
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Per-parameter first and second moment accumulators plus step counter.
#[derive(Debug, Clone, Default)]
pub struct AdamState<F> {
    pub t: u64,
    m: BTreeMap<String, Matrix<F>>,
    v: BTreeMap<String, Matrix<F>>,
}

impl<F: Scalar> AdamState<F> {
    pub fn new() -> Self {
        AdamState {
            t: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    /// One bias-corrected update over every trainable tensor. Tensors with
    /// no recorded gradient are left untouched.
    pub fn step<M: ParamAccess<F>>(
        &mut self,
        model: &mut M,
        grads: &Gradients<F>,
        cfg: &AdamConfig,
    ) -> Result<()> {
        self.t += 1;
        for (name, param) in model.tensors_mut() {
            let Some(grad) = grads.get(&name) else {
                continue;
            };
            if grad.rows() != param.rows() || grad.cols() != param.cols() {
                return Err(SercError::Dimension(format!(
                    "adam: gradient for {name} is {}x{} but parameter is {}x{}",
                    grad.rows(),
                    grad.cols(),
                    param.rows(),
                    param.cols()
                )));
            }
            let m = self
                .m
                .entry(name.clone())
                .or_insert_with(|| Matrix::zeros(param.rows(), param.cols()));
            let v = self
                .v
                .entry(name.clone())
                .or_insert_with(|| Matrix::zeros(param.rows(), param.cols()));
            adam_update_tensor(param, grad, m, v, self.t, cfg);
        }
        Ok(())
    }
}

/// The standard bias-corrected update for one tensor.
pub fn adam_update_tensor<F: Scalar>(
    param: &mut Matrix<F>,
    grad: &Matrix<F>,
    m: &mut Matrix<F>,
    v: &mut Matrix<F>,
    t: u64,
    cfg: &AdamConfig,
) {
    let b1 = F::from_f64(cfg.beta1);
    let b2 = F::from_f64(cfg.beta2);
    let lr = F::from_f64(cfg.lr);
    let eps = F::from_f64(cfg.eps);
    let one = F::one();
    let bc1 = one - F::from_f64(cfg.beta1.powi(t as i32));
    let bc2 = one - F::from_f64(cfg.beta2.powi(t as i32));
    let pd = param.data_mut();
    let gd = grad.data();
    let md = m.data_mut();
    let vd = v.data_mut();
    for k in 0..pd.len() {
        md[k] = b1 * md[k] + (one - b1) * gd[k];
        vd[k] = b2 * vd[k] + (one - b2) * gd[k] * gd[k];
        let m_hat = md[k] / bc1;
        let v_hat = vd[k] / bc2;
        pd[k] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor(vals: &[f64]) -> Matrix<f64> {
        Matrix::from_vec(1, vals.len(), vals.to_vec()).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let cfg = AdamConfig::default();
        let mut p = tensor(&[0.5, -0.25]);
        let g = tensor(&[0.0, 0.0]);
        let mut m = Matrix::zeros(1, 2);
        let mut v = Matrix::zeros(1, 2);
        adam_update_tensor(&mut p, &g, &mut m, &mut v, 1, &cfg);
        assert_eq!(p.data(), &[0.5, -0.25]);
    }

    #[test]
    fn first_step_moves_by_lr_sign() {
        let cfg = AdamConfig::default();
        let mut p = tensor(&[0.0, 0.0]);
        let g = tensor(&[0.3, -2.0]);
        let mut m = Matrix::zeros(1, 2);
        let mut v = Matrix::zeros(1, 2);
        adam_update_tensor(&mut p, &g, &mut m, &mut v, 1, &cfg);
        // bias correction makes the first step ~ -lr * sign(g) for eps << |g|
        assert!((p.data()[0] + cfg.lr).abs() < 1e-3 * cfg.lr);
        assert!((p.data()[1] - cfg.lr).abs() < 1e-3 * cfg.lr);
    }

    #[test]
    fn two_steps_match_scalar_reference() {
        let cfg = AdamConfig {
            lr: 0.01,
            ..AdamConfig::default()
        };
        let grads = [[0.4, -1.1], [-0.2, 0.9]];
        let mut p = tensor(&[1.0, -1.0]);
        let mut m = Matrix::zeros(1, 2);
        let mut v = Matrix::zeros(1, 2);
        for (i, g) in grads.iter().enumerate() {
            adam_update_tensor(&mut p, &tensor(g), &mut m, &mut v, (i + 1) as u64, &cfg);
        }

        // 10-line scalar reference.
        let mut theta = [1.0f64, -1.0];
        let (mut mr, mut vr) = ([0.0f64; 2], [0.0f64; 2]);
        for (step, g) in grads.iter().enumerate() {
            let t = (step + 1) as i32;
            for k in 0..2 {
                mr[k] = 0.9 * mr[k] + 0.1 * g[k];
                vr[k] = 0.999 * vr[k] + 0.001 * g[k] * g[k];
                let mh = mr[k] / (1.0 - 0.9f64.powi(t));
                let vh = vr[k] / (1.0 - 0.999f64.powi(t));
                theta[k] -= 0.01 * mh / (vh.sqrt() + 1e-8);
            }
        }
        for k in 0..2 {
            let rel = (p.data()[k] - theta[k]).abs() / theta[k].abs().max(1e-8);
            assert!(rel <= 1e-7, "k={k}: {} vs {}", p.data()[k], theta[k]);
        }
    }
}
