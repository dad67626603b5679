use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gradients::Gradients;
use super::lstm::glorot_uniform;
use super::matrix::{Matrix, Scalar};
use crate::error::{Result, SercError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Debug, Clone)]
pub struct DenseParams<F> {
    /// out x in weights.
    pub w: Matrix<F>,
    /// out x 1 bias.
    pub b: Matrix<F>,
    pub activation: Activation,
}

impl<F: Scalar> DenseParams<F> {
    pub fn zeros(out: usize, input: usize, activation: Activation) -> Self {
        DenseParams {
            w: Matrix::zeros(out, input),
            b: Matrix::zeros(out, 1),
            activation,
        }
    }

    pub fn init(out: usize, input: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        DenseParams {
            w: glorot_uniform(out, input, rng),
            b: Matrix::zeros(out, 1),
            activation,
        }
    }

    pub fn out_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn cast<G: Scalar>(&self) -> DenseParams<G> {
        DenseParams {
            w: self.w.cast(),
            b: self.b.cast(),
            activation: self.activation,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DenseCache<F> {
    x: Vec<F>,
    /// Pre-activation values.
    z: Vec<F>,
}

/// y = act(Wx + b)
pub fn dense_forward<F: Scalar>(
    p: &DenseParams<F>,
    x: &[F],
) -> Result<(Vec<F>, DenseCache<F>)> {
    if x.len() != p.in_dim() {
        return Err(SercError::Dimension(format!(
            "dense: input {} vs expected {}",
            x.len(),
            p.in_dim()
        )));
    }
    let mut z = p.w.matvec(x);
    for (r, zi) in z.iter_mut().enumerate() {
        *zi += p.b.get(r, 0);
    }
    let y = match p.activation {
        Activation::Relu => z.iter().map(|v| v.max(F::zero())).collect(),
        Activation::Identity => z.clone(),
    };
    Ok((
        y,
        DenseCache {
            x: x.to_vec(),
            z,
        },
    ))
}

/// Backward through a dense layer; returns dL/dx.
pub fn dense_backward<F: Scalar>(
    p: &DenseParams<F>,
    cache: &DenseCache<F>,
    dy: &[F],
    grads: &mut Gradients<F>,
    prefix: &str,
) -> Vec<F> {
    let dz: Vec<F> = match p.activation {
        Activation::Relu => cache
            .z
            .iter()
            .zip(dy)
            .map(|(z, d)| if *z > F::zero() { *d } else { F::zero() })
            .collect(),
        Activation::Identity => dy.to_vec(),
    };
    let mut dw = Matrix::zeros(p.out_dim(), p.in_dim());
    dw.add_outer(&dz, &cache.x);
    let db = Matrix::from_fn(p.out_dim(), 1, |r, _| dz[r]);
    let dx = p.w.matvec_t(&dz);
    grads.accumulate(&format!("{prefix}.w"), dw);
    grads.accumulate(&format!("{prefix}.b"), db);
    dx
}
