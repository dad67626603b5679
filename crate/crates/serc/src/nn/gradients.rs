use std::collections::BTreeMap;

use super::matrix::{Matrix, Scalar};

/// Gradients keyed by parameter name, accumulated over a batch.
#[derive(Debug, Clone, Default)]
pub struct Gradients<F> {
    tensors: BTreeMap<String, Matrix<F>>,
}

impl<F: Scalar> Gradients<F> {
    pub fn new() -> Self {
        Gradients {
            tensors: BTreeMap::new(),
        }
    }

    pub fn accumulate(&mut self, name: &str, grad: Matrix<F>) {
        match self.tensors.get_mut(name) {
            Some(existing) => existing.add_assign(&grad),
            None => {
                self.tensors.insert(name.to_string(), grad);
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&Matrix<F>> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Matrix<F>> {
        self.tensors.get_mut(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Matrix<F>)> {
        self.tensors.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn clear(&mut self) {
        self.tensors.clear();
    }

    pub fn scale(&mut self, s: F) {
        for m in self.tensors.values_mut() {
            m.scale(s);
        }
    }

    pub fn global_norm(&self) -> F {
        self.tensors
            .values()
            .map(|m| m.sq_norm())
            .fold(F::zero(), |a, b| a + b)
            .sqrt()
    }

    /// Scale all gradients so the global norm does not exceed `max_norm`.
    /// Returns the post-clip norm.
    pub fn clip_global_norm(&mut self, max_norm: F) -> F {
        let norm = self.global_norm();
        if norm > max_norm && norm > F::zero() {
            self.scale(max_norm / norm);
            max_norm
        } else {
            norm
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.values().all(|m| m.all_finite())
    }
}

/// Read/write access to a model's trainable tensors by name.
pub trait ParamAccess<F: Scalar> {
    fn tensors(&self) -> Vec<(String, &Matrix<F>)>;
    fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix<F>)>;

    fn param_names(&self) -> Vec<String> {
        self.tensors().into_iter().map(|(n, _)| n).collect()
    }

    fn param(&self, name: &str) -> Option<&Matrix<F>> {
        self.tensors()
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
    }

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.len()).sum()
    }
}
