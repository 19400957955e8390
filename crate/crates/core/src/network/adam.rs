use serde::{Deserialize, Serialize};

use super::params::NetworkParams;
use super::tensor::Tensor;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.0002,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment accumulators, one per trainable tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(params: &NetworkParams<T>, config: AdamConfig) -> Self {
        let zeros = || params.tensors.iter().map(|t| vec![T::zero(); t.len()]).collect();
        Self {
            config,
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }

    /// One bias-corrected ADAM update of every trainable tensor.
    pub fn step(&mut self, params: &mut NetworkParams<T>, grads: &[Tensor<T>]) -> Result<()> {
        if grads.len() != params.tensors.len() || self.m.len() != grads.len() {
            return Err(Error::ShapeMismatch("gradient list does not match parameters".into()));
        }
        for ((p, g), m) in params.tensors.iter().zip(grads).zip(&self.m) {
            if p.len() != g.len() || p.len() != m.len() {
                return Err(Error::ShapeMismatch("gradient tensor size".into()));
            }
        }
        self.t += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        let (b1, b2) = (T::from_f64(c.beta1), T::from_f64(c.beta2));
        let (nb1, nb2) = (T::one() - b1, T::one() - b2);
        let step = T::from_f64(c.lr / bc1);
        let inv_bc2 = T::from_f64(1.0 / bc2);
        let eps = T::from_f64(c.eps);
        for (((p, g), m), v) in params
            .tensors
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for (((w, &gi), mi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = b1 * *mi + nb1 * gi;
                *vi = b2 * *vi + nb2 * gi * gi;
                *w -= step * *mi / ((*vi * inv_bc2).sqrt() + eps);
            }
        }
        Ok(())
    }
}
