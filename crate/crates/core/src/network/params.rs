use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{NetworkConfig, Plan};
use super::tensor::Tensor;
use crate::{Real, Result};

/// Running batch-norm statistics for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

/// All learnable tensors, in the plan's canonical slot order, plus the
/// batch-norm running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    pub names: Vec<String>,
    pub tensors: Vec<Tensor<T>>,
    pub running: Vec<RunningStats<T>>,
}

impl<T: Real> NetworkParams<T> {
    /// Glorot-uniform weights, zero biases, unit gamma, zero beta, running
    /// mean 0 and variance 1.
    pub fn init(plan: &Plan, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut names = Vec::new();
        let mut tensors = Vec::new();
        for spec in &plan.tensors {
            names.push(spec.name.clone());
            let t = match spec.fans {
                Some((fan_in, fan_out)) => {
                    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    let n: usize = spec.shape.iter().product();
                    let data = (0..n)
                        .map(|_| T::from_f64(rng.random_range(-bound..bound)))
                        .collect();
                    Tensor::from_vec(&spec.shape, data).expect("shape product")
                }
                None => Tensor::filled(&spec.shape, T::from_f64(spec.fill)),
            };
            tensors.push(t);
        }
        let running = plan
            .bn_slots
            .iter()
            .map(|&(_, _, ch)| RunningStats {
                mean: vec![T::zero(); ch],
                var: vec![T::one(); ch],
            })
            .collect();
        Self {
            names,
            tensors,
            running,
        }
    }

    pub fn zeros_like(&self) -> Vec<Tensor<T>> {
        self.tensors.iter().map(|t| Tensor::zeros(t.shape())).collect()
    }

    pub fn num_trainable(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn cast<U: Real>(&self) -> NetworkParams<U> {
        let conv = |v: &[T]| v.iter().map(|&x| U::from_f64(x.as_f64())).collect();
        NetworkParams {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
            running: self
                .running
                .iter()
                .map(|r| RunningStats {
                    mean: conv(&r.mean),
                    var: conv(&r.var),
                })
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
            && self
                .running
                .iter()
                .all(|r| r.mean.iter().chain(&r.var).all(|x| x.is_finite()))
    }
}

pub fn init_network<T: Real>(config: &NetworkConfig, seed: u64) -> Result<NetworkParams<T>> {
    Ok(NetworkParams::init(&config.plan()?, seed))
}
