//! Central finite-difference check of [`Network::backward`].
//!
//! Perturbed passes replay the reference pass's dropout masks, ReLU gates
//! and max-pool winners ([`Network::forward_train_frozen`]). Where the
//! perturbation stays inside the reference region this is the ordinary
//! loss; where it would cross a kink, it is the smooth continuation of the
//! reference piece, whose derivative at the reference point is still the
//! true gradient.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{LayerConfig, NetworkConfig, Padding};
use super::loss::{bce_logit_grad, bce_loss};
use super::model::{Network, OutputGrad};
use crate::Result;

/// Central difference formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// `(L(w+h) - L(w-h)) / 2h`, error O(h^2).
    ThreePoint,
    /// `(-L(w+2h) + 8L(w+h) - 8L(w-h) + L(w-2h)) / 12h`, error O(h^4).
    FivePoint,
}

#[derive(Debug, Clone)]
pub struct GradCheckOptions {
    pub step: f64,
    pub stencil: Stencil,
    /// Coordinates sampled per tensor (all of them if the tensor is smaller).
    pub per_tensor: usize,
    pub batch: usize,
    pub seed: u64,
    /// Gradients below this magnitude are compared absolutely against it.
    pub floor: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            stencil: Stencil::FivePoint,
            per_tensor: 60,
            batch: 4,
            seed: 0,
            floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordResult {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, Default)]
pub struct GradCheckReport {
    pub checked: Vec<CoordResult>,
    /// Coordinates where some stencil point lies across a ReLU or pooling
    /// kink of the reference pass.
    pub crossed_kinks: usize,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.checked.iter().map(|c| c.rel_err).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&CoordResult> {
        self.checked.iter().max_by(|a, b| a.rel_err.total_cmp(&b.rel_err))
    }
}

/// Two same-padded conv layers (4 and 8 channels, width 8) on 64-sample
/// inputs, each followed by 2x max pooling, batch norm and dropout 0.25.
pub fn toy_check_config() -> NetworkConfig {
    let conv = |out_channels| LayerConfig::Conv1d {
        out_channels,
        kernel_width: 8,
        stride: 1,
        padding: Padding::Same,
        has_batchnorm: true,
        dropout_p: 0.25,
    };
    NetworkConfig {
        input_len: 64,
        output_dim: crate::cents::N_BINS,
        latent_size: 8 * 16,
        block_order: Default::default(),
        layers: vec![
            conv(4),
            LayerConfig::Maxpool { pool_width: 2 },
            conv(8),
            LayerConfig::Maxpool { pool_width: 2 },
            LayerConfig::DenseSigmoid,
        ],
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Moves biases, gammas and betas off their initial constants so their
/// gradients are generic.
pub fn perturb_affine(net: &mut Network<f64>, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (name, t) in net.params.names.iter().zip(net.params.tensors.iter_mut()) {
        let base = if name.ends_with("gamma") { 1.0 } else { 0.0 };
        if name.ends_with("bias") || name.ends_with("gamma") || name.ends_with("beta") {
            for v in t.data_mut() {
                *v = base + rng.random_range(-0.3..0.3);
            }
        }
    }
}

/// Compares analytic BCE gradients with central differences on random
/// inputs and targets.
pub fn check_gradients(net: &mut Network<f64>, opts: &GradCheckOptions) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let x = uniform(&mut rng, opts.batch * net.input_len(), -1.0, 1.0);
    let y = uniform(&mut rng, opts.batch * net.output_dim(), 0.0, 1.0);
    let (pred, cache) = net.forward_train(&x, opts.batch, &mut rng)?;
    let signature = cache.region_signature();
    let masks = cache.dropout_masks();
    let grads = net.backward(&cache, OutputGrad::Logit(bce_logit_grad(&y, &pred)))?;

    let mut report = GradCheckReport::default();
    for ti in 0..net.params.tensors.len() {
        let len = net.params.tensors[ti].len();
        let mut coords: Vec<usize> = (0..len).collect();
        coords.shuffle(&mut rng);
        coords.truncate(opts.per_tensor);
        for i in coords {
            let orig = net.params.tensors[ti].data()[i];
            let mut crossed = false;
            let mut loss = |v: f64| -> Result<f64> {
                net.params.tensors[ti].data_mut()[i] = v;
                let (_, c) = net.forward_train_with_masks(&x, opts.batch, &masks)?;
                crossed |= c.region_signature() != signature;
                let (p, _) = net.forward_train_frozen(&x, opts.batch, &cache)?;
                Ok(bce_loss(&y, &p).0)
            };
            let h = opts.step;
            let numeric = match opts.stencil {
                Stencil::ThreePoint => (loss(orig + h)? - loss(orig - h)?) / (2.0 * h),
                Stencil::FivePoint => {
                    let (p1, m1) = (loss(orig + h)?, loss(orig - h)?);
                    let (p2, m2) = (loss(orig + 2.0 * h)?, loss(orig - 2.0 * h)?);
                    (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h)
                }
            };
            net.params.tensors[ti].data_mut()[i] = orig;
            report.crossed_kinks += usize::from(crossed);
            let analytic = grads[ti].data()[i];
            let scale = analytic.abs().max(numeric.abs()).max(opts.floor);
            report.checked.push(CoordResult {
                tensor: net.params.names[ti].clone(),
                index: i,
                analytic,
                numeric,
                rel_err: (analytic - numeric).abs() / scale,
            });
        }
    }
    Ok(report)
}
