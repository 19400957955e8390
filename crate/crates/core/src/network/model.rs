use rand::Rng;

use super::config::{NetworkConfig, Plan, Stage, BN_EPS, BN_MOMENTUM};
use super::ops::{self, BnCache, ConvDims, Mode};
use super::params::NetworkParams;
use super::tensor::Tensor;
use crate::{Error, Real, Result};

/// Per-stage state recorded by a train-mode forward pass.
#[derive(Debug, Clone)]
enum StageCache<T> {
    BatchNorm(BnCache<T>),
    Pad,
    Conv { input: Vec<T> },
    Relu { output: Vec<T> },
    MaxPool { arg: Vec<u32> },
    Dropout { mask: Option<Vec<T>> },
    Dense { input: Vec<T>, output: Vec<T> },
}

/// Everything the backward pass needs: inputs of parametric stages, ReLU
/// outputs, pooling winners, dropout masks and batch statistics.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    batch: usize,
    stages: Vec<StageCache<T>>,
}

impl<T: Real> ForwardCache<T> {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn output(&self) -> &[T] {
        match self.stages.last() {
            Some(StageCache::Dense { output, .. }) => output,
            _ => &[],
        }
    }

    /// Dropout masks in stage order, for replaying a forward pass.
    pub fn dropout_masks(&self) -> Vec<Option<Vec<T>>> {
        self.stages
            .iter()
            .filter_map(|s| match s {
                StageCache::Dropout { mask } => Some(mask.clone()),
                _ => None,
            })
            .collect()
    }

    /// The piecewise-linear region the pass fell in: ReLU on/off pattern and
    /// max-pool winners. Two passes with equal signatures share the same
    /// local linearization of the non-smooth stages.
    pub fn region_signature(&self) -> Vec<u32> {
        let mut sig = Vec::new();
        for s in &self.stages {
            match s {
                StageCache::Relu { output } => {
                    sig.extend(output.iter().map(|&v| (v > T::zero()) as u32))
                }
                StageCache::MaxPool { arg } => sig.extend_from_slice(arg),
                _ => {}
            }
        }
        sig
    }
}

/// Upstream gradient handed to [`Network::backward`].
#[derive(Debug, Clone)]
pub enum OutputGrad<T> {
    /// `dL/dy` with respect to the sigmoid outputs.
    Activation(Vec<T>),
    /// `dL/dz` with respect to the pre-sigmoid logits.
    Logit(Vec<T>),
}

#[derive(Debug, Clone)]
pub struct Network<T> {
    config: NetworkConfig,
    plan: Plan,
    pub params: NetworkParams<T>,
}

impl<T: Real> Network<T> {
    /// Fresh network with Glorot-initialized weights.
    pub fn new(config: NetworkConfig, seed: u64) -> Result<Self> {
        let plan = config.plan()?;
        let params = NetworkParams::init(&plan, seed);
        Ok(Self { config, plan, params })
    }

    pub fn from_params(config: NetworkConfig, params: NetworkParams<T>) -> Result<Self> {
        let plan = config.plan()?;
        if params.tensors.len() != plan.tensors.len() || params.running.len() != plan.bn_slots.len() {
            return Err(Error::ShapeMismatch("parameter count does not match config".into()));
        }
        for (spec, t) in plan.tensors.iter().zip(&params.tensors) {
            if spec.shape != t.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "{}: expected {:?}, got {:?}",
                    spec.name,
                    spec.shape,
                    t.shape()
                )));
            }
        }
        for (r, &(_, _, ch)) in params.running.iter().zip(&plan.bn_slots) {
            if r.mean.len() != ch || r.var.len() != ch {
                return Err(Error::ShapeMismatch("running statistics".into()));
            }
        }
        Ok(Self { config, plan, params })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    pub fn input_len(&self) -> usize {
        self.config.input_len
    }

    pub fn output_dim(&self) -> usize {
        self.config.output_dim
    }

    pub fn cast<U: Real>(&self) -> Network<U> {
        Network {
            config: self.config.clone(),
            plan: self.plan.clone(),
            params: self.params.cast(),
        }
    }

    /// Kernel of the first convolution, `[out_ch, in_ch, width]`.
    pub fn first_conv_kernel(&self) -> Option<&Tensor<T>> {
        self.plan.conv_slots.first().map(|&(k, _)| &self.params.tensors[k])
    }

    fn run(
        &self,
        input: &[T],
        batch: usize,
        mode: Mode,
        keep_cache: bool,
        masks: &mut dyn FnMut(&mut [T], f64) -> Option<Vec<T>>,
        gates: Option<&ForwardCache<T>>,
    ) -> Result<(Vec<T>, Vec<StageCache<T>>)> {
        if gates.is_some_and(|g| g.stages.len() != self.plan.stages.len() || g.batch != batch) {
            return Err(Error::MissingCache);
        }
        if batch == 0 || input.len() != batch * self.config.input_len {
            return Err(Error::ShapeMismatch(format!(
                "expected {} x {} input samples, got {}",
                batch,
                self.config.input_len,
                input.len()
            )));
        }
        let p = &self.params;
        let mut x = input.to_vec();
        let mut caches = Vec::new();
        for (si, (stage, shape)) in self.plan.stages.iter().zip(&self.plan.shapes).enumerate() {
            let gate = gates.map(|g| &g.stages[si]);
            let cache = match *stage {
                Stage::BatchNorm { bn, channels } => {
                    let (g, b, _) = self.plan.bn_slots[bn];
                    let (gamma, beta) = (p.tensors[g].data(), p.tensors[b].data());
                    if mode == Mode::Train {
                        let (y, c) = ops::batchnorm_forward_train(&x, batch, channels, shape.len, gamma, beta, BN_EPS)?;
                        x = y;
                        StageCache::BatchNorm(c)
                    } else {
                        let r = &p.running[bn];
                        x = ops::batchnorm_forward_eval(&x, channels, shape.len, &r.mean, &r.var, gamma, beta, BN_EPS);
                        StageCache::Pad
                    }
                }
                Stage::Pad { left, right } => {
                    x = ops::pad_forward(&x, batch * shape.channels, shape.len, left, right);
                    StageCache::Pad
                }
                Stage::Conv { conv, in_ch, out_ch, width, stride } => {
                    let (k, b) = self.plan.conv_slots[conv];
                    let d = ConvDims { in_ch, out_ch, width, stride, len: shape.len };
                    let y = ops::conv1d_forward(&x, batch, d, p.tensors[k].data(), p.tensors[b].data())?;
                    let input = std::mem::replace(&mut x, y);
                    StageCache::Conv { input: if keep_cache { input } else { Vec::new() } }
                }
                Stage::Relu => {
                    match gate {
                        Some(StageCache::Relu { output }) => x
                            .iter_mut()
                            .zip(output)
                            .for_each(|(v, &o)| if o <= T::zero() { *v = T::zero() }),
                        _ => ops::relu_forward(&mut x),
                    }
                    StageCache::Relu { output: if keep_cache { x.clone() } else { Vec::new() } }
                }
                Stage::MaxPool { width } => {
                    let (y, arg) = match gate {
                        Some(StageCache::MaxPool { arg }) => {
                            let y = arg.iter().enumerate().map(|(o, &a)| x[o * width + a as usize]).collect();
                            (y, arg.clone())
                        }
                        _ => ops::maxpool1d(&x, batch * shape.channels, shape.len, width)?,
                    };
                    x = y;
                    StageCache::MaxPool { arg }
                }
                Stage::Dropout { p: rate } => {
                    let mask = if mode == Mode::Train { masks(&mut x, rate) } else { None };
                    StageCache::Dropout { mask }
                }
                Stage::Dense { in_dim, .. } => {
                    let (w, b) = self.plan.dense_slots;
                    let y = ops::dense_sigmoid_forward(&x, batch, in_dim, p.tensors[w].data(), p.tensors[b].data())?;
                    let input = std::mem::replace(&mut x, y);
                    StageCache::Dense {
                        input: if keep_cache { input } else { Vec::new() },
                        output: if keep_cache { x.clone() } else { Vec::new() },
                    }
                }
            };
            if keep_cache {
                caches.push(cache);
            }
        }
        Ok((x, caches))
    }

    /// Inference: batch statistics from the running averages, no dropout.
    /// `input` is `batch` frames of `input_len` samples; returns
    /// `batch x 360` activations.
    pub fn forward_eval(&self, input: &[T], batch: usize) -> Result<Vec<T>> {
        Ok(self.run(input, batch, Mode::Eval, false, &mut |_, _| None, None)?.0)
    }

    /// Training pass with batch statistics and fresh dropout masks. Does not
    /// touch the running statistics; see [`Network::update_running_stats`].
    pub fn forward_train<R: Rng + ?Sized>(&self, input: &[T], batch: usize, rng: &mut R) -> Result<(Vec<T>, ForwardCache<T>)> {
        let (y, stages) = self.run(input, batch, Mode::Train, true, &mut |x, p| {
            ops::dropout(x, p, Mode::Train, rng)
        }, None)?;
        Ok((y, ForwardCache { batch, stages }))
    }

    /// Training pass that reuses the given dropout masks instead of drawing
    /// new ones.
    pub fn forward_train_with_masks(&self, input: &[T], batch: usize, masks: &[Option<Vec<T>>]) -> Result<(Vec<T>, ForwardCache<T>)> {
        self.replay(input, batch, masks, None)
    }

    /// Training pass on the piecewise-linear region of `reference`: its
    /// dropout masks, ReLU on/off pattern and max-pool winners are reused,
    /// so the output is a smooth function of the parameters whose gradient
    /// at the reference point is the one [`Network::backward`] returns.
    pub fn forward_train_frozen(&self, input: &[T], batch: usize, reference: &ForwardCache<T>) -> Result<(Vec<T>, ForwardCache<T>)> {
        self.replay(input, batch, &reference.dropout_masks(), Some(reference))
    }

    fn replay(
        &self,
        input: &[T],
        batch: usize,
        masks: &[Option<Vec<T>>],
        gates: Option<&ForwardCache<T>>,
    ) -> Result<(Vec<T>, ForwardCache<T>)> {
        let mut it = masks.iter();
        let (y, stages) = self.run(
            input,
            batch,
            Mode::Train,
            true,
            &mut |x, _| {
                let m = it.next().cloned().flatten();
                if let Some(m) = &m {
                    x.iter_mut().zip(m).for_each(|(v, &k)| *v *= k);
                }
                m
            },
            gates,
        )?;
        Ok((y, ForwardCache { batch, stages }))
    }

    /// Exact gradients of the loss for every trainable tensor, in slot order.
    pub fn backward(&self, cache: &ForwardCache<T>, grad: OutputGrad<T>) -> Result<Vec<Tensor<T>>> {
        if cache.stages.len() != self.plan.stages.len() {
            return Err(Error::MissingCache);
        }
        let batch = cache.batch;
        let p = &self.params;
        let mut grads = p.zeros_like();
        let mut g = match (grad, cache.stages.last()) {
            (OutputGrad::Logit(dz), _) => dz,
            (OutputGrad::Activation(dy), Some(StageCache::Dense { output, .. })) => dy
                .iter()
                .zip(output)
                .map(|(&d, &y)| d * y * (T::one() - y))
                .collect(),
            _ => return Err(Error::MissingCache),
        };
        if g.len() != batch * self.config.output_dim {
            return Err(Error::ShapeMismatch("output gradient size".into()));
        }
        for ((stage, shape), sc) in self
            .plan
            .stages
            .iter()
            .zip(&self.plan.shapes)
            .zip(&cache.stages)
            .rev()
        {
            g = match (*stage, sc) {
                (Stage::Dense { in_dim, .. }, StageCache::Dense { input, .. }) => {
                    let (w, b) = self.plan.dense_slots;
                    let (dx, dw, db) = ops::dense_backward(input, batch, in_dim, p.tensors[w].data(), &g);
                    grads[w].data_mut().copy_from_slice(&dw);
                    grads[b].data_mut().copy_from_slice(&db);
                    dx
                }
                (Stage::Dropout { .. }, StageCache::Dropout { mask }) => {
                    if let Some(m) = mask {
                        g.iter_mut().zip(m).for_each(|(v, &k)| *v *= k);
                    }
                    g
                }
                (Stage::MaxPool { width }, StageCache::MaxPool { arg }) => ops::maxpool1d_backward(&g, arg, width),
                (Stage::Relu, StageCache::Relu { output }) => {
                    ops::relu_backward(output, &mut g);
                    g
                }
                (Stage::Conv { conv, in_ch, out_ch, width, stride }, StageCache::Conv { input }) => {
                    let (k, b) = self.plan.conv_slots[conv];
                    let d = ConvDims { in_ch, out_ch, width, stride, len: shape.len };
                    let cg = ops::conv1d_backward(input, batch, d, p.tensors[k].data(), &g)?;
                    grads[k].data_mut().copy_from_slice(&cg.kernel);
                    grads[b].data_mut().copy_from_slice(&cg.bias);
                    cg.input
                }
                (Stage::Pad { left, right }, StageCache::Pad) => {
                    ops::pad_backward(&g, batch * shape.channels, shape.len, left, right)
                }
                (Stage::BatchNorm { bn, channels }, StageCache::BatchNorm(c)) => {
                    let (gi, bi, _) = self.plan.bn_slots[bn];
                    let (dx, dgamma, dbeta) = ops::batchnorm_backward(&g, c, batch, channels, shape.len, p.tensors[gi].data());
                    grads[gi].data_mut().copy_from_slice(&dgamma);
                    grads[bi].data_mut().copy_from_slice(&dbeta);
                    dx
                }
                _ => return Err(Error::MissingCache),
            };
        }
        Ok(grads)
    }

    /// Folds the batch statistics of a train-mode pass into the running
    /// averages with momentum 0.99 (variance with Bessel's correction).
    pub fn update_running_stats(&mut self, cache: &ForwardCache<T>) {
        let m = T::from_f64(BN_MOMENTUM);
        let one_m = T::one() - m;
        for ((stage, shape), sc) in self.plan.stages.iter().zip(&self.plan.shapes).zip(&cache.stages) {
            if let (Stage::BatchNorm { bn, .. }, StageCache::BatchNorm(c)) = (stage, sc) {
                let n = (cache.batch * shape.len) as f64;
                let bessel = T::from_f64(n / (n - 1.0));
                let r = &mut self.params.running[*bn];
                for (rm, &bm) in r.mean.iter_mut().zip(&c.mean) {
                    *rm = m * *rm + one_m * bm;
                }
                for (rv, &bv) in r.var.iter_mut().zip(&c.var) {
                    *rv = m * *rv + one_m * bv * bessel;
                }
            }
        }
    }
}
