use serde::{Deserialize, Serialize};

use crate::cents::N_BINS;
use crate::signal::FRAME_LEN;
use crate::{Error, Result};

pub const DEFAULT_DROPOUT: f64 = 0.25;
pub const BN_MOMENTUM: f64 = 0.99;
pub const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Zero-pad so that the output length is `ceil(len / stride)`.
    #[default]
    Same,
    Valid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LayerConfig {
    Conv1d {
        out_channels: usize,
        kernel_width: usize,
        stride: usize,
        #[serde(default)]
        padding: Padding,
        has_batchnorm: bool,
        dropout_p: f64,
    },
    Maxpool {
        pool_width: usize,
    },
    DenseSigmoid,
}

impl LayerConfig {
    pub fn conv(out_channels: usize, kernel_width: usize, stride: usize) -> Self {
        LayerConfig::Conv1d {
            out_channels,
            kernel_width,
            stride,
            padding: Padding::Same,
            has_batchnorm: true,
            dropout_p: DEFAULT_DROPOUT,
        }
    }
}

/// Where batch normalization sits inside a convolutional block. Pooling and
/// dropout always close the block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BlockOrder {
    /// batchnorm -> conv -> relu -> maxpool -> dropout
    #[default]
    BnConvReluPoolDropout,
    /// conv -> relu -> batchnorm -> maxpool -> dropout
    ConvReluBnPoolDropout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_len: usize,
    pub output_dim: usize,
    /// Declared size of the flattened representation feeding the dense layer.
    pub latent_size: usize,
    #[serde(default)]
    pub block_order: BlockOrder,
    pub layers: Vec<LayerConfig>,
}

impl NetworkConfig {
    fn stacked(channels: &[usize], widths: &[usize], strides: &[usize], latent: usize) -> Self {
        let mut layers = Vec::new();
        for ((&c, &w), &s) in channels.iter().zip(widths).zip(strides) {
            layers.push(LayerConfig::conv(c, w, s));
            layers.push(LayerConfig::Maxpool { pool_width: 2 });
        }
        layers.push(LayerConfig::DenseSigmoid);
        Self {
            input_len: FRAME_LEN,
            output_dim: N_BINS,
            latent_size: latent,
            block_order: BlockOrder::default(),
            layers,
        }
    }

    /// Six conv blocks, 1024 first-layer filters, 2048 latent units.
    pub fn full() -> Self {
        Self::stacked(
            &[1024, 128, 128, 128, 256, 512],
            &[512, 64, 64, 64, 64, 64],
            &[4, 1, 1, 1, 1, 1],
            2048,
        )
    }

    /// Four conv blocks small enough to train on a CPU in minutes.
    pub fn toy() -> Self {
        Self::stacked(&[64, 32, 32, 64], &[64, 16, 16, 16], &[4, 1, 1, 1], 1024)
    }

    pub fn first_layer_filters(&self) -> Option<usize> {
        self.layers.iter().find_map(|l| match l {
            LayerConfig::Conv1d { out_channels, .. } => Some(*out_channels),
            _ => None,
        })
    }

    pub fn plan(&self) -> Result<Plan> {
        Plan::compile(self)
    }
}

/// One primitive step of the compiled network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stage {
    BatchNorm { bn: usize, channels: usize },
    Pad { left: usize, right: usize },
    Conv { conv: usize, in_ch: usize, out_ch: usize, width: usize, stride: usize },
    Relu,
    MaxPool { width: usize },
    Dropout { p: f64 },
    Dense { in_dim: usize, out_dim: usize },
}

/// Shape of a per-example activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub channels: usize,
    pub len: usize,
}

impl Shape {
    pub fn size(&self) -> usize {
        self.channels * self.len
    }
}

/// Trainable tensor slots, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    /// Glorot fan-in / fan-out for weights; `None` for biases and batch-norm
    /// parameters.
    pub fans: Option<(usize, usize)>,
    pub fill: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub stages: Vec<Stage>,
    /// `shapes[i]` is the input shape of `stages[i]`; the last entry is the
    /// network output.
    pub shapes: Vec<Shape>,
    pub tensors: Vec<TensorSpec>,
    /// Per conv layer: (kernel slot, bias slot).
    pub conv_slots: Vec<(usize, usize)>,
    /// Per batch-norm layer: (gamma slot, beta slot, channels).
    pub bn_slots: Vec<(usize, usize, usize)>,
    /// (weight slot, bias slot).
    pub dense_slots: (usize, usize),
    pub latent_size: usize,
}

impl Plan {
    fn compile(cfg: &NetworkConfig) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if cfg.input_len == 0 {
            return bad("input_len must be positive".into());
        }
        if cfg.output_dim != N_BINS {
            return bad(format!("output_dim must be {N_BINS}, got {}", cfg.output_dim));
        }
        let mut stages = Vec::new();
        let mut shapes = Vec::new();
        let mut tensors = Vec::new();
        let mut conv_slots = Vec::new();
        let mut bn_slots = Vec::new();
        let mut cur = Shape {
            channels: 1,
            len: cfg.input_len,
        };
        let mut pending_dropout: Option<f64> = None;
        let mut dense = None;

        macro_rules! push {
            ($st:expr, $next:expr) => {{
                let st = $st;
                let next = $next;
                stages.push(st);
                shapes.push(cur);
                cur = next;
            }};
        }
        let add_bn = |tensors: &mut Vec<TensorSpec>, bn_slots: &mut Vec<(usize, usize, usize)>, ch: usize| {
            let j = bn_slots.len();
            let g = tensors.len();
            tensors.push(TensorSpec { name: format!("bn{j}.gamma"), shape: vec![ch], fans: None, fill: 1.0 });
            tensors.push(TensorSpec { name: format!("bn{j}.beta"), shape: vec![ch], fans: None, fill: 0.0 });
            bn_slots.push((g, g + 1, ch));
            j
        };

        for (li, layer) in cfg.layers.iter().enumerate() {
            if dense.is_some() {
                return bad(format!("layer {li} follows the dense output layer"));
            }
            match *layer {
                LayerConfig::Conv1d {
                    out_channels,
                    kernel_width,
                    stride,
                    padding,
                    has_batchnorm,
                    dropout_p,
                } => {
                    if out_channels == 0 || kernel_width == 0 || stride == 0 {
                        return bad(format!("layer {li}: channels, kernel width and stride must be >= 1"));
                    }
                    if !(0.0..1.0).contains(&dropout_p) {
                        return bad(format!("layer {li}: dropout_p must be in [0, 1)"));
                    }
                    if let Some(p) = pending_dropout.take() {
                        push!(Stage::Dropout { p }, cur);
                    }
                    let bn_first = cfg.block_order == BlockOrder::BnConvReluPoolDropout;
                    if has_batchnorm && bn_first {
                        let j = add_bn(&mut tensors, &mut bn_slots, cur.channels);
                        push!(Stage::BatchNorm { bn: j, channels: cur.channels }, cur);
                    }
                    let out_len = match padding {
                        Padding::Same => {
                            let out_len = cur.len.div_ceil(stride);
                            let total = ((out_len - 1) * stride + kernel_width).saturating_sub(cur.len);
                            if total > 0 {
                                let left = total / 2;
                                let next = Shape { channels: cur.channels, len: cur.len + total };
                                push!(Stage::Pad { left, right: total - left }, next);
                            }
                            out_len
                        }
                        Padding::Valid => {
                            if cur.len < kernel_width {
                                return bad(format!(
                                    "layer {li}: input length {} shorter than kernel {kernel_width}",
                                    cur.len
                                ));
                            }
                            (cur.len - kernel_width) / stride + 1
                        }
                    };
                    let ci = conv_slots.len();
                    let k = tensors.len();
                    let fan_in = cur.channels * kernel_width;
                    let fan_out = out_channels * kernel_width;
                    tensors.push(TensorSpec {
                        name: format!("conv{ci}.kernel"),
                        shape: vec![out_channels, cur.channels, kernel_width],
                        fans: Some((fan_in, fan_out)),
                        fill: 0.0,
                    });
                    tensors.push(TensorSpec { name: format!("conv{ci}.bias"), shape: vec![out_channels], fans: None, fill: 0.0 });
                    conv_slots.push((k, k + 1));
                    let next = Shape { channels: out_channels, len: out_len };
                    let st = Stage::Conv { conv: ci, in_ch: cur.channels, out_ch: out_channels, width: kernel_width, stride };
                    push!(st, next);
                    push!(Stage::Relu, cur);
                    if has_batchnorm && !bn_first {
                        let j = add_bn(&mut tensors, &mut bn_slots, cur.channels);
                        push!(Stage::BatchNorm { bn: j, channels: cur.channels }, cur);
                    }
                    if dropout_p > 0.0 {
                        pending_dropout = Some(dropout_p);
                    }
                }
                LayerConfig::Maxpool { pool_width } => {
                    if pool_width == 0 {
                        return bad(format!("layer {li}: pool width must be >= 1"));
                    }
                    let rem = cur.len % pool_width;
                    if rem != 0 {
                        let extra = pool_width - rem;
                        let next = Shape { channels: cur.channels, len: cur.len + extra };
                        push!(Stage::Pad { left: 0, right: extra }, next);
                    }
                    let next = Shape { channels: cur.channels, len: cur.len / pool_width };
                    push!(Stage::MaxPool { width: pool_width }, next);
                }
                LayerConfig::DenseSigmoid => {
                    if let Some(p) = pending_dropout.take() {
                        push!(Stage::Dropout { p }, cur);
                    }
                    let latent = cur.size();
                    if latent != cfg.latent_size {
                        return bad(format!(
                            "flattened size {latent} does not match declared latent size {}",
                            cfg.latent_size
                        ));
                    }
                    let w = tensors.len();
                    tensors.push(TensorSpec {
                        name: "dense.weight".into(),
                        shape: vec![latent, cfg.output_dim],
                        fans: Some((latent, cfg.output_dim)),
                        fill: 0.0,
                    });
                    tensors.push(TensorSpec { name: "dense.bias".into(), shape: vec![cfg.output_dim], fans: None, fill: 0.0 });
                    dense = Some((w, w + 1));
                    let next = Shape { channels: 1, len: cfg.output_dim };
                    let st = Stage::Dense { in_dim: latent, out_dim: cfg.output_dim };
                    push!(st, next);
                }
            }
        }
        let Some(dense_slots) = dense else {
            return bad("network must end with a dense-sigmoid layer".into());
        };
        shapes.push(cur);
        Ok(Plan {
            stages,
            shapes,
            tensors,
            conv_slots,
            bn_slots,
            dense_slots,
            latent_size: cfg.latent_size,
        })
    }
}
