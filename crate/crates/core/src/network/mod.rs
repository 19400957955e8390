//! The convolutional pitch network: configuration, parameters, batched
//! forward/backward passes, loss, optimizer, persistence and inference.

mod adam;
mod config;
pub mod gradcheck;
mod io;
mod loss;
mod model;
pub mod ops;
mod params;
mod predict;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use config::{
    BlockOrder, LayerConfig, NetworkConfig, Padding, Plan, Shape, Stage, TensorSpec, BN_EPS,
    BN_MOMENTUM, DEFAULT_DROPOUT,
};
pub use io::{
    load_manifest, load_model, model_hash, save_model, Hyperparameters, ModelManifest,
    TensorEntry, FORMAT_VERSION, MANIFEST_FILE, WEIGHTS_FILE,
};
pub use loss::{bce_logit_grad, bce_loss, BCE_CLAMP};
pub use model::{ForwardCache, Network, OutputGrad};
pub use ops::Mode;
pub use params::{init_network, NetworkParams, RunningStats};
pub use predict::{activations, predict, predict_audio};
pub use tensor::Tensor;
