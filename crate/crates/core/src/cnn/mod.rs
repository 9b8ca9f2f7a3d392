//! A small 1-D convolutional classifier with a hand-written forward and
//! backward pass, Adam, and a compact binary model format.

mod adam;
mod io;
mod layers;
mod model;
mod tensor;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use io::{decode_model, encode_model, load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use layers::{conv1d_forward, dense_forward, logsoftmax_forward, relu_forward, Conv1d, Dense};
pub use model::{ArchSpec, CnnModel, Gradients, Layer};
pub use tensor::Tensor;
pub use train::{
    csi_to_input, evaluate_accuracy, history_csv, infer, infer_batch, train, train_with, EpochRecord, TrainConfig,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CnnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite value")]
    NonFinite,
    #[error("model expects {model} subcarriers, data has {data}")]
    WidthMismatch { model: usize, data: usize },
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("invalid training configuration: {0}")]
    Config(&'static str),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("bad magic {0:?}, not a model file")]
    BadMagic([u8; 4]),
    #[error("unsupported model version {0}")]
    UnsupportedVersion(u16),
    #[error("model file truncated: needed {needed} bytes, {available} available")]
    Truncated { needed: usize, available: usize },
    #[error("{0} trailing bytes after model parameters")]
    TrailingBytes(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
