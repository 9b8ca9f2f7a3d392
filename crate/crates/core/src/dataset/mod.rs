//! Labeled, int8-quantized CSI datasets over SNR x SIR grids.

mod format;
mod generate;
mod label;
mod manifest;
mod quant;
mod synth;

pub use format::{read_dataset, write_dataset, decode_dataset, encode_dataset, FILE_MAGIC, FILE_VERSION};
pub(crate) use generate::combine;
pub use generate::{calibrate_scale, cell_seed, generate_dataset, sample_seed, GeneratedDataset};
pub use label::{ClassLabel, TechClass, NUM_CLASSES};
pub use manifest::DatasetManifest;
pub use quant::{auto_scale, dequantize, quantize_csi, saturation_rate, QuantizedCsi};
pub use synth::{synthesize_snapshot, SynthTrace, SynthesizedSnapshot, MIN_OVERLAP};

use thiserror::Error;

use crate::signalgen::{RuLayout, SignalError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("manifest parse error: {0}")]
    ManifestParse(#[from] toml::de::Error),
    #[error("manifest serialization error: {0}")]
    ManifestWrite(#[from] toml::ser::Error),
    #[error("cannot derive a quantization scale: {0}")]
    Scale(&'static str),
    #[error("bad magic {0:?}, not a dataset file")]
    BadMagic([u8; 4]),
    #[error("unsupported dataset version {0}")]
    UnsupportedVersion(u16),
    #[error("unknown RU layout code {0}")]
    UnknownLayout(u8),
    #[error("subcarrier count {got} does not match layout {layout:?} ({expected})")]
    WidthMismatch { layout: RuLayout, expected: usize, got: usize },
    #[error("file truncated: needed {needed} bytes, {available} available")]
    Truncated { needed: usize, available: usize },
    #[error("{0} trailing bytes after the last sample")]
    TrailingBytes(usize),
    #[error("invalid class label {0}")]
    InvalidLabel(u8),
    #[error("signal synthesis failed: {0}")]
    Signal(#[from] SignalError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One dataset atom.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub csi: QuantizedCsi,
    pub label: ClassLabel,
    pub snr_db: i8,
    /// `None` when the sample belongs to no SIR cell.
    pub sir_db: Option<i8>,
    /// Seed that regenerates this snapshot through [`synthesize_snapshot`].
    pub seed: u64,
}

/// Samples sharing one RU layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub layout: RuLayout,
    pub samples: Vec<LabeledSample>,
}

impl Dataset {
    pub fn new(layout: RuLayout) -> Self {
        Self { layout, samples: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of samples per class id (index 0 = C1).
    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for s in &self.samples {
            counts[s.label.index()] += 1;
        }
        counts
    }
}
