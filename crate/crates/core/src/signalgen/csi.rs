use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dft::{bin_index, to_freq};
use super::{FreqSymbol, IqBuffer, SignalError, FFT_SIZE};

/// Which subcarriers a snapshot reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuLayout {
    /// The 242-tone RU, bins -122..=-2 and 2..=122.
    Full242,
    /// Two 106-tone RUs, bins -122..=-17 and 17..=122.
    Dual106,
}

impl RuLayout {
    pub fn width(self) -> usize {
        match self {
            RuLayout::Full242 => 242,
            RuLayout::Dual106 => 212,
        }
    }

    /// Logical bins reported, ascending.
    pub fn bins(self) -> Vec<i32> {
        match self {
            RuLayout::Full242 => (-122..=-2).chain(2..=122).collect(),
            RuLayout::Dual106 => (-122..=-17).chain(17..=122).collect(),
        }
    }

    pub fn code(self) -> u8 {
        match self {
            RuLayout::Full242 => 0,
            RuLayout::Dual106 => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(RuLayout::Full242),
            1 => Some(RuLayout::Dual106),
            _ => None,
        }
    }
}

/// Per-subcarrier channel estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiSnapshot {
    pub values: Vec<Complex64>,
    pub layout: RuLayout,
}

/// DFT of the received HE-LTF window divided by the known symbol.
pub fn extract_csi(rx: &IqBuffer, x: &FreqSymbol, layout: RuLayout) -> Result<CsiSnapshot, SignalError> {
    if rx.len() != FFT_SIZE {
        return Err(SignalError::WindowLength { expected: FFT_SIZE, got: rx.len() });
    }
    let y = to_freq(rx.samples());
    let values = layout
        .bins()
        .into_iter()
        .map(|k| {
            let idx = bin_index(k);
            y[idx] / x.values[idx]
        })
        .collect();
    Ok(CsiSnapshot { values, layout })
}
