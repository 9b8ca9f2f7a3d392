//! Baseband synthesis of the HE-LTF, LR-WPAN and BLE waveforms, the indoor
//! multipath channel, power calibration and CSI extraction.
//!
//! All time-domain signals run at 20 MHz. The frequency-domain view uses a
//! 256-point DFT with 78.125 kHz subcarrier spacing; the 242-tone RU occupies
//! bins -122..=-2 and 2..=122.

mod ble;
mod channel;
mod csi;
mod dft;
mod heltf;
mod lrwpan;
mod mix;

pub use ble::{gen_ble_iq, BLE_DEVIATION_HZ, BLE_SAMPLES_PER_SYMBOL};
pub use channel::{apply_channel, draw_channel, rms_delay_spread_s, ChannelProfile, ChannelRealization, Tap};
pub use csi::{extract_csi, CsiSnapshot, RuLayout};
pub use dft::{from_freq, to_freq};
pub use heltf::{active_subcarriers, gen_heltf_freq, heltf_time, with_guard_interval, FreqSymbol};
pub use lrwpan::{gen_lrwpan_iq, lrwpan_airtime_s, LRWPAN_SAMPLES_PER_CHIP};
pub use mix::{freq_shift, mean_power, mix_and_degrade, Interference};

use num_complex::Complex64;
use thiserror::Error;

/// Sample rate shared by every waveform in the lab.
pub const SAMPLE_RATE_HZ: f64 = 20e6;
/// DFT size of one HE-LTF symbol (12.8 us at 20 MHz).
pub const FFT_SIZE: usize = 256;
/// Active subcarriers of a 242-tone RU.
pub const NUM_ACTIVE: usize = 242;
/// Subcarrier spacing in Hz.
pub const SUBCARRIER_SPACING_HZ: f64 = SAMPLE_RATE_HZ / FFT_SIZE as f64;
/// 1.6 us guard interval prepended to the HE-LTF before the channel.
pub const GUARD_SAMPLES: usize = 32;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("sample rate must be positive and finite, got {0}")]
    InvalidSampleRate(f64),
    #[error("buffer contains a non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("frame must contain at least one octet")]
    EmptyFrame,
    #[error("offset {offset_hz} Hz aliases at sample rate {sample_rate_hz} Hz")]
    Aliasing { offset_hz: f64, sample_rate_hz: f64 },
    #[error("interference overlaps {overlap} samples of the window, need at least 1")]
    InsufficientOverlap { overlap: usize },
    #[error("expected a {expected}-sample window, got {got}")]
    WindowLength { expected: usize, got: usize },
    #[error("invalid channel: {0}")]
    InvalidChannel(&'static str),
    #[error("invalid power parameter: {0}")]
    InvalidPower(&'static str),
}

/// Complex baseband samples at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct IqBuffer {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl IqBuffer {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self, SignalError> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(SignalError::InvalidSampleRate(sample_rate_hz));
        }
        if let Some(i) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(SignalError::NonFinite(i));
        }
        Ok(Self { samples, sample_rate_hz })
    }

    /// Builds a 20 MHz buffer from samples already known to be finite.
    pub(crate) fn at_20mhz(samples: Vec<Complex64>) -> Self {
        debug_assert!(samples.iter().all(|s| s.re.is_finite() && s.im.is_finite()));
        Self { samples, sample_rate_hz: SAMPLE_RATE_HZ }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Copy of `len` samples starting at `start`, clamped to the buffer end.
    pub fn slice(&self, start: usize, len: usize) -> IqBuffer {
        let end = (start + len).min(self.samples.len());
        let start = start.min(end);
        Self { samples: self.samples[start..end].to_vec(), sample_rate_hz: self.sample_rate_hz }
    }
}

/// Interfering technology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Technology {
    LrWpan,
    Ble,
}

/// One LR-WPAN or BLE channel overlapping Wi-Fi channel 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfererSpec {
    pub technology: Technology,
    pub channel_index: u8,
    pub center_offset_hz: f64,
}

impl InterfererSpec {
    /// LR-WPAN channel 11..=14 (2405..2420 MHz) against Wi-Fi channel 1 (2412 MHz).
    pub fn lrwpan(channel: u8) -> Option<Self> {
        (11..=14).contains(&channel).then(|| Self {
            technology: Technology::LrWpan,
            channel_index: channel,
            center_offset_hz: (-7.0 + 5.0 * f64::from(channel - 11)) * 1e6,
        })
    }

    /// BLE channel 0..=8 (2404..2420 MHz); channel 4 sits on the Wi-Fi center.
    pub fn ble(channel: u8) -> Option<Self> {
        (channel <= 8).then(|| Self {
            technology: Technology::Ble,
            channel_index: channel,
            center_offset_hz: (-8.0 + 2.0 * f64::from(channel)) * 1e6,
        })
    }

    /// Half of the occupied bandwidth used for RU overlap decisions.
    pub fn occupied_half_bandwidth_hz(&self) -> f64 {
        match self.technology {
            Technology::LrWpan => 1.5e6,
            Technology::Ble => 0.6e6,
        }
    }

    /// Every interferer overlapping Wi-Fi channel 1: LR-WPAN 11..=14 then BLE 0..=8.
    pub fn all() -> Vec<Self> {
        (11..=14)
            .filter_map(Self::lrwpan)
            .chain((0..=8).filter_map(Self::ble))
            .collect()
    }
}
