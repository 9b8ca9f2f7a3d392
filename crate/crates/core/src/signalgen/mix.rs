use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{IqBuffer, SignalError};

pub fn mean_power(samples: &[Complex64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64
}

/// Multiplies by exp(j 2 pi offset n / fs).
pub fn freq_shift(s: &IqBuffer, offset_hz: f64) -> Result<IqBuffer, SignalError> {
    let fs = s.sample_rate_hz();
    if !(offset_hz.is_finite() && offset_hz.abs() < fs / 2.0) {
        return Err(SignalError::Aliasing { offset_hz, sample_rate_hz: fs });
    }
    if offset_hz == 0.0 {
        return Ok(s.clone());
    }
    let w = 2.0 * PI * offset_hz / fs;
    let samples = s
        .samples()
        .iter()
        .enumerate()
        .map(|(n, v)| v * Complex64::from_polar(1.0, (w * n as f64).rem_euclid(2.0 * PI)))
        .collect();
    Ok(IqBuffer { samples, sample_rate_hz: fs })
}

/// An interference waveform to superpose on the Wi-Fi window.
///
/// Window sample `n` receives `samples[offset + n]` when that index exists,
/// so a negative offset starts the burst inside the window and an offset close
/// to the end of `samples` lets the burst end inside it.
#[derive(Debug, Clone, Copy)]
pub struct Interference<'a> {
    pub samples: &'a IqBuffer,
    pub sir_db: f64,
    pub offset: isize,
}

impl Interference<'_> {
    /// Window positions covered by the burst and the matching burst start index.
    fn overlap(&self, window: usize) -> (std::ops::Range<usize>, usize) {
        let len = self.samples.len() as isize;
        let lo = (-self.offset).clamp(0, window as isize);
        let hi = (len - self.offset).clamp(lo, window as isize);
        (lo as usize..hi as usize, (self.offset + lo) as usize)
    }
}

/// Scales the interference to the requested SIR, superposes it and adds AWGN.
///
/// Both ratios are referenced to `reference_power`, the Wi-Fi power before the
/// channel. The SIR is measured over the samples the burst actually covers.
/// `snr_db = +inf` adds no noise.
pub fn mix_and_degrade<R: Rng + ?Sized>(
    wifi: &IqBuffer,
    reference_power: f64,
    interference: Option<Interference<'_>>,
    snr_db: f64,
    rng: &mut R,
) -> Result<IqBuffer, SignalError> {
    if !(reference_power.is_finite() && reference_power > 0.0) {
        return Err(SignalError::InvalidPower("reference power must be positive"));
    }
    if snr_db.is_nan() {
        return Err(SignalError::InvalidPower("snr must not be NaN"));
    }
    let mut out = wifi.samples().to_vec();

    if let Some(cti) = interference {
        if !cti.sir_db.is_finite() {
            return Err(SignalError::InvalidPower("sir must be finite"));
        }
        let (range, src) = cti.overlap(out.len());
        if range.is_empty() {
            return Err(SignalError::InsufficientOverlap { overlap: 0 });
        }
        let burst = &cti.samples.samples()[src..src + range.len()];
        let p = mean_power(burst);
        if p <= 0.0 {
            return Err(SignalError::InvalidPower("interference has zero power"));
        }
        let target = reference_power / 10f64.powf(cti.sir_db / 10.0);
        let gain = (target / p).sqrt();
        for (o, b) in out[range].iter_mut().zip(burst) {
            *o += b * gain;
        }
    }

    if snr_db.is_finite() {
        let var = reference_power / 10f64.powf(snr_db / 10.0);
        let sd = (var / 2.0).sqrt();
        for o in out.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *o += Complex64::new(re * sd, im * sd);
        }
    } else if snr_db < 0.0 {
        return Err(SignalError::InvalidPower("snr of -inf"));
    }
    Ok(IqBuffer { samples: out, sample_rate_hz: wifi.sample_rate_hz() })
}
