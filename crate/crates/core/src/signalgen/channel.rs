//! Single-cluster tapped-delay-line stand-ins for the indoor B and C profiles.
//!
//! Taps sit on the 50 ns sample grid with an exponential power-delay profile,
//! truncated 30 dB below the first tap. The decay constants are set so that
//! the mean per-realization rms delay spread is 15 ns (B) and 30 ns (C).

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{IqBuffer, SignalError, SAMPLE_RATE_HZ};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelProfile {
    ModelB,
    ModelC,
}

impl ChannelProfile {
    /// Nominal rms delay spread.
    pub fn rms_delay_spread_s(self) -> f64 {
        match self {
            ChannelProfile::ModelB => 15e-9,
            ChannelProfile::ModelC => 30e-9,
        }
    }

    fn decay_s(self) -> f64 {
        match self {
            ChannelProfile::ModelB => 18.13e-9,
            ChannelProfile::ModelC => 32.66e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub delay_samples: usize,
    pub gain: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub taps: Vec<Tap>,
    pub profile: ChannelProfile,
}

impl ChannelRealization {
    /// Validates ordering, first-arrival and power normalization.
    pub fn new(taps: Vec<Tap>, profile: ChannelProfile) -> Result<Self, SignalError> {
        if taps.first().map(|t| t.delay_samples) != Some(0) {
            return Err(SignalError::InvalidChannel("first tap must have zero delay"));
        }
        if taps.windows(2).any(|w| w[1].delay_samples <= w[0].delay_samples) {
            return Err(SignalError::InvalidChannel("tap delays must be strictly increasing"));
        }
        let power: f64 = taps.iter().map(|t| t.gain.norm_sqr()).sum();
        if (power - 1.0).abs() > 1e-9 {
            return Err(SignalError::InvalidChannel("total tap power must be 1"));
        }
        Ok(Self { taps, profile })
    }

    pub fn total_power(&self) -> f64 {
        self.taps.iter().map(|t| t.gain.norm_sqr()).sum()
    }

    /// Frequency response at logical bin `k` of a 256-point DFT.
    pub fn response(&self, k: i32) -> Complex64 {
        self.taps
            .iter()
            .map(|t| {
                let w = -2.0 * std::f64::consts::PI * f64::from(k) * t.delay_samples as f64 / 256.0;
                t.gain * Complex64::from_polar(1.0, w)
            })
            .sum()
    }
}

/// Draws one tap-gain realization of `profile`.
pub fn draw_channel<R: Rng + ?Sized>(profile: ChannelProfile, rng: &mut R) -> ChannelRealization {
    let ts = 1.0 / SAMPLE_RATE_HZ;
    let pdp: Vec<f64> = (0..)
        .map(|k| (-(k as f64) * ts / profile.decay_s()).exp())
        .take_while(|&p| p >= 1e-3)
        .collect();
    let mut taps: Vec<Tap> = pdp
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let sd = (p / 2.0).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Tap { delay_samples: k, gain: Complex64::new(re * sd, im * sd) }
        })
        .collect();
    let norm = taps.iter().map(|t| t.gain.norm_sqr()).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|t| t.gain /= norm);
    ChannelRealization { taps, profile }
}

/// Rms delay spread of one realization, weighting delays by tap power.
pub fn rms_delay_spread_s(h: &ChannelRealization) -> f64 {
    let ts = 1.0 / SAMPLE_RATE_HZ;
    let p = h.total_power();
    let mean = h.taps.iter().map(|t| t.gain.norm_sqr() * t.delay_samples as f64 * ts).sum::<f64>() / p;
    let second = h.taps.iter().map(|t| t.gain.norm_sqr() * (t.delay_samples as f64 * ts).powi(2)).sum::<f64>() / p;
    (second - mean * mean).max(0.0).sqrt()
}

/// Linear convolution with the tap sequence, truncated to the input length.
pub fn apply_channel(s: &IqBuffer, h: &ChannelRealization) -> IqBuffer {
    let x = s.samples();
    let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
    for tap in &h.taps {
        if tap.delay_samples >= x.len() {
            continue;
        }
        for (out, inp) in y[tap.delay_samples..].iter_mut().zip(x) {
            *out += tap.gain * inp;
        }
    }
    IqBuffer { samples: y, sample_rate_hz: s.sample_rate_hz() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn buf(n: usize) -> IqBuffer {
        IqBuffer::at_20mhz((0..n).map(|i| Complex64::new(i as f64 * 0.1, 1.0 - 0.05 * i as f64)).collect())
    }

    #[test]
    fn realizations_are_normalized_and_start_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for profile in [ChannelProfile::ModelB, ChannelProfile::ModelC] {
            for _ in 0..100 {
                let h = draw_channel(profile, &mut rng);
                assert!((h.total_power() - 1.0).abs() < 1e-9);
                assert_eq!(h.taps[0].delay_samples, 0);
                assert!(ChannelRealization::new(h.taps.clone(), profile).is_ok());
            }
        }
    }

    #[test]
    fn single_unit_tap_is_identity() {
        let s = buf(40);
        let h = ChannelRealization::new(vec![Tap { delay_samples: 0, gain: Complex64::new(1.0, 0.0) }], ChannelProfile::ModelB)
            .unwrap();
        assert_eq!(apply_channel(&s, &h), s);
    }

    #[test]
    fn imaginary_tap_rotates_by_ninety_degrees() {
        let s = buf(40);
        let h = ChannelRealization::new(vec![Tap { delay_samples: 0, gain: Complex64::new(0.0, 1.0) }], ChannelProfile::ModelB)
            .unwrap();
        let y = apply_channel(&s, &h);
        for (a, b) in y.samples().iter().zip(s.samples()) {
            assert_eq!(*a, b * Complex64::i());
        }
    }

    #[test]
    fn rejects_malformed_taps() {
        let g = Complex64::new(1.0, 0.0);
        assert!(ChannelRealization::new(vec![Tap { delay_samples: 1, gain: g }], ChannelProfile::ModelB).is_err());
        assert!(ChannelRealization::new(vec![Tap { delay_samples: 0, gain: g * 2.0 }], ChannelProfile::ModelB).is_err());
    }
}
