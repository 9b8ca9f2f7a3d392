//! BLE LE 1M GFSK: BT = 0.5, modulation index 0.5.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::{IqBuffer, SignalError, SAMPLE_RATE_HZ};

const SYMBOL_RATE: f64 = 1e6;
pub const BLE_SAMPLES_PER_SYMBOL: usize = (SAMPLE_RATE_HZ / SYMBOL_RATE) as usize;
const BT: f64 = 0.5;
const MODULATION_INDEX: f64 = 0.5;
/// Peak frequency deviation h * Rs / 2.
pub const BLE_DEVIATION_HZ: f64 = MODULATION_INDEX * SYMBOL_RATE / 2.0;
/// Gaussian filter span in symbols on each side.
const GAUSS_SPAN: usize = 2;
/// Preamble plus access address.
const HEADER_OCTETS: usize = 5;

/// Frequency pulse: a one-symbol rectangle smoothed by a unit-area Gaussian.
/// Peaks at 1 for a long run of equal symbols.
fn frequency_pulse() -> Vec<f64> {
    let sps = BLE_SAMPLES_PER_SYMBOL;
    let sigma = (2f64.ln()).sqrt() / (2.0 * PI * BT) * sps as f64;
    let half = (GAUSS_SPAN * sps) as isize;
    let gauss: Vec<f64> = (-half..=half).map(|n| (-(n as f64).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = gauss.iter().sum();
    let gauss: Vec<f64> = gauss.iter().map(|g| g / total).collect();
    let mut pulse = vec![0.0; sps + gauss.len() - 1];
    for i in 0..sps {
        for (j, g) in gauss.iter().enumerate() {
            pulse[i + j] += g;
        }
    }
    pulse
}

/// Random-bit BLE frame at 20 MHz: preamble, access address and payload.
pub fn gen_ble_iq<R: Rng + ?Sized>(num_octets: usize, rng: &mut R) -> Result<IqBuffer, SignalError> {
    if num_octets == 0 {
        return Err(SignalError::EmptyFrame);
    }
    let mut octets = vec![0xAAu8];
    octets.extend((0..HEADER_OCTETS - 1 + num_octets).map(|_| rng.random::<u8>()));
    let symbols: Vec<f64> = octets
        .iter()
        .flat_map(|&o| (0..8).map(move |b| if (o >> b) & 1 == 1 { 1.0 } else { -1.0 }))
        .collect();

    let sps = BLE_SAMPLES_PER_SYMBOL;
    let pulse = frequency_pulse();
    let mut freq = vec![0.0; symbols.len() * sps + pulse.len() - sps];
    for (k, &a) in symbols.iter().enumerate() {
        for (n, p) in pulse.iter().enumerate() {
            freq[k * sps + n] += a * p;
        }
    }
    let step = 2.0 * PI * BLE_DEVIATION_HZ / SAMPLE_RATE_HZ;
    let mut phase = 0.0f64;
    let samples = freq
        .iter()
        .map(|f| {
            let s = Complex64::from_polar(1.0, phase);
            phase = (phase + step * f).rem_euclid(2.0 * PI);
            s
        })
        .collect();
    Ok(IqBuffer::at_20mhz(samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pulse_shifts_sum_to_one() {
        let p = frequency_pulse();
        let sps = BLE_SAMPLES_PER_SYMBOL;
        assert!(p.iter().all(|&v| v <= 1.0 + 1e-12));
        // a long run of equal symbols reaches the full deviation
        for n in p.len()..p.len() + sps {
            let total: f64 = (0..=n / sps).filter_map(|k| p.get(n - k * sps)).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_envelope() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = gen_ble_iq(16, &mut rng).unwrap();
        assert!(s.samples().iter().all(|v| (v.norm() - 1.0).abs() < 1e-6));
    }

    #[test]
    fn rejects_empty_payload() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert_eq!(gen_ble_iq(0, &mut rng), Err(SignalError::EmptyFrame));
    }
}
