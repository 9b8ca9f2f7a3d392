//! 256-point transform pair scaled so a unit-modulus 242-tone symbol has unit
//! average power in time:
//!
//!   s[n] = 1/sqrt(M) * sum_k X[k] e^{+j2pi kn/N}
//!   X[k] = sqrt(M)/N * sum_n s[n] e^{-j2pi kn/N}
//!
//! with N = 256 and M = 242. Bins are stored in FFT order (DC at index 0,
//! negative bins from index 128 upward).

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{FFT_SIZE, NUM_ACTIVE};

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans() -> &'static Plans {
    static PLANS: OnceLock<Plans> = OnceLock::new();
    PLANS.get_or_init(|| {
        let mut planner = FftPlanner::new();
        Plans {
            forward: planner.plan_fft_forward(FFT_SIZE),
            inverse: planner.plan_fft_inverse(FFT_SIZE),
        }
    })
}

/// Forward transform of exactly 256 time samples.
pub fn to_freq(time: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(time.len(), FFT_SIZE, "to_freq expects {FFT_SIZE} samples");
    let mut buf = time.to_vec();
    plans().forward.process(&mut buf);
    let scale = (NUM_ACTIVE as f64).sqrt() / FFT_SIZE as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Inverse transform of exactly 256 bins.
pub fn from_freq(freq: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(freq.len(), FFT_SIZE, "from_freq expects {FFT_SIZE} bins");
    let mut buf = freq.to_vec();
    plans().inverse.process(&mut buf);
    let scale = 1.0 / (NUM_ACTIVE as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// FFT-order storage index of logical bin `k` in -128..=127.
pub(crate) fn bin_index(k: i32) -> usize {
    debug_assert!((-128..128).contains(&k));
    k.rem_euclid(FFT_SIZE as i32) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive_forward(time: &[Complex64]) -> Vec<Complex64> {
        let n = time.len();
        let scale = (NUM_ACTIVE as f64).sqrt() / n as f64;
        (0..n)
            .map(|k| {
                time.iter()
                    .enumerate()
                    .map(|(t, &s)| s * Complex64::from_polar(1.0, -2.0 * PI * (k * t) as f64 / n as f64))
                    .sum::<Complex64>()
                    * scale
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let time: Vec<Complex64> =
            (0..FFT_SIZE).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos())).collect();
        let fast = to_freq(&time);
        let slow = naive_forward(&time);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let freq: Vec<Complex64> =
            (0..FFT_SIZE).map(|i| Complex64::new((i as f64).sqrt(), -(i as f64 * 0.1).sin())).collect();
        let back = to_freq(&from_freq(&freq));
        for (a, b) in freq.iter().zip(&back) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn bin_index_wraps_negative_bins() {
        assert_eq!(bin_index(0), 0);
        assert_eq!(bin_index(-1), 255);
        assert_eq!(bin_index(-128), 128);
        assert_eq!(bin_index(127), 127);
    }
}
