use num_complex::Complex64;

use super::dft::{bin_index, from_freq};
use super::{IqBuffer, FFT_SIZE, NUM_ACTIVE};

const LFSR_SEED: u8 = 0x5A;

/// 256 frequency bins in FFT order plus the list of active logical bins.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqSymbol {
    pub values: Vec<Complex64>,
    pub active: Vec<i32>,
}

impl FreqSymbol {
    /// Value at logical bin `k` in -128..=127.
    pub fn bin(&self, k: i32) -> Complex64 {
        self.values[bin_index(k)]
    }
}

/// Logical indices of the 242 active subcarriers, ascending.
pub fn active_subcarriers() -> Vec<i32> {
    (-122..=-2).chain(2..=122).collect()
}

/// Seven-stage LFSR with feedback polynomial x^7 + x^3 + 1.
struct Lfsr(u8);

impl Lfsr {
    fn next_bit(&mut self) -> u8 {
        let out = (self.0 >> 6) & 1;
        let fb = out ^ ((self.0 >> 2) & 1);
        self.0 = ((self.0 << 1) | fb) & 0x7F;
        out
    }
}

/// Reference HE-LTF: +-1 on every active subcarrier, zero on DC and guards.
pub fn gen_heltf_freq() -> FreqSymbol {
    let active = active_subcarriers();
    let mut values = vec![Complex64::new(0.0, 0.0); FFT_SIZE];
    let mut lfsr = Lfsr(LFSR_SEED);
    for &k in &active {
        let sign = if lfsr.next_bit() == 1 { -1.0 } else { 1.0 };
        values[bin_index(k)] = Complex64::new(sign, 0.0);
    }
    debug_assert_eq!(active.len(), NUM_ACTIVE);
    FreqSymbol { values, active }
}

/// One 12.8 us HE-LTF symbol at 20 MHz, unit average power.
pub fn heltf_time(x: &FreqSymbol) -> IqBuffer {
    IqBuffer::at_20mhz(from_freq(&x.values))
}

/// Prepends the last `guard` samples as a cyclic prefix.
pub fn with_guard_interval(symbol: &IqBuffer, guard: usize) -> IqBuffer {
    let s = symbol.samples();
    let guard = guard.min(s.len());
    let mut out = Vec::with_capacity(s.len() + guard);
    out.extend_from_slice(&s[s.len() - guard..]);
    out.extend_from_slice(s);
    IqBuffer { samples: out, sample_rate_hz: symbol.sample_rate_hz() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signalgen::{mean_power, to_freq};

    #[test]
    fn dc_and_guards_are_null() {
        let x = gen_heltf_freq();
        assert_eq!(x.values[0], Complex64::new(0.0, 0.0));
        for k in [-128, -123, -1, 0, 1, 123, 127] {
            assert_eq!(x.bin(k).norm(), 0.0, "bin {k}");
        }
    }

    #[test]
    fn exactly_242_unit_entries() {
        let x = gen_heltf_freq();
        let nonzero: Vec<_> = x.values.iter().filter(|v| v.norm() > 0.0).collect();
        assert_eq!(nonzero.len(), 242);
        assert!(nonzero.iter().all(|v| v.im == 0.0 && (v.re == 1.0 || v.re == -1.0)));
        // both signs occur
        assert!(nonzero.iter().any(|v| v.re > 0.0) && nonzero.iter().any(|v| v.re < 0.0));
        assert_eq!(x, gen_heltf_freq());
    }

    #[test]
    fn lfsr_has_full_period() {
        let mut l = Lfsr(LFSR_SEED);
        let mut states = std::collections::HashSet::new();
        for _ in 0..127 {
            l.next_bit();
            states.insert(l.0);
        }
        assert_eq!(states.len(), 127);
        assert_eq!(l.0, LFSR_SEED);
    }

    #[test]
    fn time_symbol_has_unit_power_and_round_trips() {
        let x = gen_heltf_freq();
        let t = heltf_time(&x);
        assert_eq!(t.len(), 256);
        assert!((mean_power(t.samples()) - 1.0).abs() < 1e-9);
        let back = to_freq(t.samples());
        for (a, b) in back.iter().zip(&x.values) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn guard_interval_is_cyclic() {
        let t = heltf_time(&gen_heltf_freq());
        let g = with_guard_interval(&t, 32);
        assert_eq!(g.len(), 288);
        assert_eq!(&g.samples()[..32], &t.samples()[224..]);
        assert_eq!(&g.samples()[32..], t.samples());
    }
}
