//! IEEE 802.15.4 2.4 GHz O-QPSK PHY: 4-bit symbols spread to 32 chips,
//! 2 Mchip/s, half-sine pulses, Q branch delayed by one chip.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::{mean_power, IqBuffer, SignalError, SAMPLE_RATE_HZ};

const CHIP_RATE: f64 = 2e6;
/// 20 MHz samples per chip period.
pub const LRWPAN_SAMPLES_PER_CHIP: usize = (SAMPLE_RATE_HZ / CHIP_RATE) as usize;
const PREAMBLE_OCTETS: usize = 4;
const SFD: u8 = 0xA7;
/// Preamble, SFD and PHR octets in front of the PSDU.
const HEADER_OCTETS: usize = PREAMBLE_OCTETS + 2;
const OCTET_DURATION_S: f64 = 32e-6;

/// Chip sequence of data symbol 0, c0 first.
const SYMBOL0_CHIPS: u32 = 0b1101_1001_1100_0011_0101_0010_0010_1110;

/// Chips of data symbol `sym` (0..16), c0 first.
fn chips(sym: u8) -> [u8; 32] {
    let base: [u8; 32] = std::array::from_fn(|i| ((SYMBOL0_CHIPS >> (31 - i)) & 1) as u8);
    let shift = 4 * (sym as usize & 7);
    let mut out: [u8; 32] = std::array::from_fn(|i| base[(i + 32 - shift) % 32]);
    if sym >= 8 {
        out.iter_mut().skip(1).step_by(2).for_each(|c| *c ^= 1);
    }
    out
}

/// PHY-level airtime of a frame carrying `psdu_octets`.
pub fn lrwpan_airtime_s(psdu_octets: usize) -> f64 {
    (HEADER_OCTETS + psdu_octets) as f64 * OCTET_DURATION_S
}

/// Random-payload LR-WPAN frame at 20 MHz with unit average power.
pub fn gen_lrwpan_iq<R: Rng + ?Sized>(num_octets: usize, rng: &mut R) -> Result<IqBuffer, SignalError> {
    if num_octets == 0 {
        return Err(SignalError::EmptyFrame);
    }
    let mut octets = vec![0u8; PREAMBLE_OCTETS];
    octets.push(SFD);
    octets.push((num_octets & 0x7F) as u8);
    octets.extend((0..num_octets).map(|_| rng.random::<u8>()));

    let chip_stream: Vec<f64> = octets
        .iter()
        .flat_map(|&o| [o & 0x0F, o >> 4])
        .flat_map(chips)
        .map(|c| if c == 1 { 1.0 } else { -1.0 })
        .collect();

    let spc = LRWPAN_SAMPLES_PER_CHIP;
    let pulse: Vec<f64> = (0..2 * spc).map(|n| (PI * n as f64 / (2 * spc) as f64).sin()).collect();
    // I chips start at even chip slots, Q chips one chip later.
    let len = (chip_stream.len() + 1) * spc;
    let mut samples = vec![Complex64::new(0.0, 0.0); len];
    for (i, &c) in chip_stream.iter().enumerate() {
        let start = i * spc;
        for (n, &p) in pulse.iter().enumerate() {
            if i % 2 == 0 {
                samples[start + n].re += c * p;
            } else {
                samples[start + n].im += c * p;
            }
        }
    }
    let norm = mean_power(&samples).sqrt();
    samples.iter_mut().for_each(|s| *s /= norm);
    Ok(IqBuffer::at_20mhz(samples))
}
