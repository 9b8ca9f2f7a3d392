use serde::{Deserialize, Serialize};

use super::SimError;

/// 12.8 us symbol plus 0.8 us guard interval.
pub const OFDM_SYMBOL_NS: u64 = 13_600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuWidth {
    Ru106,
    Full242,
}

impl RuWidth {
    pub fn data_tones(self) -> u32 {
        match self {
            RuWidth::Ru106 => 102,
            RuWidth::Full242 => 234,
        }
    }
}

/// (bits per subcarrier, coding rate numerator, denominator) for HE MCS 0..=11.
const MCS_TABLE: [(u32, u32, u32); 12] = [
    (1, 1, 2),
    (2, 1, 2),
    (2, 3, 4),
    (4, 1, 2),
    (4, 3, 4),
    (6, 2, 3),
    (6, 3, 4),
    (6, 5, 6),
    (8, 3, 4),
    (8, 5, 6),
    (10, 3, 4),
    (10, 5, 6),
];

fn data_bits_per_symbol(mcs: u8, width: RuWidth) -> Result<f64, SimError> {
    let &(bits, num, den) = MCS_TABLE.get(usize::from(mcs)).ok_or(SimError::InvalidMcs(mcs))?;
    Ok(f64::from(width.data_tones() * bits * num) / f64::from(den))
}

/// Single-stream data rate in Mb/s.
pub fn phy_rate(mcs: u8, width: RuWidth) -> Result<f64, SimError> {
    Ok(data_bits_per_symbol(mcs, width)? / (OFDM_SYMBOL_NS as f64 * 1e-3))
}

/// Preamble plus a whole number of OFDM symbols carrying `bits`.
pub fn ppdu_airtime_ns(bits: u64, mcs: u8, width: RuWidth, preamble_ns: u64) -> Result<u64, SimError> {
    let per_symbol = data_bits_per_symbol(mcs, width)?;
    let symbols = (bits as f64 / per_symbol - 1e-9).ceil().max(0.0) as u64;
    Ok(preamble_ns + symbols * OFDM_SYMBOL_NS)
}
