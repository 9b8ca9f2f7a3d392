use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::dataset::ClassLabel;
use crate::eval::RuMap;

/// Per-RU verdicts drawn from a classifier's behaviour: bitmaps (bit `r - 1`
/// for RU `r`) observed on interfered and on clean snapshots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictPool {
    pub interfered: Vec<u8>,
    pub clean: Vec<u8>,
}

impl VerdictPool {
    /// Converts class predictions into RU bitmaps through `map`. An
    /// interference prediction flags every RU its class overlaps.
    pub fn from_predictions(interfered: &[ClassLabel], clean: &[ClassLabel], map: &RuMap) -> Self {
        let bitmap = |c: &ClassLabel| map.ru_set(*c).iter().fold(0u8, |acc, r| acc | (1 << (r - 1)));
        Self { interfered: interfered.iter().map(bitmap).collect(), clean: clean.iter().map(bitmap).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectorModel {
    /// Flags exactly the RUs hit by a burst during the PPDU.
    #[default]
    Perfect,
    /// Independent per-RU coin flips.
    Probabilistic { tp_rate: f64, fp_rate: f64 },
    /// Resamples recorded classifier verdicts.
    ModelDriven { pool: VerdictPool },
}

impl DetectorModel {
    pub fn validate(&self) -> Result<(), SimError> {
        match self {
            DetectorModel::Perfect => Ok(()),
            DetectorModel::Probabilistic { tp_rate, fp_rate } => {
                if [tp_rate, fp_rate].iter().all(|p| (0.0..=1.0).contains(*p)) {
                    Ok(())
                } else {
                    Err(SimError::InvalidScenario("detector rates must lie in [0, 1]".into()))
                }
            }
            DetectorModel::ModelDriven { pool } => {
                if pool.interfered.is_empty() || pool.clean.is_empty() {
                    Err(SimError::InvalidScenario("verdict pools must be non-empty".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Verdict bitmap over `num_rus` RUs. `truth` has the bits of the RUs
    /// that actually carried interference during the PPDU.
    pub fn verdict(&self, truth: u8, num_rus: usize, rng: &mut impl Rng) -> u8 {
        let mask = ((1u16 << num_rus) - 1) as u8;
        match self {
            DetectorModel::Perfect => truth & mask,
            DetectorModel::Probabilistic { tp_rate, fp_rate } => (0..num_rus).fold(0u8, |acc, r| {
                let p = if truth & (1 << r) != 0 { *tp_rate } else { *fp_rate };
                if rng.random_bool(p) {
                    acc | (1 << r)
                } else {
                    acc
                }
            }),
            DetectorModel::ModelDriven { pool } => {
                let src = if truth != 0 { &pool.interfered } else { &pool.clean };
                src[rng.random_range(0..src.len())] & mask
            }
        }
    }
}

pub const FEEDBACK_LEN: usize = 4;

/// Detection report sent from a station to the AP after each PPDU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FeedbackMessage {
    pub sta: u8,
    pub seq: u16,
    /// Bit `r - 1` set when interference was detected on RU `r`.
    pub bitmap: u8,
}

impl FeedbackMessage {
    /// `sta u8 | seq u16 LE | bitmap u8`
    pub fn encode(&self) -> [u8; FEEDBACK_LEN] {
        let s = self.seq.to_le_bytes();
        [self.sta, s[0], s[1], self.bitmap]
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, SimError> {
        let b: [u8; FEEDBACK_LEN] = bytes.try_into().map_err(|_| SimError::FeedbackLength(bytes.len()))?;
        Ok(Self { sta: b[0], seq: u16::from_le_bytes([b[1], b[2]]), bitmap: b[3] })
    }

    pub fn detected(&self, ru: u8) -> bool {
        ru >= 1 && ru <= 8 && self.bitmap & (1 << (ru - 1)) != 0
    }
}
