//! Discrete-event simulation of downlink scheduling from one AP to two
//! stations, where only STA2 sits next to a duty-cycled LR-WPAN interferer.
//!
//! Three schedulers are compared: alternating full-band SU PPDUs, MU OFDMA
//! with STA2 pinned to the interfered 106-tone RU, and MU OFDMA that assigns
//! RUs from each station's recent detection feedback.

mod detector;
mod history;
mod interferer;
mod phy;
mod sim;

pub use detector::{DetectorModel, FeedbackMessage, VerdictPool, FEEDBACK_LEN};
pub use history::{allocate_rus, Assignment, DetectionHistory, RuAllocation, HISTORY_DEPTH};
pub use interferer::{interferer_process, BurstSchedule, InterfererConfig};
pub use phy::{phy_rate, ppdu_airtime_ns, RuWidth, OFDM_SYMBOL_NS};
pub use sim::{run_repetition, run_scenario, RepOutcome, SimReport, StaReport};

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("MCS {0} outside 0..=11")]
    InvalidMcs(u8),
    #[error("{users} users cannot be matched to {rus} RUs")]
    AllocationMismatch { users: usize, rus: usize },
    #[error("unknown station {0}")]
    UnknownStation(u8),
    #[error("feedback message must be {FEEDBACK_LEN} bytes, got {0}")]
    FeedbackLength(usize),
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheduler {
    SuOnly,
    NaiveMu,
    CtiAwareMu,
}

impl Scheduler {
    pub const ALL: [Scheduler; 3] = [Scheduler::SuOnly, Scheduler::NaiveMu, Scheduler::CtiAwareMu];

    pub fn name(self) -> &'static str {
        match self {
            Scheduler::SuOnly => "su_only",
            Scheduler::NaiveMu => "naive_mu",
            Scheduler::CtiAwareMu => "cti_aware_mu",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }
}

/// MAC timing in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacTiming {
    pub su_preamble_us: f64,
    pub mu_preamble_us: f64,
    /// Trigger plus block-ack exchange around every MU PPDU.
    pub mu_overhead_us: f64,
    pub difs_us: f64,
    pub slot_us: f64,
    /// Backoff is uniform over `0..=cw` slots.
    pub cw: u32,
    pub sifs_us: f64,
    pub ack_us: f64,
    /// Service and tail bits added to the payload.
    pub overhead_bits: u32,
}

impl Default for MacTiming {
    fn default() -> Self {
        Self {
            su_preamble_us: 44.0,
            mu_preamble_us: 52.0,
            mu_overhead_us: 100.0,
            difs_us: 34.0,
            slot_us: 9.0,
            cw: 15,
            sifs_us: 16.0,
            ack_us: 32.0,
            overhead_bits: 16,
        }
    }
}

fn default_duration() -> f64 {
    60.0
}
fn default_reps() -> usize {
    5
}
fn default_mcs() -> u8 {
    7
}
fn default_payload() -> usize {
    1470
}
fn default_true() -> bool {
    true
}
fn default_warmup() -> u64 {
    HISTORY_DEPTH as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScenario {
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    pub scheduler: Scheduler,
    #[serde(default = "default_mcs")]
    pub mcs: u8,
    #[serde(default = "default_payload")]
    pub payload_octets: usize,
    #[serde(default)]
    pub interferer: InterfererConfig,
    #[serde(default)]
    pub detector: DetectorModel,
    /// Stations still report detections for PPDUs whose payload was lost.
    #[serde(default = "default_true")]
    pub feedback_on_loss: bool,
    /// MU PPDUs ignored when measuring the steady-state allocation.
    #[serde(default = "default_warmup")]
    pub warmup_ppdus: u64,
    #[serde(default)]
    pub timing: MacTiming,
    #[serde(default)]
    pub seed: u64,
}

impl SimScenario {
    pub fn new(scheduler: Scheduler, seed: u64) -> Self {
        Self {
            duration_s: default_duration(),
            repetitions: default_reps(),
            scheduler,
            mcs: default_mcs(),
            payload_octets: default_payload(),
            interferer: InterfererConfig::default(),
            detector: DetectorModel::Perfect,
            feedback_on_loss: true,
            warmup_ppdus: default_warmup(),
            timing: MacTiming::default(),
            seed,
        }
    }

    /// Same scenario with the interferer switched off.
    pub fn without_cti(&self) -> Self {
        let mut s = self.clone();
        s.interferer.duty_cycle_target = 0.0;
        s
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidScenario(m.to_owned()));
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad("duration_s must be positive");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if self.payload_octets == 0 {
            return bad("payload_octets must be positive");
        }
        if self.mcs > 11 {
            return Err(SimError::InvalidMcs(self.mcs));
        }
        let t = &self.timing;
        let times = [t.su_preamble_us, t.mu_preamble_us, t.mu_overhead_us, t.difs_us, t.slot_us, t.sifs_us, t.ack_us];
        if times.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return bad("timing values must be non-negative");
        }
        self.interferer.validate()?;
        self.detector.validate()
    }

    pub fn from_toml_str(s: &str) -> Result<Self, SimError> {
        let sc: Self = toml::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub(crate) fn duration_ns(&self) -> u64 {
        (self.duration_s * 1e9).round() as u64
    }
}

pub(crate) fn us_to_ns(us: f64) -> u64 {
    (us * 1e3).round() as u64
}
