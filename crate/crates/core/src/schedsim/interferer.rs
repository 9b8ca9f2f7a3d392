use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimError;

fn default_channel() -> u8 {
    14
}
fn default_burst() -> f64 {
    3.83
}
fn default_duty() -> f64 {
    0.35
}
fn default_jitter() -> f64 {
    0.2
}

/// Single ON/OFF LR-WPAN source next to STA2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfererConfig {
    #[serde(default = "default_channel")]
    pub channel: u8,
    #[serde(default = "default_burst")]
    pub burst_airtime_ms: f64,
    /// 0 disables the interferer.
    #[serde(default = "default_duty")]
    pub duty_cycle_target: f64,
    /// OFF gaps are uniform within ±jitter of their nominal length.
    #[serde(default = "default_jitter")]
    pub jitter: f64,
}

impl Default for InterfererConfig {
    fn default() -> Self {
        Self {
            channel: default_channel(),
            burst_airtime_ms: default_burst(),
            duty_cycle_target: default_duty(),
            jitter: default_jitter(),
        }
    }
}

impl InterfererConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidScenario(m.to_owned()));
        if !(11..=14).contains(&self.channel) {
            return bad("interferer channel must be 11..=14");
        }
        if !(self.burst_airtime_ms > 0.0 && self.burst_airtime_ms.is_finite()) {
            return bad("burst_airtime_ms must be positive");
        }
        if !(0.0..1.0).contains(&self.duty_cycle_target) {
            return bad("duty_cycle_target must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return bad("jitter must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.duty_cycle_target > 0.0
    }

    pub fn burst_ns(&self) -> u64 {
        (self.burst_airtime_ms * 1e6).round() as u64
    }

    /// Mean OFF gap that yields the target duty cycle.
    pub fn nominal_gap_ns(&self) -> f64 {
        self.burst_ns() as f64 * (1.0 - self.duty_cycle_target) / self.duty_cycle_target
    }
}

/// Sorted, non-overlapping ON intervals `[start, end)` in nanoseconds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BurstSchedule {
    pub bursts: Vec<(u64, u64)>,
    pub duration_ns: u64,
}

impl BurstSchedule {
    pub fn realized_duty_cycle(&self) -> f64 {
        if self.duration_ns == 0 {
            return 0.0;
        }
        let on: u64 = self.bursts.iter().map(|&(s, e)| e.min(self.duration_ns).saturating_sub(s)).sum();
        on as f64 / self.duration_ns as f64
    }

    /// True when any burst intersects `[start, end)`.
    pub fn overlaps(&self, start: u64, end: u64) -> bool {
        let i = self.bursts.partition_point(|&(_, e)| e <= start);
        self.bursts.get(i).is_some_and(|&(s, _)| s < end)
    }
}

/// Alternating ON bursts and jittered OFF gaps over `duration_ns`, starting
/// at a random phase of the first cycle.
pub fn interferer_process(cfg: &InterfererConfig, duration_ns: u64, rng: &mut impl Rng) -> BurstSchedule {
    let mut bursts = Vec::new();
    if cfg.is_active() {
        let on = cfg.burst_ns();
        let gap = cfg.nominal_gap_ns();
        let (lo, hi) = (gap * (1.0 - cfg.jitter), gap * (1.0 + cfg.jitter));
        let draw_gap = |rng: &mut dyn rand::RngCore| if hi > lo { rng.random_range(lo..hi) } else { lo };
        let mut t = rng.random_range(0.0..(on as f64 + gap)).round() as u64;
        while t < duration_ns {
            bursts.push((t, t + on));
            t += on + draw_gap(rng).round() as u64;
        }
    }
    BurstSchedule { bursts, duration_ns }
}
