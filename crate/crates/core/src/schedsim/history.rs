use serde::Serialize;

use super::SimError;

pub const HISTORY_DEPTH: usize = 64;

/// Last 64 detection verdicts per (station, RU), newest in the low bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionHistory {
    num_rus: usize,
    bits: Vec<u64>,
    lens: Vec<u8>,
}

impl DetectionHistory {
    pub fn new(num_stas: usize, num_rus: usize) -> Self {
        Self { num_rus, bits: vec![0; num_stas * num_rus], lens: vec![0; num_stas * num_rus] }
    }

    pub fn num_stas(&self) -> usize {
        self.bits.len() / self.num_rus.max(1)
    }

    pub fn num_rus(&self) -> usize {
        self.num_rus
    }

    fn slot(&self, sta: u8, ru: u8) -> Result<usize, SimError> {
        let (s, r) = (usize::from(sta), usize::from(ru));
        if s == 0 || s > self.num_stas() {
            return Err(SimError::UnknownStation(sta));
        }
        if r == 0 || r > self.num_rus {
            return Err(SimError::InvalidScenario(format!("RU {ru} out of range")));
        }
        Ok((s - 1) * self.num_rus + (r - 1))
    }

    /// Records one verdict for 1-based `sta` and `ru`, evicting the oldest beyond 64.
    pub fn push(&mut self, sta: u8, ru: u8, detected: bool) -> Result<(), SimError> {
        let i = self.slot(sta, ru)?;
        self.bits[i] = (self.bits[i] << 1) | u64::from(detected);
        self.lens[i] = (self.lens[i] + 1).min(HISTORY_DEPTH as u8);
        Ok(())
    }

    pub fn count(&self, sta: u8, ru: u8) -> Result<u32, SimError> {
        Ok(self.bits[self.slot(sta, ru)?].count_ones())
    }

    /// Number of verdicts held (at most 64).
    pub fn len(&self, sta: u8, ru: u8) -> Result<usize, SimError> {
        Ok(usize::from(self.lens[self.slot(sta, ru)?]))
    }

    pub fn is_empty(&self) -> bool {
        self.lens.iter().all(|&l| l == 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Assignment {
    /// 1-based 106-tone RU.
    Ru(u8),
    FullBand,
}

/// Assignment per station, indexed by station id minus one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuAllocation {
    pub per_sta: Vec<Assignment>,
}

impl RuAllocation {
    pub fn of(&self, sta: u8) -> Option<Assignment> {
        self.per_sta.get(usize::from(sta).checked_sub(1)?).copied()
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for rest in permutations(n - 1) {
            let mut p = vec![first];
            p.extend(rest.into_iter().map(|v| if v >= first { v + 1 } else { v }));
            out.push(p);
        }
    }
    out
}

/// One RU per user, minimizing the summed detection counts. Permutations are
/// visited in lexicographic order and only a strictly lower cost replaces the
/// incumbent, so ties go to the lowest RU for the lowest station id.
pub fn allocate_rus(hist: &DetectionHistory, users: &[u8]) -> Result<RuAllocation, SimError> {
    if users.len() != hist.num_rus() {
        return Err(SimError::AllocationMismatch { users: users.len(), rus: hist.num_rus() });
    }
    let mut sorted = users.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != users.len() {
        return Err(SimError::InvalidScenario("duplicate user".into()));
    }
    let mut best: Option<(u32, Vec<usize>)> = None;
    for perm in permutations(sorted.len()) {
        let mut cost = 0;
        for (sta, ru) in sorted.iter().zip(&perm) {
            cost += hist.count(*sta, *ru as u8 + 1)?;
        }
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, perm));
        }
    }
    let (_, perm) = best.expect("at least one permutation");
    let max_sta = usize::from(*sorted.last().unwrap_or(&0));
    let mut per_sta = vec![Assignment::FullBand; max_sta];
    for (sta, ru) in sorted.iter().zip(perm) {
        per_sta[usize::from(*sta) - 1] = Assignment::Ru(ru as u8 + 1);
    }
    Ok(RuAllocation { per_sta })
}
