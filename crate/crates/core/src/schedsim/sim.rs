use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    allocate_rus, interferer_process, ppdu_airtime_ns, us_to_ns, Assignment, BurstSchedule, DetectionHistory,
    FeedbackMessage, RuWidth, Scheduler, SimError, SimScenario,
};
use crate::dataset::{combine, ClassLabel};
use crate::eval::build_ru106_map;
use crate::signalgen::InterfererSpec;

const NUM_STAS: usize = 2;
const NUM_RUS: usize = 2;
/// Only this station is within range of the interferer.
const INTERFERED_STA: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    // Declaration order is the tie-break at equal timestamps: intervals are
    // half-open, so anything ending at `t` is handled before anything starting there.
    PpduEnd,
    BurstOff(usize),
    BurstOn(usize),
    PpduBegin,
    TxStart,
}

struct Queue {
    heap: BinaryHeap<Reverse<(u64, Event, u64)>>,
    seq: u64,
}

impl Queue {
    fn push(&mut self, t: u64, e: Event) {
        self.heap.push(Reverse((t, e, self.seq)));
        self.seq += 1;
    }

    fn pop(&mut self) -> Option<(u64, Event)> {
        self.heap.pop().map(|Reverse((t, e, _))| (t, e))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StaCounters {
    pub offered_bytes: u64,
    pub delivered_bytes: u64,
    pub lost_bytes: u64,
    pub ppdus: u64,
    pub lost_ppdus: u64,
}

/// One simulated run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepOutcome {
    pub per_sta: [StaCounters; NUM_STAS],
    pub throughput_mbps: [f64; NUM_STAS],
    pub duty_cycle: f64,
    pub mu_ppdus_after_warmup: u64,
    /// MU PPDUs after warm-up that put STA2 on an RU free of the interferer.
    pub sta2_clean_after_warmup: u64,
    pub feedback_messages: u64,
}

struct InFlight {
    served: Vec<(u8, Assignment)>,
    burst_seen: bool,
}

/// Bitmap of the 106-tone RUs the interferer overlaps.
fn interfered_rus(channel: u8) -> u8 {
    let spec = InterfererSpec::lrwpan(channel).expect("validated channel");
    let class = ClassLabel::from_interferer(&spec).expect("LR-WPAN channels map to classes");
    build_ru106_map().ru_set(class).iter().fold(0, |acc, r| acc | (1 << (r - 1)))
}

/// Runs repetition `rep` of `sc`.
pub fn run_repetition(sc: &SimScenario, rep: u64) -> Result<RepOutcome, SimError> {
    sc.validate()?;
    let seed = combine(sc.seed, rep);
    let duration = sc.duration_ns();
    let bursts: BurstSchedule =
        interferer_process(&sc.interferer, duration, &mut ChaCha8Rng::seed_from_u64(combine(seed, 1)));
    let mut mac_rng = ChaCha8Rng::seed_from_u64(combine(seed, 2));
    let mut det_rng = ChaCha8Rng::seed_from_u64(combine(seed, 3));

    let t = &sc.timing;
    let bits = 8 * sc.payload_octets as u64 + u64::from(t.overhead_bits);
    let su_air = ppdu_airtime_ns(bits, sc.mcs, RuWidth::Full242, us_to_ns(t.su_preamble_us))?;
    let mu_air = ppdu_airtime_ns(bits, sc.mcs, RuWidth::Ru106, us_to_ns(t.mu_preamble_us))?;
    let cti_rus = interfered_rus(sc.interferer.channel);

    let mut q = Queue { heap: BinaryHeap::new(), seq: 0 };
    if let Some(&(s, _)) = bursts.bursts.first() {
        q.push(s, Event::BurstOn(0));
    }
    q.push(0, Event::TxStart);

    let mut history = DetectionHistory::new(NUM_STAS, NUM_RUS);
    let mut counters = [StaCounters::default(); NUM_STAS];
    let mut seqs = [0u16; NUM_STAS];
    let mut burst_on = false;
    let mut inflight: Option<InFlight> = None;
    let mut pending: Option<(u64, Vec<(u8, Assignment)>)> = None;
    let mut next_su_sta = 1u8;
    let (mut mu_ppdus, mut mu_after, mut clean_after, mut feedback) = (0u64, 0u64, 0u64, 0u64);

    while let Some((now, ev)) = q.pop() {
        match ev {
            Event::BurstOn(i) => {
                burst_on = true;
                if let Some(tx) = inflight.as_mut() {
                    tx.burst_seen = true;
                }
                q.push(bursts.bursts[i].1, Event::BurstOff(i));
            }
            Event::BurstOff(i) => {
                burst_on = false;
                if let Some(&(s, _)) = bursts.bursts.get(i + 1) {
                    q.push(s, Event::BurstOn(i + 1));
                }
            }
            Event::TxStart => {
                let (begin, air, served) = match sc.scheduler {
                    Scheduler::SuOnly => {
                        let slots = mac_rng.random_range(0..=t.cw);
                        let begin = now + us_to_ns(t.difs_us) + u64::from(slots) * us_to_ns(t.slot_us);
                        let sta = next_su_sta;
                        next_su_sta = 3 - next_su_sta;
                        (begin, su_air, vec![(sta, Assignment::FullBand)])
                    }
                    Scheduler::NaiveMu => (now, mu_air, vec![(1, Assignment::Ru(1)), (2, Assignment::Ru(2))]),
                    Scheduler::CtiAwareMu => {
                        let a = allocate_rus(&history, &[1, 2])?;
                        (now, mu_air, (1..=2).map(|s| (s, a.of(s).unwrap())).collect())
                    }
                };
                if begin + air <= duration {
                    q.push(begin, Event::PpduBegin);
                    pending = Some((begin + air, served));
                }
            }
            Event::PpduBegin => {
                let (end, served) = pending.take().expect("PPDU scheduled");
                inflight = Some(InFlight { served, burst_seen: burst_on });
                q.push(end, Event::PpduEnd);
            }
            Event::PpduEnd => {
                let tx = inflight.take().expect("PPDU in flight");
                let is_mu = sc.scheduler != Scheduler::SuOnly;
                if is_mu {
                    if mu_ppdus >= sc.warmup_ppdus {
                        mu_after += 1;
                        if let Some((_, Assignment::Ru(r))) = tx.served.iter().find(|(s, _)| *s == INTERFERED_STA) {
                            clean_after += u64::from(cti_rus & (1 << (r - 1)) == 0);
                        }
                    }
                    mu_ppdus += 1;
                }
                for &(sta, asg) in &tx.served {
                    let hit = sta == INTERFERED_STA && tx.burst_seen;
                    let overlaps = match asg {
                        Assignment::FullBand => true,
                        Assignment::Ru(r) => cti_rus & (1 << (r - 1)) != 0,
                    };
                    let lost = hit && overlaps;
                    let c = &mut counters[usize::from(sta) - 1];
                    c.ppdus += 1;
                    c.offered_bytes += sc.payload_octets as u64;
                    if lost {
                        c.lost_ppdus += 1;
                        c.lost_bytes += sc.payload_octets as u64;
                    } else {
                        c.delivered_bytes += sc.payload_octets as u64;
                    }
                    if lost && !sc.feedback_on_loss {
                        continue;
                    }
                    // The HE-LTF spans the whole channel, so every RU gets a verdict.
                    let truth = if hit { cti_rus } else { 0 };
                    let seq = &mut seqs[usize::from(sta) - 1];
                    let msg = FeedbackMessage { sta, seq: *seq, bitmap: sc.detector.verdict(truth, NUM_RUS, &mut det_rng) };
                    *seq = seq.wrapping_add(1);
                    let msg = FeedbackMessage::decode(&msg.encode())?;
                    for ru in 1..=NUM_RUS as u8 {
                        history.push(msg.sta, ru, msg.detected(ru))?;
                    }
                    feedback += 1;
                }
                let gap = if is_mu { us_to_ns(t.mu_overhead_us) } else { us_to_ns(t.sifs_us) + us_to_ns(t.ack_us) };
                q.push(now + gap, Event::TxStart);
            }
        }
    }

    let secs = duration as f64 * 1e-9;
    Ok(RepOutcome {
        per_sta: counters,
        throughput_mbps: counters.map(|c| c.delivered_bytes as f64 * 8.0 / secs / 1e6),
        duty_cycle: bursts.realized_duty_cycle(),
        mu_ppdus_after_warmup: mu_after,
        sta2_clean_after_warmup: clean_after,
        feedback_messages: feedback,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaReport {
    pub sta: u8,
    pub mean_mbps: f64,
    /// Sample standard deviation across repetitions.
    pub std_mbps: f64,
    pub per: f64,
    pub offered_bytes: u64,
    pub delivered_bytes: u64,
    pub lost_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub scheduler: Scheduler,
    pub repetitions: usize,
    pub duration_s: f64,
    pub per_sta: Vec<StaReport>,
    /// Mean realized interferer duty cycle.
    pub duty_cycle: f64,
    /// Fraction of post-warm-up MU PPDUs with STA2 on a clean RU.
    pub sta2_clean_ru_fraction: Option<f64>,
    pub reps: Vec<RepOutcome>,
}

impl SimReport {
    pub fn sta(&self, sta: u8) -> &StaReport {
        &self.per_sta[usize::from(sta) - 1]
    }

    pub fn total_mbps(&self) -> f64 {
        self.per_sta.iter().map(|s| s.mean_mbps).sum()
    }

    pub const CSV_HEADER: &'static str = "scheduler,sta,mean_mbps,std_mbps,per,duty_cycle";

    /// Rows without the header.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for s in &self.per_sta {
            writeln!(
                out,
                "{},{},{:.4},{:.4},{:.6},{:.6}",
                self.scheduler.name(),
                s.sta,
                s.mean_mbps,
                s.std_mbps,
                s.per,
                self.duty_cycle
            )
            .unwrap();
        }
        out
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}", Self::CSV_HEADER, self.csv_rows())
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// All repetitions of `sc`; repetitions run in parallel but each is a
/// sequential, seeded event loop.
pub fn run_scenario(sc: &SimScenario) -> Result<SimReport, SimError> {
    sc.validate()?;
    let reps = (0..sc.repetitions as u64)
        .into_par_iter()
        .map(|r| run_repetition(sc, r))
        .collect::<Result<Vec<_>, _>>()?;
    let per_sta = (0..NUM_STAS)
        .map(|i| {
            let tp: Vec<f64> = reps.iter().map(|r| r.throughput_mbps[i]).collect();
            let (mean_mbps, std_mbps) = mean_std(&tp);
            let sum = |f: fn(&StaCounters) -> u64| reps.iter().map(|r| f(&r.per_sta[i])).sum::<u64>();
            let (offered, delivered, lost) = (sum(|c| c.offered_bytes), sum(|c| c.delivered_bytes), sum(|c| c.lost_bytes));
            StaReport {
                sta: i as u8 + 1,
                mean_mbps,
                std_mbps,
                per: if offered > 0 { lost as f64 / offered as f64 } else { 0.0 },
                offered_bytes: offered,
                delivered_bytes: delivered,
                lost_bytes: lost,
            }
        })
        .collect();
    let mu_after: u64 = reps.iter().map(|r| r.mu_ppdus_after_warmup).sum();
    let clean: u64 = reps.iter().map(|r| r.sta2_clean_after_warmup).sum();
    Ok(SimReport {
        scheduler: sc.scheduler,
        repetitions: sc.repetitions,
        duration_s: sc.duration_s,
        per_sta,
        duty_cycle: reps.iter().map(|r| r.duty_cycle).sum::<f64>() / reps.len() as f64,
        sta2_clean_ru_fraction: (mu_after > 0).then(|| clean as f64 / mu_after as f64),
        reps,
    })
}
