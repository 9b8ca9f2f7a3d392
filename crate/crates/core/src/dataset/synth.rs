//! One CSI snapshot from seed to Eq.-style estimate: HE-LTF through a
//! multipath channel, optional shifted and faded interferer burst, AWGN,
//! 256-point DFT and division by the known symbol.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ClassLabel, DatasetError};
use crate::signalgen::{
    apply_channel, draw_channel, extract_csi, freq_shift, gen_ble_iq, gen_heltf_freq, gen_lrwpan_iq, heltf_time,
    mix_and_degrade, with_guard_interval, ChannelProfile, CsiSnapshot, FreqSymbol, Interference, InterfererSpec,
    IqBuffer, RuLayout, Technology, FFT_SIZE, GUARD_SAMPLES,
};

/// Smallest interference overlap with the 256-sample window (25%).
pub const MIN_OVERLAP: usize = FFT_SIZE / 4;

/// How a snapshot was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTrace {
    pub wifi_profile: ChannelProfile,
    pub interferer: Option<InterfererSpec>,
    pub interferer_profile: Option<ChannelProfile>,
    /// Window samples covered by the interferer burst.
    pub overlap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedSnapshot {
    pub csi: CsiSnapshot,
    pub trace: SynthTrace,
}

struct Reference {
    freq: FreqSymbol,
    tx: IqBuffer,
}

fn reference() -> &'static Reference {
    static REF: OnceLock<Reference> = OnceLock::new();
    REF.get_or_init(|| {
        let freq = gen_heltf_freq();
        let tx = with_guard_interval(&heltf_time(&freq), GUARD_SAMPLES);
        Reference { freq, tx }
    })
}

fn random_profile<R: Rng>(rng: &mut R) -> ChannelProfile {
    if rng.random::<bool>() {
        ChannelProfile::ModelB
    } else {
        ChannelProfile::ModelC
    }
}

fn interferer_burst<R: Rng>(spec: &InterfererSpec, rng: &mut R) -> Result<IqBuffer, DatasetError> {
    let octets = rng.random_range(8..=20);
    let base = match spec.technology {
        Technology::LrWpan => gen_lrwpan_iq(octets, rng)?,
        Technology::Ble => gen_ble_iq(octets, rng)?,
    };
    Ok(freq_shift(&base, spec.center_offset_hz)?)
}

/// Picks the covered length uniformly in [MIN_OVERLAP, 256] and places the
/// burst so exactly that many window samples are hit.
fn draw_offset<R: Rng>(burst_len: usize, rng: &mut R) -> (isize, usize) {
    let overlap = rng.random_range(MIN_OVERLAP..=FFT_SIZE);
    let offset = if overlap == FFT_SIZE {
        rng.random_range(0..=burst_len - FFT_SIZE) as isize
    } else if rng.random::<bool>() {
        // burst starts inside the window
        -((FFT_SIZE - overlap) as isize)
    } else {
        // burst ends inside the window
        (burst_len - overlap) as isize
    };
    (offset, overlap)
}

/// Deterministically synthesizes the snapshot for `(class, snr, sir, seed)`.
/// `sir_db` is ignored for the clean class.
pub fn synthesize_snapshot(
    class: ClassLabel,
    snr_db: f64,
    sir_db: f64,
    layout: RuLayout,
    seed: u64,
) -> Result<SynthesizedSnapshot, DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = reference();

    let wifi_profile = random_profile(&mut rng);
    let h_wifi = draw_channel(wifi_profile, &mut rng);
    let rx = apply_channel(&r.tx, &h_wifi).slice(GUARD_SAMPLES, FFT_SIZE);

    let spec = class.interferer();
    let (mixed, interferer_profile, overlap) = match spec {
        None => (mix_and_degrade(&rx, 1.0, None, snr_db, &mut rng)?, None, 0),
        Some(spec) => {
            let burst = interferer_burst(&spec, &mut rng)?;
            let profile = random_profile(&mut rng);
            let h_cti = draw_channel(profile, &mut rng);
            let faded = apply_channel(&burst, &h_cti);
            let (offset, overlap) = draw_offset(faded.len(), &mut rng);
            let cti = Interference { samples: &faded, sir_db, offset };
            (mix_and_degrade(&rx, 1.0, Some(cti), snr_db, &mut rng)?, Some(profile), overlap)
        }
    };
    let csi = extract_csi(&mixed, &r.freq, layout)?;
    Ok(SynthesizedSnapshot {
        csi,
        trace: SynthTrace { wifi_profile, interferer: spec, interferer_profile, overlap },
    })
}
