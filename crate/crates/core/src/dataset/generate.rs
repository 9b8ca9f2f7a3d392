use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    auto_scale, quantize_csi, synthesize_snapshot, ClassLabel, Dataset, DatasetError, DatasetManifest, LabeledSample,
};

const CALIBRATION_TAG: u64 = 0xCA11_B8A7_E000_0001;
const SPLIT_TAG: u64 = 0x5_1117;
const CALIBRATION_PER_SNR: u64 = 16;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn combine(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

/// Seed of one (class, snr, sir) cell. A missing SIR hashes as -128.
pub fn cell_seed(master: u64, class: ClassLabel, snr_db: i8, sir_db: Option<i8>) -> u64 {
    let sir = sir_db.unwrap_or(i8::MIN);
    [u64::from(class.id()), snr_db as u8 as u64, sir as u8 as u64]
        .into_iter()
        .fold(master, combine)
}

pub fn sample_seed(cell: u64, index: u64) -> u64 {
    combine(cell, index)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDataset {
    pub train: Dataset,
    pub val: Dataset,
    /// Quantization scale applied to every sample.
    pub scale: f64,
}

/// Quantization scale for `manifest`: the configured one, or the scale that
/// puts the mean magnitude of clean snapshots at `target_mean_mag`.
pub fn calibrate_scale(manifest: &DatasetManifest) -> Result<f64, DatasetError> {
    if let Some(s) = manifest.quant_scale {
        return Ok(s);
    }
    let mut csis = Vec::new();
    for &snr in &manifest.snr_list {
        for i in 0..CALIBRATION_PER_SNR {
            let seed = combine(combine(manifest.seed ^ CALIBRATION_TAG, snr as u8 as u64), i);
            let s = synthesize_snapshot(ClassLabel::NO_CTI, f64::from(snr), 0.0, manifest.ru_layout, seed)?;
            csis.push(s.csi);
        }
    }
    auto_scale(&csis, manifest.target_mean_mag)
}

struct Group {
    class: ClassLabel,
    snr: i8,
    sir: Option<i8>,
}

fn groups(m: &DatasetManifest) -> Vec<Group> {
    let mut out = Vec::new();
    for &snr in &m.snr_list {
        let snr = snr as i8;
        if !m.c1_per_sir_cell && m.classes.contains(&ClassLabel::NO_CTI) {
            out.push(Group { class: ClassLabel::NO_CTI, snr, sir: None });
        }
        for &sir in &m.sir_list {
            for &class in &m.classes {
                if class == ClassLabel::NO_CTI && !m.c1_per_sir_cell {
                    continue;
                }
                out.push(Group { class, snr, sir: Some(sir as i8) });
            }
        }
    }
    out
}

fn generate_group(
    m: &DatasetManifest,
    g: &Group,
    scale: f64,
) -> Result<(Vec<LabeledSample>, Vec<LabeledSample>), DatasetError> {
    let cell = cell_seed(m.seed, g.class, g.snr, g.sir);
    let sir = g.sir.map_or(0.0, f64::from);
    let mut samples = (0..m.samples_per_cell as u64)
        .map(|i| {
            let seed = sample_seed(cell, i);
            let s = synthesize_snapshot(g.class, f64::from(g.snr), sir, m.ru_layout, seed)?;
            Ok(LabeledSample { csi: quantize_csi(&s.csi, scale), label: g.class, snr_db: g.snr, sir_db: g.sir, seed })
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(combine(cell, SPLIT_TAG));
    samples.shuffle(&mut rng);
    let val = samples.split_off(m.train_per_group().min(samples.len()));
    Ok((samples, val))
}

/// Generates every cell of the manifest grid and splits each cell train/val.
/// Output order is fixed (snr, sir, class) regardless of thread count.
pub fn generate_dataset(manifest: &DatasetManifest) -> Result<GeneratedDataset, DatasetError> {
    manifest.validate()?;
    let scale = calibrate_scale(manifest)?;
    let parts = groups(manifest)
        .par_iter()
        .map(|g| generate_group(manifest, g, scale))
        .collect::<Result<Vec<_>, _>>()?;
    let mut train = Dataset::new(manifest.ru_layout);
    let mut val = Dataset::new(manifest.ru_layout);
    for (t, v) in parts {
        train.samples.extend(t);
        val.samples.extend(v);
    }
    Ok(GeneratedDataset { train, val, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn small(seed: u64) -> DatasetManifest {
        DatasetManifest {
            snr_list: vec![20],
            sir_list: vec![3, 9],
            samples_per_cell: 10,
            ..DatasetManifest::desk_default(seed)
        }
    }

    #[test]
    fn split_is_disjoint_and_balanced() {
        let m = DatasetManifest { samples_per_cell: 100, snr_list: vec![20], sir_list: vec![5], classes: vec![ClassLabel::new(3).unwrap()], ..small(1) };
        let g = generate_dataset(&m).unwrap();
        assert_eq!(g.train.len(), 80);
        assert_eq!(g.val.len(), 20);
        let train: HashSet<u64> = g.train.samples.iter().map(|s| s.seed).collect();
        assert!(g.val.samples.iter().all(|s| !train.contains(&s.seed)));
    }

    #[test]
    fn every_class_equally_often_per_cell() {
        let g = generate_dataset(&small(2)).unwrap();
        for sir in [3i8, 9] {
            let mut counts = [0usize; 14];
            for s in g.train.samples.iter().chain(&g.val.samples).filter(|s| s.sir_db == Some(sir)) {
                counts[s.label.index()] += 1;
            }
            assert!(counts.iter().all(|&c| c == 10), "{counts:?}");
        }
    }

    #[test]
    fn c1_once_per_snr_when_configured() {
        let m = DatasetManifest { c1_per_sir_cell: false, ..small(3) };
        let g = generate_dataset(&m).unwrap();
        let c1: Vec<_> = g.train.samples.iter().chain(&g.val.samples).filter(|s| s.label == ClassLabel::NO_CTI).collect();
        assert_eq!(c1.len(), 10);
        assert!(c1.iter().all(|s| s.sir_db.is_none()));
        assert_eq!(g.train.len() + g.val.len(), m.sample_count());
    }

    #[test]
    fn generation_is_reproducible() {
        let a = generate_dataset(&small(4)).unwrap();
        let b = generate_dataset(&small(4)).unwrap();
        assert_eq!(a, b);
        let c = generate_dataset(&small(5)).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn cell_seeds_differ() {
        let c = ClassLabel::new(2).unwrap();
        let seeds: HashSet<u64> = [
            cell_seed(1, c, 20, Some(1)),
            cell_seed(1, c, 20, Some(2)),
            cell_seed(1, c, 21, Some(1)),
            cell_seed(1, ClassLabel::new(3).unwrap(), 20, Some(1)),
            cell_seed(2, c, 20, Some(1)),
            cell_seed(1, c, 20, None),
        ]
        .into_iter()
        .collect();
        assert_eq!(seeds.len(), 6);
    }
}
