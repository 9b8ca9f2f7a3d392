use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassLabel, DatasetError};
use crate::signalgen::RuLayout;

fn default_version() -> u16 {
    1
}
fn default_layout() -> RuLayout {
    RuLayout::Full242
}
fn default_samples() -> usize {
    100
}
fn default_classes() -> Vec<ClassLabel> {
    ClassLabel::all().collect()
}
fn default_split() -> f64 {
    0.8
}
fn default_target() -> f64 {
    64.0
}
fn default_true() -> bool {
    true
}

/// Everything needed to regenerate a dataset bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    #[serde(default = "default_version")]
    pub version: u16,
    #[serde(default = "default_layout")]
    pub ru_layout: RuLayout,
    pub snr_list: Vec<i32>,
    pub sir_list: Vec<i32>,
    #[serde(default = "default_samples")]
    pub samples_per_cell: usize,
    #[serde(default = "default_classes")]
    pub classes: Vec<ClassLabel>,
    #[serde(default = "default_split")]
    pub split_ratio: f64,
    pub seed: u64,
    #[serde(default = "default_target")]
    pub target_mean_mag: f64,
    /// Fixed quantization scale; calibrated from clean snapshots when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quant_scale: Option<f64>,
    /// C1 gets its own samples in every (snr, sir) cell; otherwise once per SNR.
    #[serde(default = "default_true")]
    pub c1_per_sir_cell: bool,
}

impl DatasetManifest {
    /// Desk-scale grid: SNR {14, 19, 24} x SIR {1, 8, 15}, 100 samples per class and cell.
    pub fn desk_default(seed: u64) -> Self {
        Self {
            version: 1,
            ru_layout: RuLayout::Full242,
            snr_list: vec![14, 19, 24],
            sir_list: vec![1, 8, 15],
            samples_per_cell: 100,
            classes: default_classes(),
            split_ratio: 0.8,
            seed,
            target_mean_mag: 64.0,
            quant_scale: None,
            c1_per_sir_cell: true,
        }
    }

    /// Full grid: SNR 14..=24 x SIR 1..=15 in 1 dB steps, 2000 samples per cell.
    pub fn full_scale(seed: u64) -> Self {
        Self {
            snr_list: (14..=24).collect(),
            sir_list: (1..=15).collect(),
            samples_per_cell: 2000,
            ..Self::desk_default(seed)
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: &str| Err(DatasetError::InvalidManifest(m.to_owned()));
        if self.version != 1 {
            return bad("only manifest version 1 is supported");
        }
        if self.snr_list.is_empty() {
            return bad("snr_list is empty");
        }
        let needs_sir = self.classes.iter().any(|c| *c != ClassLabel::NO_CTI) || self.c1_per_sir_cell;
        if needs_sir && self.sir_list.is_empty() {
            return bad("sir_list is empty");
        }
        for (name, list) in [("snr_list", &self.snr_list), ("sir_list", &self.sir_list)] {
            if list.iter().any(|v| !(-127..=127).contains(v)) {
                return Err(DatasetError::InvalidManifest(format!("{name} values must lie in -127..=127")));
            }
            let mut sorted = list.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != list.len() {
                return Err(DatasetError::InvalidManifest(format!("{name} has duplicates")));
            }
        }
        if self.samples_per_cell == 0 {
            return bad("samples_per_cell must be at least 1");
        }
        if self.classes.is_empty() {
            return bad("classes is empty");
        }
        let mut classes = self.classes.clone();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() != self.classes.len() {
            return bad("classes has duplicates");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio <= 1.0) {
            return bad("split_ratio must lie in (0, 1]");
        }
        if !(self.target_mean_mag > 0.0 && self.target_mean_mag <= 127.0) {
            return bad("target_mean_mag must lie in (0, 127]");
        }
        if let Some(s) = self.quant_scale {
            if !(s > 0.0 && s.is_finite()) {
                return bad("quant_scale must be positive");
            }
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self, DatasetError> {
        let m: Self = toml::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml_string(&self) -> Result<String, DatasetError> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Total number of samples the manifest produces.
    pub fn sample_count(&self) -> usize {
        let cells = self.snr_list.len() * self.sir_list.len();
        self.classes
            .iter()
            .map(|c| {
                if *c == ClassLabel::NO_CTI && !self.c1_per_sir_cell {
                    self.snr_list.len()
                } else {
                    cells
                }
            })
            .sum::<usize>()
            * self.samples_per_cell
    }

    pub fn train_per_group(&self) -> usize {
        ((self.samples_per_cell as f64) * self.split_ratio).round() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_manifest_with_defaults() {
        let m = DatasetManifest::from_toml_str("snr_list = [20]\nsir_list = [5, 10]\nseed = 3\n").unwrap();
        assert_eq!(m.samples_per_cell, 100);
        assert_eq!(m.classes.len(), 14);
        assert_eq!(m.ru_layout, RuLayout::Full242);
        assert_eq!(m.sample_count(), 2 * 14 * 100);
    }

    #[test]
    fn toml_round_trip() {
        let m = DatasetManifest { quant_scale: Some(61.5), ru_layout: RuLayout::Dual106, ..DatasetManifest::desk_default(9) };
        let s = m.to_toml_string().unwrap();
        assert!(s.contains("ru_layout = \"dual106\""));
        assert_eq!(DatasetManifest::from_toml_str(&s).unwrap(), m);
    }

    #[test]
    fn rejects_invalid_fields() {
        assert!(DatasetManifest::from_toml_str("snr_list = []\nsir_list = [1]\nseed = 1\n").is_err());
        assert!(DatasetManifest::from_toml_str("snr_list = [1]\nsir_list = []\nseed = 1\n").is_err());
        assert!(DatasetManifest::from_toml_str("snr_list = [1, 1]\nsir_list = [1]\nseed = 1\n").is_err());
        assert!(DatasetManifest::from_toml_str("snr_list = [200]\nsir_list = [1]\nseed = 1\n").is_err());
        assert!(DatasetManifest::from_toml_str("snr_list = [1]\nsir_list = [1]\nseed = 1\nclasses = [0]\n").is_err());
        assert!(DatasetManifest::from_toml_str("snr_list = [1]\nsir_list = [1]\nseed = 1\nbogus = 2\n").is_err());
        assert!(DatasetManifest::from_toml_str("snr_list = [1]\nsir_list = [1]\nseed = 1\nsplit_ratio = 0.0\n").is_err());
    }

    #[test]
    fn full_scale_counts() {
        let m = DatasetManifest::full_scale(0);
        // 11 x 15 cells x 2000 samples for each interfered class
        assert_eq!(m.snr_list.len() * m.sir_list.len() * m.samples_per_cell, 330_000);
        assert_eq!(m.sample_count(), 14 * 330_000);
    }
}
