//! Evaluation artifacts: accuracy over the SNR x SIR grid (raw and with
//! centre-channel mispredictions filtered out), technology-level confusion,
//! and RU localization.

mod rumap;

pub use rumap::{build_ru106_map, build_ru_map, RuMap, RuSpan, RU106_SPANS, RU52_SPANS};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::cnn::{infer_batch, CnnError, CnnModel};
use crate::dataset::{ClassLabel, Dataset, LabeledSample, TechClass};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("classifier failed: {0}")]
    Cnn(#[from] CnnError),
    #[error("{predictions} predictions for {samples} samples")]
    LengthMismatch { samples: usize, predictions: usize },
    #[error("empty test set")]
    Empty,
}

/// Anything that labels CSI snapshots.
pub trait Classifier: Sync {
    fn predict(&self, samples: &[LabeledSample]) -> Result<Vec<ClassLabel>, EvalError>;
}

impl Classifier for CnnModel {
    fn predict(&self, samples: &[LabeledSample]) -> Result<Vec<ClassLabel>, EvalError> {
        let csis: Vec<_> = samples.iter().map(|s| &s.csi).collect();
        Ok(infer_batch(self, &csis)?)
    }
}

impl<F> Classifier for F
where
    F: Fn(&LabeledSample) -> ClassLabel + Sync,
{
    fn predict(&self, samples: &[LabeledSample]) -> Result<Vec<ClassLabel>, EvalError> {
        Ok(samples.iter().map(self).collect())
    }
}

/// A non-C10 sample predicted as C10 is left out of filtered metrics.
fn is_excluded(truth: ClassLabel, pred: ClassLabel) -> bool {
    pred == ClassLabel::BLE_CENTER && truth != ClassLabel::BLE_CENTER
}

fn check_lengths(samples: &[LabeledSample], preds: &[ClassLabel]) -> Result<(), EvalError> {
    if samples.len() != preds.len() {
        return Err(EvalError::LengthMismatch { samples: samples.len(), predictions: preds.len() });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCell {
    pub raw_accuracy: f64,
    /// `None` when every sample of the cell was excluded.
    pub filtered_accuracy: Option<f64>,
    pub n_samples: usize,
    pub n_excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyGrid {
    pub snr_list: Vec<i8>,
    pub sir_list: Vec<i8>,
    /// Row-major over (snr, sir); `None` for cells without samples.
    pub cells: Vec<Option<GridCell>>,
}

impl AccuracyGrid {
    pub fn cell(&self, snr_db: i8, sir_db: i8) -> Option<&GridCell> {
        let i = self.snr_list.iter().position(|&s| s == snr_db)?;
        let j = self.sir_list.iter().position(|&s| s == sir_db)?;
        self.cells[i * self.sir_list.len() + j].as_ref()
    }

    /// `snr,sir,raw,filtered,n,n_excluded`; absent cells are skipped.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("snr,sir,raw,filtered,n,n_excluded\n");
        for (i, snr) in self.snr_list.iter().enumerate() {
            for (j, sir) in self.sir_list.iter().enumerate() {
                if let Some(c) = &self.cells[i * self.sir_list.len() + j] {
                    let f = c.filtered_accuracy.map(|v| format!("{v:.6}")).unwrap_or_default();
                    writeln!(out, "{snr},{sir},{:.6},{f},{},{}", c.raw_accuracy, c.n_samples, c.n_excluded).unwrap();
                }
            }
        }
        out
    }
}

/// Per-(snr, sir) accuracy. Samples without an SIR coordinate have no cell.
pub fn accuracy_grid_from_predictions(
    samples: &[LabeledSample],
    preds: &[ClassLabel],
) -> Result<AccuracyGrid, EvalError> {
    check_lengths(samples, preds)?;
    #[derive(Default)]
    struct Acc {
        n: usize,
        correct: usize,
        excluded: usize,
        correct_kept: usize,
    }
    let mut cells: BTreeMap<(i8, i8), Acc> = BTreeMap::new();
    for (s, &p) in samples.iter().zip(preds) {
        let Some(sir) = s.sir_db else { continue };
        let a = cells.entry((s.snr_db, sir)).or_default();
        a.n += 1;
        let ok = p == s.label;
        a.correct += usize::from(ok);
        if is_excluded(s.label, p) {
            a.excluded += 1;
        } else {
            a.correct_kept += usize::from(ok);
        }
    }
    let mut snr_list: Vec<i8> = cells.keys().map(|k| k.0).collect();
    snr_list.dedup();
    let mut sir_list: Vec<i8> = cells.keys().map(|k| k.1).collect();
    sir_list.sort_unstable();
    sir_list.dedup();
    let grid = snr_list
        .iter()
        .flat_map(|&snr| sir_list.iter().map(move |&sir| (snr, sir)))
        .map(|k| {
            cells.get(&k).map(|a| {
                let kept = a.n - a.excluded;
                GridCell {
                    raw_accuracy: a.correct as f64 / a.n as f64,
                    filtered_accuracy: (kept > 0).then(|| a.correct_kept as f64 / kept as f64),
                    n_samples: a.n,
                    n_excluded: a.excluded,
                }
            })
        })
        .collect();
    Ok(AccuracyGrid { snr_list, sir_list, cells: grid })
}

pub fn accuracy_grid(model: &impl Classifier, test_set: &Dataset) -> Result<AccuracyGrid, EvalError> {
    let preds = model.predict(&test_set.samples)?;
    accuracy_grid_from_predictions(&test_set.samples, &preds)
}

/// Counts of (actual, predicted) technology over filtered predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TechConfusion {
    pub counts: [[usize; 3]; 3],
}

impl TechConfusion {
    /// Row in percent; `None` for a technology absent from the test set.
    pub fn row_percentages(&self, actual: TechClass) -> Option<[f64; 3]> {
        let row = self.counts[actual.index()];
        let total: usize = row.iter().sum();
        (total > 0).then(|| row.map(|c| 100.0 * c as f64 / total as f64))
    }

    pub fn percentages(&self) -> [Option<[f64; 3]>; 3] {
        TechClass::ALL.map(|t| self.row_percentages(t))
    }

    pub fn diagonal(&self) -> [Option<f64>; 3] {
        TechClass::ALL.map(|t| self.row_percentages(t).map(|r| r[t.index()]))
    }

    /// `actual,no_cti,lr_wpan,ble` in percent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("actual,no_cti,lr_wpan,ble\n");
        for t in TechClass::ALL {
            if let Some(r) = self.row_percentages(t) {
                writeln!(out, "{},{:.2},{:.2},{:.2}", t.name(), r[0], r[1], r[2]).unwrap();
            }
        }
        out
    }
}

pub fn tech_confusion_from_predictions(
    samples: &[LabeledSample],
    preds: &[ClassLabel],
) -> Result<TechConfusion, EvalError> {
    check_lengths(samples, preds)?;
    if samples.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut counts = [[0usize; 3]; 3];
    for (s, &p) in samples.iter().zip(preds) {
        if !is_excluded(s.label, p) {
            counts[s.label.tech().index()][p.tech().index()] += 1;
        }
    }
    Ok(TechConfusion { counts })
}

pub fn tech_confusion(model: &impl Classifier, test_set: &Dataset) -> Result<TechConfusion, EvalError> {
    let preds = model.predict(&test_set.samples)?;
    tech_confusion_from_predictions(&test_set.samples, &preds)
}

/// Among interfered samples predicted as interfered, the fraction whose
/// predicted class shares an RU with the true class. Clean samples are
/// ignored; `None` when nothing was detected.
pub fn ru_location_accuracy_from_predictions(
    samples: &[LabeledSample],
    preds: &[ClassLabel],
    map: &RuMap,
) -> Result<Option<f64>, EvalError> {
    check_lengths(samples, preds)?;
    let (mut detected, mut hit) = (0usize, 0usize);
    for (s, &p) in samples.iter().zip(preds) {
        if s.label == ClassLabel::NO_CTI || p == ClassLabel::NO_CTI {
            continue;
        }
        detected += 1;
        hit += usize::from(map.same_ru(s.label, p));
    }
    Ok((detected > 0).then(|| hit as f64 / detected as f64))
}

pub fn ru_location_accuracy(model: &impl Classifier, test_set: &Dataset, map: &RuMap) -> Result<Option<f64>, EvalError> {
    let preds = model.predict(&test_set.samples)?;
    ru_location_accuracy_from_predictions(&test_set.samples, &preds, map)
}

/// Everything the report step needs, in one serializable value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub n_samples: usize,
    pub raw_accuracy: f64,
    pub filtered_accuracy: Option<f64>,
    pub grid: AccuracyGrid,
    pub tech_confusion: TechConfusion,
    pub tech_percentages: [Option<[f64; 3]>; 3],
    pub ru_location_accuracy: Option<f64>,
}

pub fn summarize(samples: &[LabeledSample], preds: &[ClassLabel]) -> Result<EvalSummary, EvalError> {
    check_lengths(samples, preds)?;
    if samples.is_empty() {
        return Err(EvalError::Empty);
    }
    let correct = samples.iter().zip(preds).filter(|(s, p)| s.label == **p).count();
    let kept: Vec<_> = samples.iter().zip(preds).filter(|(s, p)| !is_excluded(s.label, **p)).collect();
    let kept_correct = kept.iter().filter(|(s, p)| s.label == **p).count();
    let tech = tech_confusion_from_predictions(samples, preds)?;
    Ok(EvalSummary {
        n_samples: samples.len(),
        raw_accuracy: correct as f64 / samples.len() as f64,
        filtered_accuracy: (!kept.is_empty()).then(|| kept_correct as f64 / kept.len() as f64),
        grid: accuracy_grid_from_predictions(samples, preds)?,
        tech_confusion: tech,
        tech_percentages: tech.percentages(),
        ru_location_accuracy: ru_location_accuracy_from_predictions(samples, preds, &build_ru_map())?,
    })
}

pub fn evaluate(model: &impl Classifier, test_set: &Dataset) -> Result<EvalSummary, EvalError> {
    let preds = model.predict(&test_set.samples)?;
    summarize(&test_set.samples, &preds)
}
