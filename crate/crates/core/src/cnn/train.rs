use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{AdamConfig, AdamState, ArchSpec, CnnError, CnnModel, Gradients};
use crate::dataset::{ClassLabel, Dataset, QuantizedCsi};

/// Samples per gradient work item. Fixed so that the reduction order, and
/// therefore the trained weights, do not depend on the thread count.
const GRAD_CHUNK: usize = 32;
const INFER_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 200, batch_size: 256, lr: 1e-3, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean NLL over the epoch's mini-batches.
    pub train_loss: f64,
    /// `None` when there is no validation data.
    pub val_acc: Option<f64>,
}

/// `[2, M]` network input: real parts, then imaginary parts, scaled by 1/128.
pub fn csi_to_input(csi: &QuantizedCsi) -> Vec<f64> {
    let re = csi.pairs.iter().map(|p| f64::from(p[0]) / 128.0);
    let im = csi.pairs.iter().map(|p| f64::from(p[1]) / 128.0);
    re.chain(im).collect()
}

fn check_width(model_len: usize, csi_width: usize) -> Result<(), CnnError> {
    if model_len == csi_width {
        Ok(())
    } else {
        Err(CnnError::WidthMismatch { model: model_len, data: csi_width })
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn class_of(index: usize) -> ClassLabel {
    ClassLabel::from_index(index).expect("model output count equals the class count")
}

/// Most likely class and the 14 log-probabilities.
pub fn infer(model: &CnnModel, csi: &QuantizedCsi) -> Result<(ClassLabel, Vec<f64>), CnnError> {
    check_width(model.input_len(), csi.width())?;
    let logp = model.log_probs_batch(&csi_to_input(csi), 1)?;
    Ok((class_of(argmax(&logp)), logp))
}

/// Predicted class for each snapshot, evaluated in parallel.
pub fn infer_batch(model: &CnnModel, csis: &[&QuantizedCsi]) -> Result<Vec<ClassLabel>, CnnError> {
    for c in csis {
        check_width(model.input_len(), c.width())?;
    }
    let n_out = model.num_outputs();
    let parts = csis
        .par_chunks(INFER_CHUNK)
        .map(|chunk| {
            let input: Vec<f64> = chunk.iter().flat_map(|c| csi_to_input(c)).collect();
            let logp = model.log_probs_batch(&input, chunk.len())?;
            Ok(logp.chunks_exact(n_out).map(|r| class_of(argmax(r))).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, CnnError>>()?;
    Ok(parts.into_iter().flatten().collect())
}

pub fn evaluate_accuracy(model: &CnnModel, ds: &Dataset) -> Result<f64, CnnError> {
    if ds.is_empty() {
        return Err(CnnError::EmptyDataset);
    }
    let csis: Vec<&QuantizedCsi> = ds.samples.iter().map(|s| &s.csi).collect();
    let pred = infer_batch(model, &csis)?;
    let hits = pred.iter().zip(&ds.samples).filter(|(p, s)| **p == s.label).count();
    Ok(hits as f64 / ds.len() as f64)
}

pub fn train(
    arch: &ArchSpec,
    train_set: &Dataset,
    val_set: &Dataset,
    cfg: &TrainConfig,
) -> Result<(CnnModel, Vec<EpochRecord>), CnnError> {
    train_with(arch, train_set, val_set, cfg, |_| {})
}

/// Mini-batch Adam on mean NLL, reshuffling every epoch. `on_epoch` sees
/// each record as soon as it is complete.
pub fn train_with(
    arch: &ArchSpec,
    train_set: &Dataset,
    val_set: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(CnnModel, Vec<EpochRecord>), CnnError> {
    if train_set.is_empty() {
        return Err(CnnError::EmptyDataset);
    }
    if cfg.batch_size == 0 {
        return Err(CnnError::Config("batch_size must be positive"));
    }
    if !(cfg.lr > 0.0 && cfg.lr.is_finite()) {
        return Err(CnnError::Config("learning rate must be positive"));
    }
    for s in train_set.samples.iter().chain(&val_set.samples) {
        check_width(arch.input_len, s.csi.width())?;
    }
    let mut model = CnnModel::new(arch, cfg.seed)?;
    let mut history = Vec::with_capacity(cfg.epochs);
    if cfg.epochs == 0 {
        return Ok((model, history));
    }

    let row = arch.input_channels * arch.input_len;
    let inputs: Vec<f64> = train_set.samples.iter().flat_map(|s| csi_to_input(&s.csi)).collect();
    let targets: Vec<usize> = train_set.samples.iter().map(|s| s.label.index()).collect();
    let shapes: Vec<usize> = model.parameters().iter().map(|p| p.len()).collect();
    let mut adam = AdamState::new(AdamConfig { lr: cfg.lr, ..AdamConfig::default() }, &shapes);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7EA1_2D0C_5EED_0001);
    let mut order: Vec<usize> = (0..targets.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let parts: Vec<(f64, Gradients)> = batch
                .par_chunks(GRAD_CHUNK)
                .map(|idx| {
                    let x: Vec<f64> = idx.iter().flat_map(|&i| inputs[i * row..(i + 1) * row].iter().copied()).collect();
                    let t: Vec<usize> = idx.iter().map(|&i| targets[i]).collect();
                    model.nll_sum_and_gradients(&x, &t)
                })
                .collect();
            let mut iter = parts.into_iter();
            let (mut loss, mut grads) = iter.next().expect("non-empty batch");
            for (l, g) in iter {
                loss += l;
                grads.add_assign(&g);
            }
            let n = batch.len() as f64;
            grads.scale(1.0 / n);
            adam.step(&mut model.parameters_mut(), &grads)?;
            loss_sum += loss / n;
            batches += 1;
        }
        if model.parameters().iter().any(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(CnnError::NonFinite);
        }
        let val_acc = if val_set.is_empty() { None } else { Some(evaluate_accuracy(&model, val_set)?) };
        let rec = EpochRecord { epoch, train_loss: loss_sum / batches as f64, val_acc };
        on_epoch(&rec);
        history.push(rec);
    }
    Ok((model, history))
}

/// `epoch,train_loss,val_acc` with one row per epoch.
pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_loss,val_acc\n");
    for r in history {
        let acc = r.val_acc.map(|a| format!("{a:.6}")).unwrap_or_default();
        writeln!(out, "{},{:.8},{}", r.epoch, r.train_loss, acc).unwrap();
    }
    out
}
