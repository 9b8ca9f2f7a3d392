use num_complex::Complex64;

use super::DatasetError;
use crate::signalgen::{CsiSnapshot, RuLayout};

/// CSI as two signed bytes per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedCsi {
    pub pairs: Vec<[i8; 2]>,
    pub layout: RuLayout,
    /// Scale applied before rounding; unknown for data read back from disk.
    pub scale: Option<f64>,
}

impl QuantizedCsi {
    pub fn width(&self) -> usize {
        self.pairs.len()
    }

    pub fn mean_magnitude(&self) -> f64 {
        if self.pairs.is_empty() {
            return 0.0;
        }
        self.pairs.iter().map(|[re, im]| f64::from(*re).hypot(f64::from(*im))).sum::<f64>() / self.pairs.len() as f64
    }
}

fn quantize_component(v: f64, scale: f64) -> i8 {
    (v * scale).round().clamp(-128.0, 127.0) as i8
}

/// Rounds `re * scale` and `im * scale` to int8, saturating.
pub fn quantize_csi(csi: &CsiSnapshot, scale: f64) -> QuantizedCsi {
    assert!(scale > 0.0 && scale.is_finite(), "quantization scale must be positive");
    QuantizedCsi {
        pairs: csi.values.iter().map(|v| [quantize_component(v.re, scale), quantize_component(v.im, scale)]).collect(),
        layout: csi.layout,
        scale: Some(scale),
    }
}

pub fn dequantize(q: &QuantizedCsi, scale: f64) -> Vec<Complex64> {
    q.pairs.iter().map(|[re, im]| Complex64::new(f64::from(*re) / scale, f64::from(*im) / scale)).collect()
}

/// Scale that maps the mean CSI magnitude of `csis` to `target_mean_mag`.
pub fn auto_scale(csis: &[CsiSnapshot], target_mean_mag: f64) -> Result<f64, DatasetError> {
    if !(target_mean_mag > 0.0 && target_mean_mag.is_finite()) {
        return Err(DatasetError::Scale("target magnitude must be positive"));
    }
    let (sum, n) = csis
        .iter()
        .flat_map(|c| c.values.iter())
        .fold((0.0, 0usize), |(s, n), v| (s + v.norm(), n + 1));
    if n == 0 {
        return Err(DatasetError::Scale("no CSI values"));
    }
    let mean = sum / n as f64;
    if mean <= 0.0 || !mean.is_finite() {
        return Err(DatasetError::Scale("CSI is all zero"));
    }
    Ok(target_mean_mag / mean)
}

/// Fraction of int8 components sitting on a rail.
pub fn saturation_rate<'a>(qs: impl IntoIterator<Item = &'a QuantizedCsi>) -> f64 {
    let (sat, n) = qs
        .into_iter()
        .flat_map(|q| q.pairs.iter().flatten())
        .fold((0usize, 0usize), |(s, n), &v| (s + usize::from(v == 127 || v == -128), n + 1));
    if n == 0 {
        0.0
    } else {
        sat as f64 / n as f64
    }
}
