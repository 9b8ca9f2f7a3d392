//! Model container, little-endian throughout.
//!
//! ```text
//! "CTIM" | version u16 | input_channels u16 | input_len u32 | layer_count u16
//! layer_count x descriptor:
//!     1 conv   | in u16 | out u16 | kernel u16 | stride u16 | padding u16
//!     2 relu
//!     3 flatten
//!     4 dense  | in u32 | out u32
//!     5 logsoftmax
//! parameters as f32: for each conv/dense layer, weights then biases
//! ```

use std::path::Path;

use super::{CnnError, CnnModel, Conv1d, Dense, Layer};

pub const MODEL_MAGIC: [u8; 4] = *b"CTIM";
pub const MODEL_VERSION: u16 = 1;

const TAG_CONV: u8 = 1;
const TAG_RELU: u8 = 2;
const TAG_FLATTEN: u8 = 3;
const TAG_DENSE: u8 = 4;
const TAG_LOGSOFTMAX: u8 = 5;

fn push_u16(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u16::try_from(v).expect("dimension exceeds u16").to_le_bytes());
}

fn push_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("dimension exceeds u32").to_le_bytes());
}

pub fn encode_model(model: &CnnModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 4 * model.param_count());
    out.extend_from_slice(&MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    push_u16(&mut out, model.input_channels());
    push_u32(&mut out, model.input_len());
    push_u16(&mut out, model.layers().len());
    for layer in model.layers() {
        match layer {
            Layer::Conv1d(c) => {
                out.push(TAG_CONV);
                for v in [c.in_channels, c.out_channels, c.kernel, c.stride, c.padding] {
                    push_u16(&mut out, v);
                }
            }
            Layer::Relu => out.push(TAG_RELU),
            Layer::Flatten => out.push(TAG_FLATTEN),
            Layer::Dense(d) => {
                out.push(TAG_DENSE);
                push_u32(&mut out, d.inputs);
                push_u32(&mut out, d.outputs);
            }
            Layer::LogSoftmax => out.push(TAG_LOGSOFTMAX),
        }
    }
    for p in model.parameters() {
        for v in p {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CnnError> {
        if self.buf.len() - self.pos < n {
            return Err(CnnError::Truncated { needed: self.pos + n, available: self.buf.len() });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CnnError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<usize, CnnError> {
        Ok(usize::from(u16::from_le_bytes(self.take(2)?.try_into().unwrap())))
    }

    fn u32(&mut self) -> Result<usize, CnnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f64>, CnnError> {
        let bytes = self.take(n.checked_mul(4).ok_or(CnnError::Architecture("parameter count overflow".into()))?)?;
        Ok(bytes.chunks_exact(4).map(|b| f64::from(f32::from_le_bytes(b.try_into().unwrap()))).collect())
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<CnnModel, CnnError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if magic != MODEL_MAGIC {
        return Err(CnnError::BadMagic(magic));
    }
    let version = r.u16()? as u16;
    if version != MODEL_VERSION {
        return Err(CnnError::UnsupportedVersion(version));
    }
    let input_channels = r.u16()?;
    let input_len = r.u32()?;
    let count = r.u16()?;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let layer = match r.u8()? {
            TAG_CONV => {
                let (cin, cout, k, s, p) = (r.u16()?, r.u16()?, r.u16()?, r.u16()?, r.u16()?);
                Layer::Conv1d(Conv1d::zeros(cin, cout, k, s, p))
            }
            TAG_RELU => Layer::Relu,
            TAG_FLATTEN => Layer::Flatten,
            TAG_DENSE => Layer::Dense(Dense::zeros(r.u32()?, r.u32()?)),
            TAG_LOGSOFTMAX => Layer::LogSoftmax,
            t => return Err(CnnError::Architecture(format!("unknown layer tag {t}"))),
        };
        layers.push(layer);
    }
    for layer in &mut layers {
        let (w, b) = match layer {
            Layer::Conv1d(c) => (&mut c.weight, &mut c.bias),
            Layer::Dense(d) => (&mut d.weight, &mut d.bias),
            _ => continue,
        };
        *w = r.f32s(w.len())?;
        *b = r.f32s(b.len())?;
    }
    if r.pos != bytes.len() {
        return Err(CnnError::TrailingBytes(bytes.len() - r.pos));
    }
    CnnModel::from_layers(input_channels, input_len, layers)
}

pub fn save_model(path: &Path, model: &CnnModel) -> Result<(), CnnError> {
    std::fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<CnnModel, CnnError> {
    decode_model(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::{ArchSpec, Tensor};

    #[test]
    fn round_trip_preserves_outputs() {
        let m = CnnModel::new(&ArchSpec::for_width(212), 5).unwrap();
        let back = decode_model(&encode_model(&m)).unwrap();
        assert_eq!(back.param_count(), m.param_count());
        let x = Tensor::new(vec![2, 212], (0..424).map(|i| ((i % 17) as f64 - 8.0) / 16.0).collect()).unwrap();
        let (a, b) = (m.forward(&x).unwrap(), back.forward(&x).unwrap());
        for (u, v) in a.data().iter().zip(b.data()) {
            assert!((u - v).abs() < 1e-4, "{u} vs {v}");
        }
        // a second trip through f32 is exact
        assert_eq!(decode_model(&encode_model(&back)).unwrap(), back);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = encode_model(&CnnModel::new(&ArchSpec::for_width(212), 1).unwrap());
        assert!(matches!(decode_model(&bytes[..bytes.len() - 3]), Err(CnnError::Truncated { .. })));
        assert!(matches!(decode_model(&bytes[..10]), Err(CnnError::Truncated { .. })));
        let mut b = bytes.clone();
        b[0] = b'X';
        assert!(matches!(decode_model(&b), Err(CnnError::BadMagic(_))));
        let mut b = bytes.clone();
        b[4] = 2;
        assert!(matches!(decode_model(&b), Err(CnnError::UnsupportedVersion(2))));
        let mut b = bytes;
        b.push(0);
        assert!(matches!(decode_model(&b), Err(CnnError::TrailingBytes(1))));
    }
}
