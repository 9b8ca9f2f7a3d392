//! Little-endian dataset container.
//!
//! ```text
//! "CTID" | version u16 | ru_layout u8 | M u16 | count u32
//! count x ( label u8 | snr_db i8 | sir_db i8 (-128 = none) | seed u64 | M x (re i8, im i8) )
//! ```

use std::path::Path;

use super::{ClassLabel, Dataset, DatasetError, LabeledSample, QuantizedCsi};
use crate::signalgen::RuLayout;

pub const FILE_MAGIC: [u8; 4] = *b"CTID";
pub const FILE_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 2 + 4;
const SIR_NONE: i8 = i8::MIN;

pub fn encode_dataset(ds: &Dataset) -> Vec<u8> {
    let m = ds.layout.width();
    let mut out = Vec::with_capacity(HEADER_LEN + ds.len() * (11 + 2 * m));
    out.extend_from_slice(&FILE_MAGIC);
    out.extend_from_slice(&FILE_VERSION.to_le_bytes());
    out.push(ds.layout.code());
    out.extend_from_slice(&(m as u16).to_le_bytes());
    out.extend_from_slice(&(ds.len() as u32).to_le_bytes());
    for s in &ds.samples {
        assert_eq!(s.csi.width(), m, "sample width does not match dataset layout");
        out.push(s.label.id());
        out.push(s.snr_db as u8);
        out.push(s.sir_db.unwrap_or(SIR_NONE) as u8);
        out.extend_from_slice(&s.seed.to_le_bytes());
        for [re, im] in &s.csi.pairs {
            out.push(*re as u8);
            out.push(*im as u8);
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DatasetError> {
        let available = self.buf.len() - self.pos;
        if available < n {
            return Err(DatasetError::Truncated { needed: self.pos + n, available: self.buf.len() });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, DatasetError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, DatasetError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, DatasetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, DatasetError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset, DatasetError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if magic != FILE_MAGIC {
        return Err(DatasetError::BadMagic(magic));
    }
    let version = r.u16()?;
    if version != FILE_VERSION {
        return Err(DatasetError::UnsupportedVersion(version));
    }
    let code = r.u8()?;
    let layout = RuLayout::from_code(code).ok_or(DatasetError::UnknownLayout(code))?;
    let m = usize::from(r.u16()?);
    if m != layout.width() {
        return Err(DatasetError::WidthMismatch { layout, expected: layout.width(), got: m });
    }
    let count = r.u32()? as usize;
    let record = 11 + 2 * m;
    let needed = HEADER_LEN + count * record;
    if bytes.len() < needed {
        return Err(DatasetError::Truncated { needed, available: bytes.len() });
    }
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let id = r.u8()?;
        let label = ClassLabel::new(id).ok_or(DatasetError::InvalidLabel(id))?;
        let snr_db = r.u8()? as i8;
        let sir = r.u8()? as i8;
        let seed = r.u64()?;
        let pairs = r.take(2 * m)?.chunks_exact(2).map(|p| [p[0] as i8, p[1] as i8]).collect();
        samples.push(LabeledSample {
            csi: QuantizedCsi { pairs, layout, scale: None },
            label,
            snr_db,
            sir_db: (sir != SIR_NONE).then_some(sir),
            seed,
        });
    }
    if r.pos != bytes.len() {
        return Err(DatasetError::TrailingBytes(bytes.len() - r.pos));
    }
    Ok(Dataset { layout, samples })
}

pub fn write_dataset(path: &Path, ds: &Dataset) -> Result<(), DatasetError> {
    std::fs::write(path, encode_dataset(ds))?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    decode_dataset(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(label: u8, sir: Option<i8>, width: usize, fill: i8) -> LabeledSample {
        LabeledSample {
            csi: QuantizedCsi { pairs: vec![[fill, fill.wrapping_neg()]; width], layout: RuLayout::Full242, scale: None },
            label: ClassLabel::new(label).unwrap(),
            snr_db: 14,
            sir_db: sir,
            seed: 0xDEAD_BEEF,
        }
    }

    #[test]
    fn empty_dataset_is_a_valid_file() {
        let ds = Dataset::new(RuLayout::Dual106);
        let bytes = encode_dataset(&ds);
        assert_eq!(bytes.len(), HEADER_LEN);
        assert_eq!(&bytes[..4], b"CTID");
        assert_eq!(decode_dataset(&bytes).unwrap(), ds);
    }

    #[test]
    fn header_layout_is_little_endian() {
        let ds = Dataset { layout: RuLayout::Full242, samples: vec![sample(3, Some(-5), 242, 7)] };
        let b = encode_dataset(&ds);
        assert_eq!(&b[4..6], &[1, 0]);
        assert_eq!(b[6], 0);
        assert_eq!(&b[7..9], &242u16.to_le_bytes());
        assert_eq!(&b[9..13], &[1, 0, 0, 0]);
        assert_eq!(b[13], 3);
        assert_eq!(b[15], (-5i8) as u8);
        assert_eq!(&b[16..24], &0xDEAD_BEEFu64.to_le_bytes());
        assert_eq!(b.len(), HEADER_LEN + 11 + 484);
    }

    #[test]
    fn corrupt_magic_is_rejected() {
        let mut b = encode_dataset(&Dataset { layout: RuLayout::Full242, samples: vec![sample(1, None, 242, 1)] });
        b[0] = b'X';
        assert!(matches!(decode_dataset(&b), Err(DatasetError::BadMagic(_))));
    }

    #[test]
    fn truncation_and_garbage_are_rejected() {
        let b = encode_dataset(&Dataset { layout: RuLayout::Full242, samples: vec![sample(2, Some(1), 242, 1); 3] });
        assert!(matches!(decode_dataset(&b[..b.len() - 1]), Err(DatasetError::Truncated { .. })));
        assert!(matches!(decode_dataset(&b[..5]), Err(DatasetError::Truncated { .. })));
        let mut extra = b.clone();
        extra.push(0);
        assert!(matches!(decode_dataset(&extra), Err(DatasetError::TrailingBytes(1))));
        let mut bad_version = b.clone();
        bad_version[4] = 9;
        assert!(matches!(decode_dataset(&bad_version), Err(DatasetError::UnsupportedVersion(9))));
        let mut bad_label = b.clone();
        bad_label[HEADER_LEN] = 0;
        assert!(matches!(decode_dataset(&bad_label), Err(DatasetError::InvalidLabel(0))));
        let mut bad_width = b;
        bad_width[7] = 10;
        assert!(matches!(decode_dataset(&bad_width), Err(DatasetError::WidthMismatch { .. })));
    }

    proptest! {
        #[test]
        fn round_trip(
            entries in proptest::collection::vec((1u8..=14, any::<i8>(), proptest::option::of(-127i8..=127), any::<u64>(),
                proptest::collection::vec(any::<[i8; 2]>(), 212)), 0..6)
        ) {
            let samples = entries.into_iter().map(|(label, snr, sir, seed, pairs)| LabeledSample {
                csi: QuantizedCsi { pairs, layout: RuLayout::Dual106, scale: None },
                label: ClassLabel::new(label).unwrap(),
                snr_db: snr,
                sir_db: sir,
                seed,
            }).collect();
            let ds = Dataset { layout: RuLayout::Dual106, samples };
            prop_assert_eq!(decode_dataset(&encode_dataset(&ds)).unwrap(), ds);
        }
    }
}
