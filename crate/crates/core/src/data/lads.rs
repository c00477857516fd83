//! `LADS` dataset container.
//!
//! All integers are little-endian.
//!
//! ```text
//! offset  size       field
//! 0       4          magic "LADS"
//! 4       4          format version (u32) = 1
//! 8       4          N, sample count (u32)
//! 12      4          C (u32)
//! 16      4          H (u32)
//! 20      4          W (u32)
//! 24      1          label width in bytes: 1, 2 or 4
//! 25      N*width    labels (unsigned)
//! ...     N*C*H*W*8  pixels (f64), sample-major then row-major [C, H, W]
//! ```
//!
//! Provenance is not stored in the container; it travels in the artifact
//! manifest written next to the file.

use std::path::Path;

use super::dataset::{LabeledDataset, Provenance};
use crate::bytes::Reader;
use crate::error::Result;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"LADS";
pub const VERSION: u32 = 1;

fn label_width(max: usize) -> u8 {
    if max <= u8::MAX as usize {
        1
    } else if max <= u16::MAX as usize {
        2
    } else {
        4
    }
}

pub fn encode(data: &LabeledDataset) -> Vec<u8> {
    let [c, h, w] = data.extent();
    let width = label_width(data.labels().iter().copied().max().unwrap_or(0));
    let mut out = Vec::with_capacity(25 + data.len() * (width as usize + c * h * w * 8));
    out.extend_from_slice(MAGIC);
    for v in [VERSION, data.len() as u32, c as u32, h as u32, w as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.push(width);
    for &y in data.labels() {
        match width {
            1 => out.push(y as u8),
            2 => out.extend_from_slice(&(y as u16).to_le_bytes()),
            _ => out.extend_from_slice(&(y as u32).to_le_bytes()),
        }
    }
    for v in data.images().data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decode a container; the result has [`Provenance::Clean`] until the caller
/// attaches the provenance recorded in the manifest.
pub fn decode(bytes: &[u8]) -> Result<LabeledDataset> {
    let mut r = Reader::new("LADS", bytes);
    if r.take(4)? != MAGIC {
        return Err(r.error(0, "bad magic, expected \"LADS\""));
    }
    let version = r.u32_le()?;
    if version != VERSION {
        return Err(r.error(4, format!("unsupported version {version}")));
    }
    let n = r.u32_le()? as usize;
    let c = r.u32_le()? as usize;
    let h = r.u32_le()? as usize;
    let w = r.u32_le()? as usize;
    if n == 0 {
        return Err(r.error(8, "empty dataset"));
    }
    if c == 0 || h == 0 || w == 0 {
        return Err(r.error(12, "zero image extent"));
    }
    let width = r.u8()?;
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        labels.push(match width {
            1 => r.u8()? as usize,
            2 => u16::from_le_bytes(r.take(2)?.try_into().unwrap()) as usize,
            4 => r.u32_le()? as usize,
            other => return Err(r.error(24, format!("unsupported label width {other}"))),
        });
    }
    let at = r.offset();
    let count = n
        .checked_mul(c * h * w)
        .ok_or_else(|| r.error(8, "dataset extent overflows"))?;
    let pixels = r.f64s_le(count)?;
    if let Some(k) = pixels.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(r.error(at + 8 * k as u64, "pixel outside [0, 1]"));
    }
    r.expect_end()?;
    LabeledDataset::new(Tensor::new(vec![n, c, h, w], pixels)?, labels, Provenance::Clean)
}

pub fn save(data: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode(data))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let d = LabeledDataset::clean(Tensor::filled(vec![2, 1, 1, 2], 0.5), vec![3, 300]).unwrap();
        let b = encode(&d);
        assert_eq!(&b[..4], b"LADS");
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 2);
        assert_eq!(b[24], 2);
        assert_eq!(u16::from_le_bytes(b[25..27].try_into().unwrap()), 3);
        assert_eq!(u16::from_le_bytes(b[27..29].try_into().unwrap()), 300);
        assert_eq!(f64::from_le_bytes(b[29..37].try_into().unwrap()), 0.5);
        assert_eq!(b.len(), 25 + 4 + 4 * 8);
    }

    #[test]
    fn corrupt_pixel_reports_offset() {
        let d = LabeledDataset::clean(Tensor::filled(vec![1, 1, 1, 2], 0.25), vec![1]).unwrap();
        let mut b = encode(&d);
        b[34..42].copy_from_slice(&2.0f64.to_le_bytes());
        match decode(&b) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 34),
            other => panic!("unexpected {other:?}"),
        }
        assert!(decode(&b[..20]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(n in 1usize..6, c in 1usize..3, hw in 1usize..5, seed in any::<u64>()) {
            let len = n * c * hw * hw;
            let pixels: Vec<f64> = (0..len)
                .map(|k| ((seed.wrapping_mul(k as u64 + 1) >> 11) as f64) / (1u64 << 53) as f64)
                .collect();
            let labels: Vec<usize> = (0..n).map(|k| (seed as usize).wrapping_add(k) % 1000).collect();
            let d = LabeledDataset::clean(Tensor::new(vec![n, c, hw, hw], pixels).unwrap(), labels).unwrap();
            prop_assert_eq!(decode(&encode(&d)).unwrap(), d);
        }
    }
}
