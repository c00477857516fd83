//! `LATL` weight container.
//!
//! All integers are little-endian.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "LATL"
//! 4       4     format version (u32) = 1
//! 8       4     layer count L (u32)
//! then L times:
//!         1     kind tag (u8): 0 conv, 1 dense, 2 bias, 3 batch-stat
//!         4     filter count F (u32)
//!         then F times:
//!         4     rank R (u32)
//!         4*R   extents (u32 each)
//!         8*n   values (f64), n = product of extents, row-major
//! ```

use std::path::Path;

use super::params::{LayerKind, ParamLayer, ParamSet};
use crate::bytes::Reader;
use crate::error::Result;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"LATL";
pub const VERSION: u32 = 1;

pub fn encode(params: &ParamSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + params.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(params.layers().len() as u32).to_le_bytes());
    for layer in params.layers() {
        out.push(layer.kind().tag());
        out.extend_from_slice(&(layer.filters().len() as u32).to_le_bytes());
        for f in layer.filters() {
            out.extend_from_slice(&(f.shape().len() as u32).to_le_bytes());
            for &d in f.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in f.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<ParamSet> {
    let mut r = Reader::new("LATL", bytes);
    if r.take(4)? != MAGIC {
        return Err(r.error(0, "bad magic, expected \"LATL\""));
    }
    let at = r.offset();
    let version = r.u32_le()?;
    if version != VERSION {
        return Err(r.error(at, format!("unsupported version {version}")));
    }
    let count = r.u32_le()?;
    let mut layers = Vec::new();
    for _ in 0..count {
        let at = r.offset();
        let tag = r.u8()?;
        let kind =
            LayerKind::from_tag(tag).ok_or_else(|| r.error(at, format!("unknown kind tag {tag}")))?;
        let filters = r.u32_le()?;
        let mut list = Vec::new();
        for _ in 0..filters {
            let rank = r.u32_le()? as usize;
            let shape = (0..rank)
                .map(|_| r.u32_le().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let n = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
            let at = r.offset();
            let n = n.ok_or_else(|| r.error(at, "filter extent overflows"))?;
            let values = r.f64s_le(n)?;
            list.push(Tensor::new(shape, values)?);
        }
        layers.push(ParamLayer::new(kind, list));
    }
    r.expect_end()?;
    Ok(ParamSet::new(layers))
}

pub fn save(params: &ParamSet, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode(params))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<ParamSet> {
    decode(&std::fs::read(path)?)
}
