//! Reader for the IDX format used by MNIST-style image sets.
//!
//! Only unsigned-byte payloads are supported: images as `[N, H, W]` (or
//! `[N, C, H, W]`) and labels as `[N]`. Pixels are scaled by `1/255`.

use std::path::Path;

use super::dataset::LabeledDataset;
use crate::bytes::Reader;
use crate::error::{invalid, Result};
use crate::tensor::Tensor;

const UBYTE: u8 = 0x08;

fn header(r: &mut Reader<'_>, dims_allowed: &[u8]) -> Result<Vec<usize>> {
    let magic = r.take(4)?;
    if magic[0] != 0 || magic[1] != 0 {
        return Err(r.error(0, "magic number must start with two zero bytes"));
    }
    if magic[2] != UBYTE {
        return Err(r.error(2, format!("unsupported element type 0x{:02x}", magic[2])));
    }
    if !dims_allowed.contains(&magic[3]) {
        return Err(r.error(3, format!("unexpected dimension count {}", magic[3])));
    }
    (0..magic[3])
        .map(|_| r.u32_be().map(|d| d as usize))
        .collect()
}

pub fn decode_images(bytes: &[u8]) -> Result<(Vec<usize>, Vec<u8>)> {
    let mut r = Reader::new("IDX images", bytes);
    let dims = header(&mut r, &[3, 4])?;
    let count: usize = dims.iter().product();
    let pixels = r.take(count)?.to_vec();
    r.expect_end()?;
    Ok((dims, pixels))
}

pub fn decode_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut r = Reader::new("IDX labels", bytes);
    let dims = header(&mut r, &[1])?;
    let labels = r.take(dims[0])?.to_vec();
    r.expect_end()?;
    Ok(labels)
}

/// Combine decoded image and label files, keeping at most `limit` samples.
pub fn from_idx_bytes(images: &[u8], labels: &[u8], limit: Option<usize>) -> Result<LabeledDataset> {
    let (dims, pixels) = decode_images(images)?;
    let labels = decode_labels(labels)?;
    let (n, c, h, w) = match dims.as_slice() {
        [n, h, w] => (*n, 1, *h, *w),
        [n, c, h, w] => (*n, *c, *h, *w),
        _ => unreachable!("header restricts the rank"),
    };
    if labels.len() != n {
        return Err(invalid!("{} labels for {n} images", labels.len()));
    }
    let keep = limit.map_or(n, |l| l.min(n));
    let per = c * h * w;
    let data = pixels[..keep * per]
        .iter()
        .map(|&b| b as f64 / 255.0)
        .collect();
    LabeledDataset::clean(
        Tensor::new(vec![keep, c, h, w], data)?,
        labels[..keep].iter().map(|&y| y as usize).collect(),
    )
}

pub fn load(images: impl AsRef<Path>, labels: impl AsRef<Path>, limit: Option<usize>) -> Result<LabeledDataset> {
    from_idx_bytes(&std::fs::read(images)?, &std::fs::read(labels)?, limit)
}

/// Encode unsigned-byte IDX files; used for fixtures and exports.
pub fn encode_images(dims: &[usize], pixels: &[u8]) -> Vec<u8> {
    let mut out = vec![0, 0, UBYTE, dims.len() as u8];
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    encode_images(&[labels.len()], labels)
}
