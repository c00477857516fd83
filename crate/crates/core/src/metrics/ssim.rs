//! Structural similarity over uniform sliding windows.

use rayon::prelude::*;

use crate::data::LabeledDataset;
use crate::error::{invalid, shape_err, Result};
use crate::tensor::{image_extent, Tensor};

/// Window size and stabilizing constants.
///
/// The window is clipped to the image extent when the image is smaller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimConfig {
    pub window: usize,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window: 8,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimConfig {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    fn validate(&self) -> Result<()> {
        if self.window == 0 || !(self.c1() > 0.0) || !(self.c2() > 0.0) {
            return Err(invalid!("ssim needs a positive window and positive constants"));
        }
        Ok(())
    }
}

/// Mean SSIM over every window position (stride 1) and every channel.
pub fn ssim(a: &Tensor, b: &Tensor, cfg: &SsimConfig) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(shape_err!("ssim of {:?} and {:?}", a.shape(), b.shape()));
    }
    cfg.validate()?;
    let extent = image_extent(a)?;
    Ok(ssim_raw(a.data(), b.data(), extent, cfg))
}

pub(crate) fn ssim_raw(a: &[f64], b: &[f64], [c, h, w]: [usize; 3], cfg: &SsimConfig) -> f64 {
    let wh = cfg.window.min(h);
    let ww = cfg.window.min(w);
    let count = (wh * ww) as f64;
    let (c1, c2) = (cfg.c1(), cfg.c2());
    let mut total = 0.0;
    let mut windows = 0usize;
    for ch in 0..c {
        for i0 in 0..=h - wh {
            for j0 in 0..=w - ww {
                let pixels = || {
                    (i0..i0 + wh).flat_map(move |i| {
                        (j0..j0 + ww).map(move |j| (ch * h + i) * w + j)
                    })
                };
                let (mut sa, mut sb) = (0.0, 0.0);
                for k in pixels() {
                    sa += a[k];
                    sb += b[k];
                }
                let (ma, mb) = (sa / count, sb / count);
                let (mut vaa, mut vbb, mut vab) = (0.0, 0.0, 0.0);
                for k in pixels() {
                    let (da, db) = (a[k] - ma, b[k] - mb);
                    vaa += da * da;
                    vbb += db * db;
                    vab += da * db;
                }
                let (vaa, vbb, vab) = (vaa / count, vbb / count, vab / count);
                let num = (2.0 * (ma * mb) + c1) * (2.0 * vab + c2);
                let den = (ma * ma + mb * mb + c1) * (vaa + vbb + c2);
                total += num / den;
                windows += 1;
            }
        }
    }
    total / windows as f64
}

/// Mean of `1 − ssim(clean_i, adv_i)` over paired samples.
pub fn mean_ssim_distance(
    clean: &LabeledDataset,
    adv: &LabeledDataset,
    cfg: &SsimConfig,
) -> Result<f64> {
    if clean.len() != adv.len() {
        return Err(shape_err!(
            "{} clean samples paired with {} adversarial ones",
            clean.len(),
            adv.len()
        ));
    }
    if clean.extent() != adv.extent() {
        return Err(shape_err!(
            "image extents differ: {:?} vs {:?}",
            clean.extent(),
            adv.extent()
        ));
    }
    cfg.validate()?;
    let extent = clean.extent();
    let d: Vec<f64> = (0..clean.len())
        .into_par_iter()
        .map(|i| {
            1.0 - ssim_raw(
                clean.images().row(i),
                adv.images().row(i),
                extent,
                cfg,
            )
        })
        .collect();
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}
