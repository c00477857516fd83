//! Seeded synthetic image classification task.
//!
//! Each image is a flat background carrying two class signals:
//!
//! * a bright square patch at a class-specific position (with ±1 px jitter),
//!   which points at the wrong class with probability `1 − shape_reliability`;
//! * a faint diagonal grating `a * sin(2π(row + col)/period + k·phase_step + π/4)`
//!   (or its sign, for a square wave) over every pixel, whose phase encodes
//!   the class `k`. The amplitude `a` is `texture_amplitude`, optionally
//!   jittered per sample.
//!
//! Gaussian pixel noise is added and values are clipped to `[0, 1]`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::LabeledDataset;
use crate::error::{invalid, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub classes: usize,
    pub size: usize,
    pub channels: usize,
    pub seed: u64,
    pub background: f64,
    pub shape_amplitude: f64,
    pub shape_reliability: f64,
    pub texture_amplitude: f64,
    pub texture_period: f64,
    pub phase_step: f64,
    /// Use the sign of the grating (a square wave) instead of the sine itself.
    pub square: bool,
    /// Per-sample texture amplitude factor drawn from `U[1 - j, 1 + j]`.
    pub texture_jitter: f64,
    pub noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 1024,
            classes: 4,
            size: 16,
            channels: 1,
            seed: 0,
            background: 0.5,
            shape_amplitude: 0.3,
            shape_reliability: 0.95,
            texture_amplitude: 0.003,
            texture_period: 4.0,
            phase_step: 0.6,
            square: false,
            texture_jitter: 0.5,
            noise: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid!("synthetic dataset size must be positive"));
        }
        if self.classes < 2 {
            return Err(invalid!("need at least two classes"));
        }
        if self.size < 4 || self.channels == 0 {
            return Err(invalid!("canvas must be at least 4x4 with one channel"));
        }
        if !(self.texture_period > 0.0 && self.texture_period.is_finite() && self.phase_step.is_finite()) {
            return Err(invalid!("texture period must be positive and phase step finite"));
        }
        if !(0.0..=1.0).contains(&self.texture_jitter) {
            return Err(invalid!("texture_jitter must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.shape_reliability) {
            return Err(invalid!("shape_reliability must lie in [0, 1]"));
        }
        let all = [
            self.background,
            self.shape_amplitude,
            self.texture_amplitude,
            self.noise,
        ];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid!("synthetic amplitudes must be finite and non-negative"));
        }
        Ok(())
    }

    /// Top-left corner of the class patch before jitter, and the patch side.
    fn patch_slot(&self, class: usize) -> (usize, usize, usize) {
        let g = (self.classes as f64).sqrt().ceil() as usize;
        let cell = self.size / g;
        let side = (cell / 2).max(2);
        let row = (class / g) * cell + (cell - side) / 2;
        let col = (class % g) * cell + (cell - side) / 2;
        (row, col, side)
    }

    fn templates(&self) -> Vec<Vec<f64>> {
        let s = self.size;
        (0..self.classes)
            .map(|k| {
                let phase = k as f64 * self.phase_step;
                (0..self.channels * s * s)
                    .map(|i| {
                        let (r, c) = ((i / s) % s, i % s);
                        let v = (TAU * (r + c) as f64 / self.texture_period + phase + TAU / 8.0).sin();
                        match self.square {
                            true if v > 0.0 => 1.0,
                            true if v < 0.0 => -1.0,
                            true => 0.0,
                            false => v,
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<LabeledDataset> {
    cfg.validate()?;
    let templates = cfg.templates();
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| invalid!("noise: {e}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (c, s) = (cfg.channels, cfg.size);
    let mut pixels = Vec::with_capacity(cfg.n * c * s * s);
    let mut labels = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let y = rng.random_range(0..cfg.classes);
        let shown = if rng.random::<f64>() < cfg.shape_reliability {
            y
        } else {
            let other = rng.random_range(0..cfg.classes - 1);
            if other >= y {
                other + 1
            } else {
                other
            }
        };
        let (r0, c0, side) = cfg.patch_slot(shown);
        let jr = rng.random_range(-1i64..=1);
        let jc = rng.random_range(-1i64..=1);
        let amp = cfg.texture_amplitude * (1.0 + cfg.texture_jitter * rng.random_range(-1.0..=1.0));
        let r0 = (r0 as i64 + jr).clamp(0, (s - side) as i64) as usize;
        let c0 = (c0 as i64 + jc).clamp(0, (s - side) as i64) as usize;
        for ch in 0..c {
            for i in 0..s {
                for j in 0..s {
                    let k = (ch * s + i) * s + j;
                    let in_patch = (r0..r0 + side).contains(&i) && (c0..c0 + side).contains(&j);
                    let mut v = cfg.background + amp * templates[y][k];
                    if in_patch {
                        v += cfg.shape_amplitude;
                    }
                    if cfg.noise > 0.0 {
                        v += noise.sample(&mut rng);
                    }
                    pixels.push(v.clamp(0.0, 1.0));
                }
            }
        }
        labels.push(y);
    }
    LabeledDataset::clean(Tensor::new(vec![cfg.n, c, s, s], pixels)?, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        let cfg = SynthConfig {
            n: 50,
            ..SynthConfig::default()
        };
        let a = generate(&cfg).unwrap();
        assert_eq!(a, generate(&cfg).unwrap());
        assert_eq!(a.len(), 50);
        assert!(a.labels().iter().all(|&y| y < 4));
        let b = generate(&SynthConfig { seed: 1, ..cfg.clone() }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn rejects_empty() {
        let cfg = SynthConfig {
            n: 0,
            ..SynthConfig::default()
        };
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn patch_slots_fit_the_canvas() {
        for classes in 2..12 {
            let cfg = SynthConfig {
                classes,
                ..SynthConfig::default()
            };
            for k in 0..classes {
                let (r, c, side) = cfg.patch_slot(k);
                assert!(r + side <= cfg.size && c + side <= cfg.size);
            }
        }
    }
}
