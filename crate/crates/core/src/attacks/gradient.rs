//! Sign-gradient attacks: FGSM and PGD.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::AttackConfig;
use super::{sample_batch, sample_seed};
use crate::error::Result;
use crate::nn::Network;

/// `sgn` with `sgn(0) = 0`.
#[inline]
pub(crate) fn sign(g: f64) -> f64 {
    if g > 0.0 {
        1.0
    } else if g < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `clip(x + ε·sgn(∇ₓL))` for one sample.
pub(crate) fn fgsm_sample(net: &Network, x: &[f64], y: usize, cfg: &AttackConfig) -> Result<Vec<f64>> {
    let (_, grad) = net.input_gradient(&sample_batch(net, x)?, &[y])?;
    Ok(x.iter()
        .zip(grad.data())
        .map(|(&v, &g)| (v + cfg.epsilon * sign(g)).clamp(cfg.clip_min, cfg.clip_max))
        .collect())
}

/// Iterated signed-gradient ascent, projected after every step onto the
/// ε-ball around the original sample intersected with the clip box.
pub(crate) fn pgd_sample(
    net: &Network,
    x: &[f64],
    y: usize,
    cfg: &AttackConfig,
    index: usize,
) -> Result<Vec<f64>> {
    let eps = cfg.epsilon;
    let project = |v: f64, x0: f64| (v.clamp(x0 - eps, x0 + eps)).clamp(cfg.clip_min, cfg.clip_max);
    let mut cur: Vec<f64> = if cfg.random_start && eps > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(cfg.seed, index));
        x.iter()
            .map(|&v| project(v + rng.random_range(-eps..=eps), v))
            .collect()
    } else {
        x.to_vec()
    };
    for _ in 0..cfg.iters {
        let (_, grad) = net.input_gradient(&sample_batch(net, &cur)?, &[y])?;
        for ((c, &g), &x0) in cur.iter_mut().zip(grad.data()).zip(x) {
            *c = project(*c + cfg.alpha * sign(g), x0);
        }
    }
    Ok(cur)
}
