//! Adversarial example generation against a fixed [`Network`].
//!
//! Every attack is untargeted (it ascends the loss of the true label) and
//! processes samples independently; batches run in parallel with per-sample
//! seeds `cfg.seed + index`, so the output does not depend on scheduling.

mod config;
mod gradient;
mod stadv;
mod warp;

use rayon::prelude::*;

pub use config::{AttackConfig, AttackKind};
pub use stadv::StadvOutcome;
pub use warp::{bilinear_warp, FlowField};

use crate::error::{invalid, shape_err, Result};
use crate::nn::Network;
use crate::tensor::Tensor;

pub(crate) fn sample_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

pub(crate) fn sample_batch(net: &Network, x: &[f64]) -> Result<Tensor> {
    let [c, h, w] = net.spec().input();
    Tensor::new(vec![1, c, h, w], x.to_vec())
}

fn check_inputs(net: &Network, x: &Tensor, y: &[usize], cfg: &AttackConfig) -> Result<usize> {
    cfg.validate()?;
    let [c, h, w] = net.spec().input();
    if x.shape().len() != 4 || x.shape()[1..] != [c, h, w] {
        return Err(shape_err!(
            "attack input {:?} does not match model input [N, {c}, {h}, {w}]",
            x.shape()
        ));
    }
    let n = x.shape()[0];
    if y.len() != n {
        return Err(shape_err!("{} labels for {n} samples", y.len()));
    }
    if let Some(v) = x
        .data()
        .iter()
        .find(|&&v| !(v >= cfg.clip_min && v <= cfg.clip_max))
    {
        return Err(invalid!(
            "input value {v} outside the clip box [{}, {}]",
            cfg.clip_min,
            cfg.clip_max
        ));
    }
    Ok(n)
}

fn per_sample(
    net: &Network,
    x: &Tensor,
    y: &[usize],
    cfg: &AttackConfig,
    f: impl Fn(&[f64], usize, usize) -> Result<Vec<f64>> + Sync,
) -> Result<Tensor> {
    let n = check_inputs(net, x, y, cfg)?;
    let rows = (0..n)
        .into_par_iter()
        .map(|i| f(x.row(i), y[i], i))
        .collect::<Result<Vec<_>>>()?;
    Tensor::new(x.shape().to_vec(), rows.concat())
}

/// Fast gradient sign method: `x_adv = clip(x + ε·sgn(∇ₓL(θ, x, y)))`.
pub fn fgsm(net: &Network, x: &Tensor, y: &[usize], cfg: &AttackConfig) -> Result<Tensor> {
    per_sample(net, x, y, cfg, |row, label, _| {
        gradient::fgsm_sample(net, row, label, cfg)
    })
}

/// Projected gradient descent with an optional uniform random start.
pub fn pgd(net: &Network, x: &Tensor, y: &[usize], cfg: &AttackConfig) -> Result<Tensor> {
    per_sample(net, x, y, cfg, |row, label, i| {
        gradient::pgd_sample(net, row, label, cfg, i)
    })
}

/// Flow-based spatial attack; returns only the warped images.
pub fn stadv(net: &Network, x: &Tensor, y: &[usize], cfg: &AttackConfig) -> Result<Tensor> {
    per_sample(net, x, y, cfg, |row, label, _| {
        stadv::stadv_sample(net, row, label, cfg).map(|o| o.image)
    })
}

/// stAdv on a single `[C, H, W]` image, also returning the optimized flow.
pub fn stadv_single(net: &Network, x: &Tensor, y: usize, cfg: &AttackConfig) -> Result<StadvOutcome> {
    let batch = x.clone().reshape(std::iter::once(1).chain(x.shape().iter().copied()).collect())?;
    check_inputs(net, &batch, &[y], cfg)?;
    stadv::stadv_sample(net, x.data(), y, cfg)
}

/// Dispatch on `cfg.kind`.
pub fn attack(net: &Network, x: &Tensor, y: &[usize], cfg: &AttackConfig) -> Result<Tensor> {
    match cfg.kind {
        AttackKind::Fgsm => fgsm(net, x, y, cfg),
        AttackKind::Pgd => pgd(net, x, y, cfg),
        AttackKind::Stadv => stadv(net, x, y, cfg),
    }
}
