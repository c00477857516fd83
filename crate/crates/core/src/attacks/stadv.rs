//! Spatially transformed adversarial examples.
//!
//! The flow starts at zero and takes `iters` plain gradient-ascent steps on
//! `L(θ, warp(x, f), y) − τ·TV(f)`; after every step each flow component is
//! clamped to `[−ε, ε]` pixels.

use super::config::AttackConfig;
use super::sample_batch;
use super::warp::{flow_tv, warp_flow_grad, warp_raw, FlowField};
use crate::error::Result;
use crate::nn::Network;

/// Adversarial image together with the flow that produced it.
#[derive(Debug, Clone)]
pub struct StadvOutcome {
    pub image: Vec<f64>,
    pub flow: FlowField,
}

pub(crate) fn stadv_sample(
    net: &Network,
    x: &[f64],
    y: usize,
    cfg: &AttackConfig,
) -> Result<StadvOutcome> {
    let extent = net.spec().input();
    let [_, h, w] = extent;
    let eps = cfg.epsilon;
    let mut flow = vec![0.0; h * w * 2];
    for _ in 0..cfg.iters {
        let warped = warp_raw(x, extent, &flow);
        let (_, grad) = net.input_gradient(&sample_batch(net, &warped)?, &[y])?;
        let g_loss = warp_flow_grad(x, extent, &flow, grad.data());
        let (_, g_tv) = flow_tv(&flow, h, w);
        for ((f, gl), gt) in flow.iter_mut().zip(&g_loss).zip(&g_tv) {
            *f = (*f + cfg.flow_lr * (gl - cfg.tau * gt)).clamp(-eps, eps);
        }
    }
    let image = warp_raw(x, extent, &flow)
        .into_iter()
        .map(|v| v.clamp(cfg.clip_min, cfg.clip_max))
        .collect();
    Ok(StadvOutcome {
        image,
        flow: FlowField::new(h, w, flow)?,
    })
}
