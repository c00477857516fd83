//! Two-dimensional loss surfaces around a trained parameter vector.

mod direction;
mod grid;

use rayon::prelude::*;

pub use direction::{filter_normalize, sample_direction, DirectionPair};
pub use grid::{linspace, GridMetadata, SurfaceGrid};

use crate::data::LabeledDataset;
use crate::error::{invalid, Error, Result};
use crate::nn::{cross_entropy, forward, ModelSpec, ParamSet};

/// Write `center + alpha * delta + beta * eta` into `out`.
fn displace(out: &mut ParamSet, center: &ParamSet, dirs: &DirectionPair, alpha: f64, beta: f64) {
    let it = out
        .filters_mut()
        .zip(center.filters())
        .zip(dirs.delta.filters().zip(dirs.eta.filters()));
    for ((o, c), (d, e)) in it {
        for (((o, &c), &d), &e) in o
            .data_mut()
            .iter_mut()
            .zip(c.data())
            .zip(d.data())
            .zip(e.data())
        {
            *o = c + alpha * d + beta * e;
        }
    }
}

fn loss_at(spec: &ModelSpec, params: &ParamSet, data: &LabeledDataset) -> Result<f64> {
    let logits = forward(spec, params, data.images())?;
    let loss = cross_entropy(&logits, data.labels())?;
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::Numeric(format!("loss is {loss}")))
    }
}

fn check_scan_inputs(spec: &ModelSpec, center: &ParamSet, dirs: &DirectionPair) -> Result<()> {
    spec.check_params(center)?;
    center.ensure_congruent(&dirs.delta, "delta direction")?;
    center.ensure_congruent(&dirs.eta, "eta direction")?;
    if !dirs.delta.all_finite() || !dirs.eta.all_finite() {
        return Err(invalid!("scan directions contain non-finite values"));
    }
    Ok(())
}

/// `L(center + alpha * delta + beta * eta)` on `data`.
///
/// Unlike [`scan`], a non-finite loss is reported as an error.
pub fn surface_value(
    spec: &ModelSpec,
    center: &ParamSet,
    dirs: &DirectionPair,
    data: &LabeledDataset,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    check_scan_inputs(spec, center, dirs)?;
    let mut p = center.clone();
    displace(&mut p, center, dirs, alpha, beta);
    loss_at(spec, &p, data)
}

/// Evaluate the loss on every `(alpha, beta)` cell.
///
/// Both axes must be strictly increasing and contain `0`. Cells whose loss
/// is not finite are stored as `+inf`. The result does not depend on the
/// number of worker threads.
pub fn scan(
    spec: &ModelSpec,
    center: &ParamSet,
    dirs: &DirectionPair,
    data: &LabeledDataset,
    alphas: &[f64],
    betas: &[f64],
) -> Result<SurfaceGrid> {
    check_scan_inputs(spec, center, dirs)?;
    grid::check_axis("alpha", alphas)?;
    grid::check_axis("beta", betas)?;
    if !alphas.contains(&0.0) || !betas.contains(&0.0) {
        return Err(invalid!("scan axes must both contain 0"));
    }
    let center_loss = loss_at(spec, center, data)?;
    let nb = betas.len();
    let flat: Vec<f64> = (0..alphas.len() * nb)
        .into_par_iter()
        .map_init(
            || center.clone(),
            |scratch, k| {
                let (a, b) = (alphas[k / nb], betas[k % nb]);
                if a == 0.0 && b == 0.0 {
                    return center_loss;
                }
                displace(scratch, center, dirs, a, b);
                loss_at(spec, scratch, data).unwrap_or(f64::INFINITY)
            },
        )
        .collect();
    let losses = flat.chunks(nb).map(<[f64]>::to_vec).collect();
    Ok(SurfaceGrid {
        alphas: alphas.to_vec(),
        betas: betas.to_vec(),
        losses,
        center_loss,
        metadata: GridMetadata {
            direction_seeds: dirs.seeds,
            normalized: dirs.normalized,
            ..GridMetadata::default()
        },
    })
}

/// Loss along `center + t * delta` for each `t`; non-finite values become `+inf`.
pub fn slice_1d(
    spec: &ModelSpec,
    center: &ParamSet,
    delta: &ParamSet,
    data: &LabeledDataset,
    ts: &[f64],
) -> Result<Vec<f64>> {
    let dirs = DirectionPair {
        delta: delta.clone(),
        eta: center.zeros_like(),
        normalized: false,
        seeds: (0, 0),
    };
    check_scan_inputs(spec, center, &dirs)?;
    Ok(ts
        .par_iter()
        .map_init(
            || center.clone(),
            |scratch, &t| {
                displace(scratch, center, &dirs, t, 0.0);
                loss_at(spec, scratch, data).unwrap_or(f64::INFINITY)
            },
        )
        .collect())
}
