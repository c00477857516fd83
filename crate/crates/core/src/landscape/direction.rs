use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::nn::ParamSet;

/// Independent standard-normal entries, shape-congruent with `center`.
pub fn sample_direction(center: &ParamSet, seed: u64) -> ParamSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = center.clone();
    for f in d.filters_mut() {
        for v in f.data_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
    }
    d
}

/// Rescale every filter block `d_{i,j}` of `direction` to the Frobenius norm
/// of the matching block `θ_{i,j}` of `center`:
/// `d_{i,j} ← d_{i,j} / ‖d_{i,j}‖ · ‖θ_{i,j}‖`.
///
/// Blocks where either norm is zero (zero biases, say) become zero.
pub fn filter_normalize(direction: &ParamSet, center: &ParamSet) -> Result<ParamSet> {
    center.ensure_congruent(direction, "direction")?;
    let mut out = direction.clone();
    for (d, theta) in out.filters_mut().zip(center.filters()) {
        let dn = d.frobenius_norm();
        let tn = theta.frobenius_norm();
        if dn == 0.0 || tn == 0.0 {
            d.data_mut().fill(0.0);
        } else {
            let scale = tn / dn;
            for v in d.data_mut() {
                *v *= scale;
            }
        }
    }
    Ok(out)
}

/// The two scan directions and how they were made.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionPair {
    pub delta: ParamSet,
    pub eta: ParamSet,
    pub normalized: bool,
    pub seeds: (u64, u64),
}

impl DirectionPair {
    /// Sample both directions and filter-normalize them against `center`.
    pub fn normalized(center: &ParamSet, delta_seed: u64, eta_seed: u64) -> Result<Self> {
        Ok(Self {
            delta: filter_normalize(&sample_direction(center, delta_seed), center)?,
            eta: filter_normalize(&sample_direction(center, eta_seed), center)?,
            normalized: true,
            seeds: (delta_seed, eta_seed),
        })
    }

    /// Raw Gaussian directions without normalization.
    pub fn raw(center: &ParamSet, delta_seed: u64, eta_seed: u64) -> Self {
        Self {
            delta: sample_direction(center, delta_seed),
            eta: sample_direction(center, eta_seed),
            normalized: false,
            seeds: (delta_seed, eta_seed),
        }
    }
}
