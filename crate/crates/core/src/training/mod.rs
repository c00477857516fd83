//! Base training, 1:1 adversarial augmentation and fine-tuning.
//!
//! The adversarial half of an augmented set is generated once against the
//! converged base model; it is not refreshed during fine-tuning.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::attacks::{self, AttackConfig};
use crate::data::{LabeledDataset, Provenance};
use crate::error::{invalid, Error, Result};
use crate::nn::{run_backward, LayerKind, ModelSpec, Network, ParamSet, Sgd};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    /// L2 penalty on conv and dense weights (biases and statistics are exempt).
    pub weight_decay: f64,
    /// Multiplicative learning-rate factor applied after every epoch.
    pub lr_decay: f64,
    pub seed: u64,
    /// Stop once the epoch loss has not improved by more than `min_delta`
    /// for this many consecutive epochs. `None` runs the full budget.
    pub patience: Option<usize>,
    pub min_delta: f64,
    /// Lower bound on the per-pixel standard deviation used when fitting a
    /// `standardize` input layer.
    pub std_floor: f64,
}

impl TrainConfig {
    /// Defaults for training a clean model until its loss plateaus.
    pub fn base() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            lr: 0.01,
            momentum: 0.9,
            weight_decay: 0.0,
            lr_decay: 1.0,
            seed: 0,
            patience: Some(5),
            min_delta: 1e-4,
            std_floor: 1e-3,
        }
    }

    /// Defaults for fine-tuning on an augmented set: a fixed 200-epoch budget.
    pub fn finetune() -> Self {
        Self {
            epochs: 200,
            patience: None,
            ..Self::base()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(invalid!("batch size must be positive"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(invalid!("learning rate must be finite and non-negative"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(invalid!("weight_decay must be finite and non-negative"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(invalid!("momentum must lie in [0, 1)"));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay.is_finite()) {
            return Err(invalid!("lr_decay must be positive"));
        }
        if !(self.std_floor > 0.0 && self.std_floor.is_finite()) {
            return Err(invalid!("std_floor must be positive"));
        }
        if self.patience == Some(0) {
            return Err(invalid!("patience must be positive when set"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    /// All samples of the epoch.
    Train,
    Clean,
    Adversarial,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Clean => "clean",
            Split::Adversarial => "adversarial",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub split: Split,
    /// Mean per-sample loss seen during the epoch's minibatches.
    pub loss: f64,
    pub accuracy: f64,
    pub wall_secs: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ParamSet,
    pub log: Vec<EpochLog>,
    pub epochs_run: usize,
    pub converged: bool,
}

impl TrainOutcome {
    /// Final-epoch loss for a split, if that split was logged.
    pub fn final_loss(&self, split: Split) -> Option<f64> {
        self.log.iter().rev().find(|e| e.split == split).map(|e| e.loss)
    }
}

/// Render a training log as aligned plain text.
pub fn format_log(log: &[EpochLog]) -> String {
    let mut out = String::from("epoch  split        loss                accuracy  wall_s\n");
    for e in log {
        out.push_str(&format!(
            "{:<6} {:<12} {:<19.12e} {:<9.6} {:.3}\n",
            e.epoch,
            e.split.name(),
            e.loss,
            e.accuracy,
            e.wall_secs
        ));
    }
    out
}

/// Train freshly initialized weights (seeded by `cfg.seed`) on clean data.
///
/// A leading `standardize` layer is fitted to the training pixels first and
/// stays frozen afterwards.
pub fn train_base(spec: &ModelSpec, data: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if *data.provenance() != Provenance::Clean {
        return Err(invalid!("base training expects a clean dataset"));
    }
    cfg.validate()?;
    let mut init = spec.init(cfg.seed);
    if spec.has_standardize() {
        fit_standardize(spec, &mut init, data.images(), cfg.std_floor)?;
    }
    run_sgd(spec, init, data, cfg)
}

/// Set the leading `standardize` block to the per-pixel mean and the inverse
/// of the per-pixel standard deviation (at least `floor`) of `images`.
pub fn fit_standardize(spec: &ModelSpec, params: &mut ParamSet, images: &Tensor, floor: f64) -> Result<()> {
    spec.check_params(params)?;
    if !spec.has_standardize() {
        return Err(invalid!("architecture has no standardize layer"));
    }
    let n = images.shape().first().copied().unwrap_or(0);
    let d = spec.input_len();
    if n == 0 || images.row_len() != d {
        return Err(crate::error::shape_err!(
            "cannot fit standardization of {d} inputs from images {:?}",
            images.shape()
        ));
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(images.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for i in 0..n {
        for ((s, v), m) in var.iter_mut().zip(images.row(i)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let stats = params.layers_mut()[0].filters_mut();
    stats[0].data_mut().copy_from_slice(&mean);
    for (k, s) in stats[1].data_mut().iter_mut().zip(var) {
        *k = 1.0 / (s / n as f64).sqrt().max(floor);
    }
    Ok(())
}

/// Continue SGD from `base` on a 1:1 union dataset.
pub fn finetune(
    spec: &ModelSpec,
    base: &ParamSet,
    data: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if !matches!(data.provenance(), Provenance::Union { .. }) {
        return Err(invalid!("fine-tuning expects a clean+adversarial union dataset"));
    }
    spec.check_params(base)?;
    run_sgd(spec, base.clone(), data, cfg)
}

fn run_sgd(
    spec: &ModelSpec,
    init: ParamSet,
    data: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.num_classes() > spec.classes() {
        return Err(invalid!(
            "dataset has labels up to {} but the model has {} classes",
            data.num_classes() - 1,
            spec.classes()
        ));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut opt = Sgd::new(cfg.lr, cfg.momentum)?;
    let mut params = init;
    let mut log = Vec::new();
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let mut epochs_run = 0;
    let mut converged = false;
    let split_log = matches!(data.provenance(), Provenance::Union { .. });

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        // [loss sum, correct, count] for clean and adversarial samples
        let mut tally = [[0.0f64; 3]; 2];
        for batch in order.chunks(cfg.batch_size) {
            let x = data.images().gather_rows(batch);
            let y: Vec<usize> = batch.iter().map(|&i| data.labels()[i]).collect();
            let out = run_backward(spec, &params, &x, &y, true).map_err(|e| diverged(epoch, e))?;
            for (k, &i) in batch.iter().enumerate() {
                let t = &mut tally[data.is_adversarial(i) as usize];
                t[0] += out.sample_losses[k];
                t[1] += (out.predictions[k] == y[k]) as u8 as f64;
                t[2] += 1.0;
            }
            let mut grads = out.wrt_params.expect("requested");
            for (g, p) in grads.layers_mut().iter_mut().zip(params.layers()) {
                match g.kind() {
                    LayerKind::BatchStat => {
                        g.filters_mut().iter_mut().for_each(|f| f.data_mut().fill(0.0));
                    }
                    LayerKind::Conv | LayerKind::Dense if cfg.weight_decay > 0.0 => {
                        for (gf, pf) in g.filters_mut().iter_mut().zip(p.filters()) {
                            for (gv, pv) in gf.data_mut().iter_mut().zip(pf.data()) {
                                *gv += cfg.weight_decay * pv;
                            }
                        }
                    }
                    _ => {}
                }
            }
            params = opt.step(&params, &grads)?;
            if !params.all_finite() {
                return Err(diverged(epoch, Error::Numeric("non-finite weights".into())));
            }
        }
        epochs_run = epoch + 1;
        let wall_secs = start.elapsed().as_secs_f64();
        let total = tally[0][2] + tally[1][2];
        let epoch_loss = (tally[0][0] + tally[1][0]) / total;
        log.push(EpochLog {
            epoch,
            split: Split::Train,
            loss: epoch_loss,
            accuracy: (tally[0][1] + tally[1][1]) / total,
            wall_secs,
        });
        if split_log {
            for (split, t) in [(Split::Clean, tally[0]), (Split::Adversarial, tally[1])] {
                log.push(EpochLog {
                    epoch,
                    split,
                    loss: t[0] / t[2].max(1.0),
                    accuracy: t[1] / t[2].max(1.0),
                    wall_secs,
                });
            }
        }
        if let Some(patience) = cfg.patience {
            if epoch_loss < best - cfg.min_delta {
                best = epoch_loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    converged = true;
                    break;
                }
            }
        }
        opt.set_lr(opt.lr() * cfg.lr_decay);
    }
    Ok(TrainOutcome {
        params,
        log,
        epochs_run,
        converged,
    })
}

fn diverged(epoch: usize, e: Error) -> Error {
    match e {
        Error::Numeric(msg) => Error::Numeric(format!("training diverged in epoch {epoch}: {msg}")),
        other => other,
    }
}

/// Append exactly one adversarial counterpart per sample, keeping its label.
///
/// The output holds the `N` clean samples first (unchanged) and then their
/// `N` counterparts in the same order. A sample whose attack fails
/// numerically keeps its clean image as the counterpart, so the ratio stays 1:1.
pub fn augment(net: &Network, data: &LabeledDataset, attack: &AttackConfig) -> Result<LabeledDataset> {
    if *data.provenance() != Provenance::Clean {
        return Err(invalid!("augmentation expects a clean dataset"));
    }
    let adv = match attacks::attack(net, data.images(), data.labels(), attack) {
        Ok(t) => t,
        Err(Error::Numeric(_)) => best_effort(net, data, attack)?,
        Err(e) => return Err(e),
    };
    let images = data.images().concat_rows(&adv)?;
    let mut labels = data.labels().to_vec();
    labels.extend_from_slice(data.labels());
    LabeledDataset::new(
        images,
        labels,
        Provenance::Union {
            clean: data.len(),
            attack: attack.clone(),
        },
    )
}

fn best_effort(net: &Network, data: &LabeledDataset, attack: &AttackConfig) -> Result<Tensor> {
    let [c, h, w] = data.extent();
    let rows = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let x = Tensor::new(vec![1, c, h, w], data.images().row(i).to_vec())?;
            // Same per-sample seed as the batched call would have used.
            let cfg = AttackConfig {
                seed: attack.seed.wrapping_add(i as u64),
                ..attack.clone()
            };
            match attacks::attack(net, &x, &[data.labels()[i]], &cfg) {
                Ok(t) => Ok(t.into_data()),
                Err(Error::Numeric(_)) => Ok(x.into_data()),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Tensor::new(data.images().shape().to_vec(), rows.concat())
}
