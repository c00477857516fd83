//! The desk-scale protocol: default data, model, schedules and attacks used by
//! the pipeline script and the end-to-end tests.
//!
//! Seed `s` draws its training set from synth seed `1000 + s` and its held-out
//! set from `5000 + s`.

use crate::attacks::{AttackConfig, AttackKind};
use crate::data::{synth, LabeledDataset, SynthConfig};
use crate::error::Result;
use crate::nn::ModelSpec;
use crate::training::TrainConfig;

pub const CLASSES: usize = 4;
pub const SIZE: usize = 16;
pub const TRAIN_SIZE: usize = 512;
pub const TEST_SIZE: usize = 256;

/// Flow bound for stAdv, in pixels.
pub const STADV_RADIUS: f64 = 0.1;

pub fn synth(seed: u64, n: usize) -> SynthConfig {
    SynthConfig {
        n,
        seed,
        classes: CLASSES,
        size: SIZE,
        ..SynthConfig::default()
    }
}

pub fn train_set(seed: u64) -> Result<LabeledDataset> {
    synth::generate(&synth(1000 + seed, TRAIN_SIZE))
}

pub fn test_set(seed: u64) -> Result<LabeledDataset> {
    synth::generate(&synth(5000 + seed, TEST_SIZE))
}

pub fn model() -> Result<ModelSpec> {
    ModelSpec::desk_cnn([1, SIZE, SIZE], CLASSES)
}

pub fn base_training(seed: u64) -> TrainConfig {
    TrainConfig {
        seed,
        epochs: 60,
        patience: None,
        std_floor: 0.01,
        ..TrainConfig::base()
    }
}

pub fn finetuning(seed: u64) -> TrainConfig {
    TrainConfig {
        seed,
        epochs: 80,
        lr: 0.05,
        weight_decay: 0.015,
        std_floor: 0.01,
        ..TrainConfig::finetune()
    }
}

pub fn attack(kind: AttackKind, seed: u64) -> AttackConfig {
    let cfg = AttackConfig::default_for(kind).with_seed(seed);
    match kind {
        AttackKind::Stadv => AttackConfig {
            epsilon: STADV_RADIUS,
            tau: 0.3,
            flow_lr: 0.1,
            ..cfg
        },
        _ => cfg,
    }
}
