//! Adversarial attacks, adversarial fine-tuning and filter-normalized
//! loss-landscape scans for small image classifiers.
//!
//! The crate is organized bottom-up:
//!
//! * [`nn`]: tensors, layered weights, forward/backward passes, SGD.
//! * [`attacks`]: FGSM, PGD and flow-based (stAdv) adversarial examples.
//! * [`data`]: labeled image sets, the `LADS` container, IDX import and a
//!   seeded synthetic task.
//! * [`training`]: base training, 1:1 adversarial augmentation, fine-tuning.
//! * [`landscape`]: random directions, filter normalization, surface scans.
//! * [`metrics`]: top-1 accuracy, SSIM and evaluation reports.

mod bytes;
pub mod error;
pub mod tensor;

pub mod attacks;
pub mod data;
pub mod desk;
pub mod landscape;
pub mod metrics;
pub mod nn;
pub mod training;

pub use error::{Error, Result};
pub use tensor::Tensor;
