//! Top-1 accuracy, SSIM distances and the evaluation report.

mod report;
mod ssim;

pub use report::{evaluate, EvalReport};
pub use ssim::{mean_ssim_distance, ssim, SsimConfig};

use crate::data::LabeledDataset;
use crate::error::{invalid, Result};
use crate::nn::{argmax, Network};

/// Fraction of samples whose largest logit is the label.
pub fn top1_accuracy(net: &Network, data: &LabeledDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(invalid!("accuracy of an empty dataset"));
    }
    let logits = net.forward(data.images())?;
    Ok(accuracy_from_logits(logits.data(), logits.shape()[1], data.labels()))
}

pub(crate) fn accuracy_from_logits(logits: &[f64], classes: usize, labels: &[usize]) -> f64 {
    let hits = labels
        .iter()
        .enumerate()
        .filter(|(i, &y)| argmax(&logits[i * classes..(i + 1) * classes]) == y)
        .count();
    hits as f64 / labels.len() as f64
}
