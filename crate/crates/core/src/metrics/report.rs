use std::collections::BTreeMap;
use std::fmt::Write;

use super::{mean_ssim_distance, top1_accuracy, SsimConfig};
use crate::attacks::{self, AttackConfig, AttackKind};
use crate::data::{LabeledDataset, Provenance};
use crate::error::Result;
use crate::nn::Network;

/// Clean and per-attack top-1 accuracy plus mean 1−SSIM per attack.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub model: String,
    pub ground_accuracy: f64,
    /// Mean cross-entropy on the clean data.
    pub ground_loss: f64,
    pub adversarial_accuracy: BTreeMap<AttackKind, f64>,
    pub ssim_distance: BTreeMap<AttackKind, f64>,
}

/// Attack `data` with each configuration against `net` and score the results.
pub fn evaluate(
    net: &Network,
    data: &LabeledDataset,
    attack_cfgs: &[AttackConfig],
    ssim: &SsimConfig,
) -> Result<EvalReport> {
    let mut report = EvalReport {
        ground_accuracy: top1_accuracy(net, data)?,
        ground_loss: net.loss(data.images(), data.labels())?,
        ..EvalReport::default()
    };
    for cfg in attack_cfgs {
        let adv = attacks::attack(net, data.images(), data.labels(), cfg)?;
        let adv = LabeledDataset::new(adv, data.labels().to_vec(), Provenance::Attack(cfg.clone()))?;
        report
            .adversarial_accuracy
            .insert(cfg.kind, top1_accuracy(net, &adv)?);
        report
            .ssim_distance
            .insert(cfg.kind, mean_ssim_distance(data, &adv, ssim)?);
    }
    Ok(report)
}

impl EvalReport {
    /// Aligned text: one accuracy table and one 1−SSIM table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let kinds: Vec<AttackKind> = self.adversarial_accuracy.keys().copied().collect();
        let _ = writeln!(out, "Top-1 accuracy (%)");
        let mut header = format!("{:<14}{:>10}", "model", "ground");
        for k in &kinds {
            let _ = write!(header, "{:>10}", k.name().to_uppercase());
        }
        let _ = writeln!(out, "{header}");
        let mut row = format!("{:<14}{:>10.2}", self.model, 100.0 * self.ground_accuracy);
        for k in &kinds {
            let _ = write!(row, "{:>10.2}", 100.0 * self.adversarial_accuracy[k]);
        }
        let _ = writeln!(out, "{row}");
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<14}{:>12}", "attack", "1-SSIM");
        for (k, v) in &self.ssim_distance {
            let _ = writeln!(out, "{:<14}{:>12.6}", k.name().to_uppercase(), v);
        }
        out
    }

    /// `key = value` lines with round-trip float formatting.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model = {}", self.model);
        let _ = writeln!(out, "ground_accuracy = {:?}", self.ground_accuracy);
        let _ = writeln!(out, "ground_loss = {:?}", self.ground_loss);
        for (k, v) in &self.adversarial_accuracy {
            let _ = writeln!(out, "adversarial_accuracy.{} = {:?}", k.name(), v);
        }
        for (k, v) in &self.ssim_distance {
            let _ = writeln!(out, "ssim_distance.{} = {:?}", k.name(), v);
        }
        out
    }

    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut report = EvalReport::default();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| crate::error::invalid!("malformed report line {line:?}"))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| crate::error::invalid!("bad number {value:?} for {key}"))
            };
            if key == "model" {
                report.model = value.to_string();
            } else if key == "ground_accuracy" {
                report.ground_accuracy = num()?;
            } else if key == "ground_loss" {
                report.ground_loss = num()?;
            } else if let Some(k) = key.strip_prefix("adversarial_accuracy.") {
                report.adversarial_accuracy.insert(k.parse()?, num()?);
            } else if let Some(k) = key.strip_prefix("ssim_distance.") {
                report.ssim_distance.insert(k.parse()?, num()?);
            } else {
                return Err(crate::error::invalid!("unknown report key {key:?}"));
            }
        }
        Ok(report)
    }
}
