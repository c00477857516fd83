use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttackKind {
    Fgsm,
    Pgd,
    Stadv,
}

impl AttackKind {
    pub const ALL: [AttackKind; 3] = [AttackKind::Fgsm, AttackKind::Pgd, AttackKind::Stadv];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::Fgsm => "fgsm",
            AttackKind::Pgd => "pgd",
            AttackKind::Stadv => "stadv",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fgsm" => Ok(AttackKind::Fgsm),
            "pgd" => Ok(AttackKind::Pgd),
            "stadv" => Ok(AttackKind::Stadv),
            other => Err(invalid!("unknown attack kind {other:?}")),
        }
    }
}

/// Everything needed to reproduce one attack run.
///
/// `epsilon` is an ℓ∞ radius in pixel-intensity units for FGSM/PGD and a
/// per-component bound on flow displacement, in pixels, for stAdv.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    pub kind: AttackKind,
    pub epsilon: f64,
    /// PGD step size.
    pub alpha: f64,
    /// PGD / stAdv step count.
    pub iters: usize,
    pub clip_min: f64,
    pub clip_max: f64,
    /// PGD: start from a uniform point in the ε-ball.
    pub random_start: bool,
    /// stAdv: total-variation weight on the flow.
    pub tau: f64,
    /// stAdv: gradient-ascent step on the flow.
    pub flow_lr: f64,
    pub seed: u64,
}

impl AttackConfig {
    /// FGSM at radius 8/255.
    pub fn fgsm() -> Self {
        Self {
            kind: AttackKind::Fgsm,
            epsilon: 8.0 / 255.0,
            alpha: 0.0,
            iters: 1,
            clip_min: 0.0,
            clip_max: 1.0,
            random_start: false,
            tau: 0.0,
            flow_lr: 0.0,
            seed: 0,
        }
    }

    /// PGD at radius 1/255, 10 iterations of step ε/4 from a random start.
    pub fn pgd() -> Self {
        let epsilon = 1.0 / 255.0;
        Self {
            kind: AttackKind::Pgd,
            epsilon,
            alpha: epsilon / 4.0,
            iters: 10,
            random_start: true,
            ..Self::fgsm()
        }
    }

    /// stAdv with flow radius 0.3/64 pixels.
    pub fn stadv() -> Self {
        Self {
            kind: AttackKind::Stadv,
            epsilon: 0.3 / 64.0,
            iters: 20,
            tau: 0.05,
            flow_lr: 0.01,
            ..Self::fgsm()
        }
    }

    pub fn default_for(kind: AttackKind) -> Self {
        match kind {
            AttackKind::Fgsm => Self::fgsm(),
            AttackKind::Pgd => Self::pgd(),
            AttackKind::Stadv => Self::stadv(),
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.epsilon, self.alpha, self.clip_min, self.clip_max, self.tau, self.flow_lr];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(invalid!("attack parameters must be finite"));
        }
        if self.epsilon < 0.0 {
            return Err(invalid!("epsilon must be non-negative, got {}", self.epsilon));
        }
        if self.clip_min >= self.clip_max {
            return Err(invalid!(
                "clip box [{}, {}] is empty",
                self.clip_min,
                self.clip_max
            ));
        }
        if self.kind == AttackKind::Pgd && self.iters > 0 && self.alpha <= 0.0 {
            return Err(invalid!("pgd needs alpha > 0 when iters > 0"));
        }
        if self.kind == AttackKind::Stadv && (self.tau < 0.0 || self.flow_lr < 0.0) {
            return Err(invalid!("stadv tau and flow_lr must be non-negative"));
        }
        Ok(())
    }

    /// Flat `key=value` pairs; floats use the shortest round-trip form.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        vec![
            ("kind".into(), self.kind.name().into()),
            ("epsilon".into(), format!("{:?}", self.epsilon)),
            ("alpha".into(), format!("{:?}", self.alpha)),
            ("iters".into(), self.iters.to_string()),
            ("clip_min".into(), format!("{:?}", self.clip_min)),
            ("clip_max".into(), format!("{:?}", self.clip_max)),
            ("random_start".into(), self.random_start.to_string()),
            ("tau".into(), format!("{:?}", self.tau)),
            ("flow_lr".into(), format!("{:?}", self.flow_lr)),
            ("seed".into(), self.seed.to_string()),
        ]
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let pairs: Vec<(&str, &str)> = pairs.into_iter().collect();
        let kind: AttackKind = pairs
            .iter()
            .find(|(k, _)| *k == "kind")
            .ok_or_else(|| invalid!("attack description lacks a kind"))?
            .1
            .parse()?;
        let mut cfg = Self::default_for(kind);
        for (k, v) in pairs {
            let float = || v.parse::<f64>().map_err(|_| invalid!("bad value {v:?} for {k}"));
            match k {
                "kind" => {}
                "epsilon" => cfg.epsilon = float()?,
                "alpha" => cfg.alpha = float()?,
                "iters" => cfg.iters = v.parse().map_err(|_| invalid!("bad iters {v:?}"))?,
                "clip_min" => cfg.clip_min = float()?,
                "clip_max" => cfg.clip_max = float()?,
                "random_start" => {
                    cfg.random_start = v.parse().map_err(|_| invalid!("bad bool {v:?}"))?
                }
                "tau" => cfg.tau = float()?,
                "flow_lr" => cfg.flow_lr = float()?,
                "seed" => cfg.seed = v.parse().map_err(|_| invalid!("bad seed {v:?}"))?,
                other => return Err(invalid!("unknown attack key {other:?}")),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_reported_radii() {
        assert_eq!(AttackConfig::fgsm().epsilon, 8.0 / 255.0);
        let pgd = AttackConfig::pgd();
        assert_eq!(pgd.epsilon, 1.0 / 255.0);
        assert_eq!(pgd.iters, 10);
        assert!(pgd.random_start);
        assert_eq!(pgd.alpha, pgd.epsilon / 4.0);
        let st = AttackConfig::stadv();
        assert_eq!(st.epsilon, 0.3 / 64.0);
        assert_eq!(st.tau, 0.05);
        for k in AttackKind::ALL {
            AttackConfig::default_for(k).validate().unwrap();
        }
    }

    #[test]
    fn pairs_round_trip() {
        let cfg = AttackConfig {
            epsilon: 0.1 + 0.2,
            seed: 99,
            ..AttackConfig::pgd()
        };
        let pairs = cfg.to_pairs();
        let back =
            AttackConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation() {
        assert!(AttackConfig::fgsm().with_epsilon(-1.0).validate().is_err());
        let bad_box = AttackConfig {
            clip_min: 1.0,
            clip_max: 1.0,
            ..AttackConfig::fgsm()
        };
        assert!(bad_box.validate().is_err());
        let no_step = AttackConfig {
            alpha: 0.0,
            ..AttackConfig::pgd()
        };
        assert!(no_step.validate().is_err());
        assert!("cw".parse::<AttackKind>().is_err());
    }
}
