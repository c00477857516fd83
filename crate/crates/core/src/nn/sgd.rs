use super::params::ParamSet;
use crate::error::{invalid, Result};

/// `θ ← θ − lr·∇θ`, elementwise.
pub fn sgd_step(params: &ParamSet, grads: &ParamSet, lr: f64) -> Result<ParamSet> {
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(invalid!("learning rate must be a finite non-negative number, got {lr}"));
    }
    params.zip_with(grads, |p, g| p - lr * g)
}

/// SGD with optional heavy-ball momentum: `v ← μ·v + g`, `θ ← θ − lr·v`.
#[derive(Debug, Clone)]
pub struct Sgd {
    lr: f64,
    momentum: f64,
    velocity: Option<ParamSet>,
}

impl Sgd {
    pub fn new(lr: f64, momentum: f64) -> Result<Self> {
        if !(lr >= 0.0 && lr.is_finite()) {
            return Err(invalid!("learning rate must be finite and non-negative, got {lr}"));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(invalid!("momentum must lie in [0, 1), got {momentum}"));
        }
        Ok(Self {
            lr,
            momentum,
            velocity: None,
        })
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.lr = lr;
    }

    pub fn step(&mut self, params: &ParamSet, grads: &ParamSet) -> Result<ParamSet> {
        if self.momentum == 0.0 {
            return sgd_step(params, grads, self.lr);
        }
        let v = match self.velocity.take() {
            Some(v) => {
                let mu = self.momentum;
                v.zip_with(grads, |v, g| mu * v + g)?
            }
            None => {
                params.ensure_congruent(grads, "gradient")?;
                grads.clone()
            }
        };
        let next = sgd_step(params, &v, self.lr)?;
        self.velocity = Some(v);
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::params::{LayerKind, ParamLayer};
    use crate::tensor::Tensor;

    fn scalar(v: f64) -> ParamSet {
        ParamSet::new(vec![ParamLayer::new(
            LayerKind::Dense,
            vec![Tensor::from_vec(vec![v])],
        )])
    }

    #[test]
    fn hand_step() {
        let out = sgd_step(&scalar(1.0), &scalar(2.0), 0.5).unwrap();
        assert_eq!(out, scalar(0.0));
    }

    #[test]
    fn zero_lr_is_identity() {
        let p = scalar(0.123456789);
        assert_eq!(sgd_step(&p, &scalar(-7.0), 0.0).unwrap(), p);
        let mut opt = Sgd::new(0.0, 0.9).unwrap();
        let q = opt.step(&p, &scalar(3.0)).unwrap();
        assert_eq!(opt.step(&q, &scalar(3.0)).unwrap(), p);
    }

    #[test]
    fn converges_on_quadratic() {
        // f(θ) = ½ Σ h_k (θ_k − m_k)², minimum at m.
        let h = [1.0, 3.0, 0.5];
        let m = [0.7, -2.0, 4.0];
        let mut p = ParamSet::new(vec![ParamLayer::new(
            LayerKind::Dense,
            vec![Tensor::from_vec(vec![0.0; 3])],
        )]);
        for _ in 0..2000 {
            let cur = p.flatten();
            let g: Vec<f64> = (0..3).map(|k| h[k] * (cur[k] - m[k])).collect();
            let grads = p.with_values(&g).unwrap();
            p = sgd_step(&p, &grads, 0.3).unwrap();
        }
        for (v, t) in p.flatten().iter().zip(m) {
            assert!((v - t).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_negative_lr() {
        assert!(sgd_step(&scalar(1.0), &scalar(1.0), -0.1).is_err());
        assert!(Sgd::new(0.1, 1.5).is_err());
    }
}
