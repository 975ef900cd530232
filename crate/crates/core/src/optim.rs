//! First-order optimizers with global gradient-norm clipping.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::tensor::{Grads, Tensor, TensorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global L2 norm above which gradients are rescaled.
    pub clip_norm: Option<f64>,
}

impl OptimizerConfig {
    pub fn adam(learning_rate: f64) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adam,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: Some(5.0),
        }
    }

    pub fn sgd(learning_rate: f64) -> Self {
        OptimizerConfig { kind: OptimizerKind::Sgd, ..Self::adam(learning_rate) }
    }
}

/// Rescales `grads` in place so their global norm is at most `max`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut Grads, max: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max {
        grads.scale(max / norm);
    }
    norm
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    pub config: OptimizerConfig,
    pub steps: u64,
    /// First and second moment estimates (Adam only).
    pub moments: Vec<(Tensor, Tensor)>,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig, params: &[Tensor]) -> Self {
        let moments = match config.kind {
            OptimizerKind::Adam => params
                .iter()
                .map(|p| {
                    let z = Tensor::new(p.shape().into(), alloc::vec![0.0; p.len()]).unwrap();
                    (z.clone(), z)
                })
                .collect(),
            OptimizerKind::Sgd => Vec::new(),
        };
        Optimizer { config, steps: 0, moments }
    }

    /// Restores saved state, checking it against the parameter shapes.
    pub fn restore(
        config: OptimizerConfig,
        steps: u64,
        moments: Vec<(Tensor, Tensor)>,
        params: &[Tensor],
    ) -> Result<Self, TensorError> {
        let expected = if config.kind == OptimizerKind::Adam { params.len() } else { 0 };
        if moments.len() != expected {
            return Err(TensorError::Invalid {
                op: "optimizer_restore",
                reason: format!("{} moment pairs for {} parameters", moments.len(), expected),
            });
        }
        for ((m, v), p) in moments.iter().zip(params) {
            if m.shape() != p.shape() || v.shape() != p.shape() {
                return Err(TensorError::Shape { op: "optimizer_restore", left: m.shape().into(), right: p.shape().into() });
            }
        }
        Ok(Optimizer { config, steps, moments })
    }

    /// Applies one update. Returns the gradient norm before clipping.
    pub fn step(&mut self, params: &mut [Tensor], grads: &mut Grads) -> f64 {
        let norm = match self.config.clip_norm {
            Some(max) => clip_global_norm(grads, max),
            None => grads.global_norm(),
        };
        self.steps += 1;
        let lr = self.config.learning_rate;
        match self.config.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(&grads.tensors) {
                    if let Some(g) = g {
                        for (x, d) in p.data_mut().iter_mut().zip(g.data()) {
                            *x -= lr * d;
                        }
                    }
                }
            }
            OptimizerKind::Adam => {
                let (b1, b2, eps) = (self.config.beta1, self.config.beta2, self.config.epsilon);
                let t = self.steps as i32;
                let c1 = 1.0 - libm::pow(b1, t as f64);
                let c2 = 1.0 - libm::pow(b2, t as f64);
                for ((p, g), (m, v)) in params.iter_mut().zip(&grads.tensors).zip(&mut self.moments) {
                    // Unused parameters see a zero gradient: moments decay, the
                    // step keeps its momentum.
                    let g = g.as_ref().map(Tensor::data);
                    for i in 0..p.len() {
                        let d = g.map_or(0.0, |g| g[i]);
                        let mi = &mut m.data_mut()[i];
                        *mi = b1 * *mi + (1.0 - b1) * d;
                        let mi = *mi;
                        let vi = &mut v.data_mut()[i];
                        *vi = b2 * *vi + (1.0 - b2) * d * d;
                        let vi = *vi;
                        p.data_mut()[i] -= lr * (mi / c1) / (libm::sqrt(vi / c2) + eps);
                    }
                }
            }
        }
        norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grads(values: Vec<f64>) -> Grads {
        Grads { tensors: vec![Some(Tensor::row(values))] }
    }

    #[test]
    fn sgd_is_plain_descent() {
        let mut params = vec![Tensor::row(vec![1.0, 2.0])];
        let mut opt = Optimizer::new(OptimizerConfig::sgd(0.01), &params);
        opt.step(&mut params, &mut grads(vec![3.0, -4.0]));
        assert_eq!(params[0].data(), &[1.0 - 0.03, 2.0 + 0.04]);
    }

    #[test]
    fn clipping_caps_the_norm() {
        let mut g = grads(vec![30.0, 40.0]);
        assert_eq!(clip_global_norm(&mut g, 5.0), 50.0);
        assert!((g.global_norm() - 5.0).abs() < 1e-12);
        let mut small = grads(vec![0.3, 0.4]);
        clip_global_norm(&mut small, 5.0);
        assert_eq!(small.tensors[0].as_ref().unwrap().data(), &[0.3, 0.4]);
    }

    #[test]
    fn adam_first_step_is_learning_rate_sized() {
        let mut params = vec![Tensor::row(vec![0.0, 0.0])];
        let mut opt = Optimizer::new(OptimizerConfig::adam(1e-3), &params);
        opt.step(&mut params, &mut grads(vec![0.5, -2.0]));
        assert!((params[0].data()[0] + 1e-3).abs() < 1e-9);
        assert!((params[0].data()[1] - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn adam_minimizes_a_quadratic() {
        let mut params = vec![Tensor::row(vec![3.0, -2.0])];
        let mut opt = Optimizer::new(OptimizerConfig::adam(0.05), &params);
        for _ in 0..2000 {
            let g: Vec<f64> = params[0].data().iter().map(|x| 2.0 * (x - 1.0)).collect();
            opt.step(&mut params, &mut grads(g));
        }
        for &x in params[0].data() {
            assert!((x - 1.0).abs() < 1e-3, "{x}");
        }
    }

    #[test]
    fn restore_checks_shapes() {
        let params = vec![Tensor::row(vec![0.0, 0.0])];
        let opt = Optimizer::new(OptimizerConfig::adam(1e-3), &params);
        assert!(Optimizer::restore(opt.config.clone(), 4, opt.moments.clone(), &params).is_ok());
        assert!(Optimizer::restore(opt.config.clone(), 4, Vec::new(), &params).is_err());
    }
}
