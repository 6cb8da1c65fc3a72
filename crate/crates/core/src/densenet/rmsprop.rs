//! Uncentered RMSprop without momentum.

use serde::{Deserialize, Serialize};

use super::net::TensorPair;

/// Per-tensor squared-gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    acc: Vec<TensorPair>,
}

/// Hyperparameters; `lr` follows the experiment protocol, `rho`/`eps` the
/// common convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RmsPropConfig {
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            rho: 0.9,
            eps: 1e-8,
        }
    }
}

impl RmsProp {
    pub fn new(shapes: &[TensorPair], config: RmsPropConfig) -> Self {
        let acc = shapes
            .iter()
            .map(|t| TensorPair {
                w: ndarray::Array2::zeros(t.w.raw_dim()),
                b: ndarray::Array1::zeros(t.b.raw_dim()),
            })
            .collect();
        Self {
            lr: config.lr,
            rho: config.rho,
            eps: config.eps,
            acc,
        }
    }

    /// `acc <- rho*acc + (1-rho)*g^2; p <- p - lr*g/(sqrt(acc)+eps)`,
    /// tensor `slot` of this optimizer's state.
    pub fn step(&mut self, slot: usize, params: &mut TensorPair, grads: &TensorPair) {
        let acc = &mut self.acc[slot];
        let (lr, rho, eps) = (self.lr, self.rho, self.eps);
        azip(&mut params.w, &mut acc.w, &grads.w, lr, rho, eps);
        azip_1d(&mut params.b, &mut acc.b, &grads.b, lr, rho, eps);
    }

    pub fn accumulator(&self, slot: usize) -> &TensorPair {
        &self.acc[slot]
    }

    pub(crate) fn accumulator_mut(&mut self, slot: usize) -> &mut TensorPair {
        &mut self.acc[slot]
    }
}

fn azip(
    p: &mut ndarray::Array2<f64>,
    acc: &mut ndarray::Array2<f64>,
    g: &ndarray::Array2<f64>,
    lr: f64,
    rho: f64,
    eps: f64,
) {
    ndarray::Zip::from(p).and(acc).and(g).for_each(|p, a, g| {
        *a = rho * *a + (1.0 - rho) * g * g;
        *p -= lr * g / (a.sqrt() + eps);
    });
}

fn azip_1d(
    p: &mut ndarray::Array1<f64>,
    acc: &mut ndarray::Array1<f64>,
    g: &ndarray::Array1<f64>,
    lr: f64,
    rho: f64,
    eps: f64,
) {
    ndarray::Zip::from(p).and(acc).and(g).for_each(|p, a, g| {
        *a = rho * *a + (1.0 - rho) * g * g;
        *p -= lr * g / (a.sqrt() + eps);
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2};

    fn one_cell() -> TensorPair {
        TensorPair {
            w: arr2(&[[0.0]]),
            b: arr1(&[]),
        }
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut params = one_cell();
        params.w[[0, 0]] = 1.5;
        let grads = one_cell();
        let mut opt = RmsProp::new(std::slice::from_ref(&params), RmsPropConfig::default());
        opt.step(0, &mut params, &grads);
        assert_eq!(params.w[[0, 0]], 1.5);
    }

    #[test]
    fn first_step_hand_arithmetic() {
        let mut params = one_cell();
        let mut grads = one_cell();
        grads.w[[0, 0]] = 1.0;
        let mut opt = RmsProp::new(std::slice::from_ref(&params), RmsPropConfig::default());
        opt.step(0, &mut params, &grads);
        // acc = 0.1; delta = -0.001 / (sqrt(0.1) + 1e-8).
        assert!((opt.accumulator(0).w[[0, 0]] - 0.1).abs() < 1e-15);
        let expected = -0.001 / (0.1f64.sqrt() + 1e-8);
        assert!((params.w[[0, 0]] - expected).abs() < 1e-15);
    }

    #[test]
    fn constant_gradient_step_approaches_lr() {
        let mut params = one_cell();
        let mut grads = one_cell();
        grads.w[[0, 0]] = 3.0;
        let mut opt = RmsProp::new(std::slice::from_ref(&params), RmsPropConfig::default());
        let mut prev = params.w[[0, 0]];
        let mut delta = 0.0;
        for _ in 0..400 {
            opt.step(0, &mut params, &grads);
            delta = prev - params.w[[0, 0]];
            prev = params.w[[0, 0]];
        }
        // As acc -> g^2 the step magnitude approaches lr.
        assert!((delta - 0.001).abs() < 1e-6, "step {delta}");
    }

    #[test]
    fn accumulator_stays_non_negative() {
        let mut params = one_cell();
        let mut grads = one_cell();
        let mut opt = RmsProp::new(std::slice::from_ref(&params), RmsPropConfig::default());
        for g in [-5.0, 2.0, -0.1, 0.0, 7.5] {
            grads.w[[0, 0]] = g;
            opt.step(0, &mut params, &grads);
            assert!(opt.accumulator(0).w[[0, 0]] >= 0.0);
        }
    }
}
