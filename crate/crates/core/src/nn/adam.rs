use serde::{Deserialize, Serialize};

use super::Param;
use crate::error::{Error, Result};

/// Adam hyperparameters plus the shared step counter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
        }
    }
}

impl AdamHyper {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let beta_ok = |b: f64| (0.0..1.0).contains(&b);
        if !(self.lr > 0.0 && beta_ok(self.beta1) && beta_ok(self.beta2) && self.eps > 0.0) {
            return Err(Error::config(format!(
                "invalid Adam hyperparameters {self:?}"
            )));
        }
        Ok(())
    }
}

/// One bias-corrected Adam update over every parameter; increments `t`.
pub fn adam_step<'a>(params: impl IntoIterator<Item = &'a mut Param>, hyper: &mut AdamHyper) {
    hyper.t += 1;
    let t = hyper.t as i32;
    let (b1, b2) = (hyper.beta1, hyper.beta2);
    let correction1 = 1.0 - b1.powi(t);
    let correction2 = 1.0 - b2.powi(t);
    for p in params {
        let value = p.value.data_mut();
        let grad = p.grad.data();
        let m = p.adam_m.data_mut();
        let v = p.adam_v.data_mut();
        for k in 0..value.len() {
            let g = grad[k];
            m[k] = b1 * m[k] + (1.0 - b1) * g;
            v[k] = b2 * v[k] + (1.0 - b2) * g * g;
            let m_hat = m[k] / correction1;
            let v_hat = v[k] / correction2;
            value[k] -= hyper.lr * m_hat / (v_hat.sqrt() + hyper.eps);
        }
    }
}

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm<'a>(params: impl IntoIterator<Item = &'a mut Param>, max_norm: f64) -> f64 {
    let mut params: Vec<&mut Param> = params.into_iter().collect();
    let norm = params.iter().map(|p| p.grad.norm_sq()).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let k = max_norm / norm;
        for p in params.iter_mut() {
            p.grad.scale(k);
        }
    }
    norm
}
