//! Adaptive-moment optimizer and global-norm gradient clipping.

use super::matrix::{real, Real};
use super::params::{ModelDims, ModelParams};
use super::NeuralError;

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment accumulators shaped like the parameters.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    cfg: AdamConfig,
    m: ModelParams<T>,
    v: ModelParams<T>,
    step: u32,
}

impl<T: Real> Adam<T> {
    pub fn new(dims: ModelDims) -> Self {
        Adam {
            cfg: AdamConfig::default(),
            m: ModelParams::zeros(dims),
            v: ModelParams::zeros(dims),
            step: 0,
        }
    }

    pub fn step(&mut self, params: &mut ModelParams<T>, grads: &ModelParams<T>, lr: f64) {
        self.step += 1;
        let b1 = real::<T>(self.cfg.beta1);
        let b2 = real::<T>(self.cfg.beta2);
        let eps = real::<T>(self.cfg.eps);
        let lr = real::<T>(lr);
        let bias1 = real::<T>(1.0 - self.cfg.beta1.powi(self.step as i32));
        let bias2 = real::<T>(1.0 - self.cfg.beta2.powi(self.step as i32));
        let one = T::one();

        let mut p_tensors = params.tensors_mut();
        let g_tensors = grads.tensors();
        let mut m_tensors = self.m.tensors_mut();
        let mut v_tensors = self.v.tensors_mut();
        for idx in 0..p_tensors.len() {
            let p = &mut p_tensors[idx].1;
            let g = g_tensors[idx].2;
            let m = &mut m_tensors[idx].1;
            let v = &mut v_tensors[idx].1;
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (one - b1) * g[k];
                v[k] = b2 * v[k] + (one - b2) * g[k] * g[k];
                let m_hat = m[k] / bias1;
                let v_hat = v[k] / bias2;
                p[k] = p[k] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Scale gradients so their global L2 norm does not exceed `max_norm`.
/// Returns the pre-clip norm; fails on any non-finite gradient.
pub fn clip_global_norm<T: Real>(
    grads: &mut ModelParams<T>,
    max_norm: f64,
) -> Result<f64, NeuralError> {
    let mut sq = 0.0f64;
    for (name, _, data) in grads.tensors() {
        for &g in data {
            let g = g.to_f64().unwrap_or(f64::NAN);
            if !g.is_finite() {
                return Err(NeuralError::NonFiniteGradient(name));
            }
            sq += g * g;
        }
    }
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = real::<T>(max_norm / norm);
        for (_, data) in grads.tensors_mut() {
            for g in data {
                *g = *g * scale;
            }
        }
    }
    Ok(norm)
}
