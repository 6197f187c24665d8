use serde::{Deserialize, Serialize};

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Adam hyperparameters (defaults from Kingma & Ba).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("lr", format!("must be positive, got {}", self.lr)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::invalid(name, format!("must lie in (0, 1), got {b}")));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::invalid("eps", format!("must be positive, got {}", self.eps)));
        }
        Ok(())
    }
}

/// First/second moment estimates for a fixed list of parameter buffers.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step_count: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig, sizes: impl IntoIterator<Item = usize>) -> Result<Self> {
        config.validate()?;
        let (m, v): (Vec<_>, Vec<_>) = sizes
            .into_iter()
            .map(|n| (vec![T::zero(); n], vec![T::zero(); n]))
            .unzip();
        Ok(AdamState {
            config,
            step_count: 0,
            m,
            v,
        })
    }

    pub fn for_tensors(config: AdamConfig, tensors: &[Tensor<T>]) -> Result<Self> {
        Self::new(config, tensors.iter().map(Tensor::len))
    }

    /// One update of every tensor from its gradient slot.
    pub fn update(&mut self, tensors: &mut [Tensor<T>]) -> Result<()> {
        let mut params = Vec::with_capacity(tensors.len());
        let mut grads = Vec::with_capacity(tensors.len());
        for (i, t) in tensors.iter_mut().enumerate() {
            let (p, g) = t.split_mut();
            let g = g.ok_or_else(|| Error::Shape(format!("parameter {i} has no gradient")))?;
            params.push(p);
            grads.push(g);
        }
        adam_step(&mut params, &grads, self)
    }
}

/// Bias-corrected Adam update. Parameters are untouched if any gradient is
/// non-finite or any shape disagrees.
pub fn adam_step<T: Scalar>(
    params: &mut [&mut [T]],
    grads: &[&[T]],
    state: &mut AdamState<T>,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Shape(format!(
            "adam: {} parameter buffers, {} gradients, {} moment buffers",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (i, ((p, g), m)) in params.iter().zip(grads).zip(&state.m).enumerate() {
        if p.len() != g.len() || p.len() != m.len() {
            return Err(Error::Shape(format!(
                "adam: buffer {i} has {} values, {} gradients, {} moments",
                p.len(),
                g.len(),
                m.len()
            )));
        }
        if let Some(j) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient {i} at flat index {j}")));
        }
    }
    state.step_count += 1;
    let c = state.config;
    let t = state.step_count as i32;
    let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
    let (one_b1, one_b2) = (T::of(1.0 - c.beta1), T::of(1.0 - c.beta2));
    let bc1 = T::of(1.0 - c.beta1.powi(t));
    let bc2 = T::of(1.0 - c.beta2.powi(t));
    let (lr, eps) = (T::of(c.lr), T::of(c.eps));
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        for (((p, &g), m), v) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = b1 * *m + one_b1 * g;
            *v = b2 * *v + one_b2 * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
