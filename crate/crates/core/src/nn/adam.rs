use serde::{Deserialize, Serialize};

use super::params::{collect, ParamSet};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
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

/// First and second moment accumulators, aligned with the model's tensors.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub m: Vec<Tensor<T>>,
    pub v: Vec<Tensor<T>>,
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new<M: ParamSet<T>>(model: &M) -> Self {
        let mut m = Vec::new();
        model.visit("", &mut |_, _, t| m.push(Tensor::zeros(t.shape())));
        AdamState {
            v: m.clone(),
            m,
            t: 0,
        }
    }
}

/// One bias-corrected Adam update. Fails without touching `params` if any
/// gradient entry is non-finite.
pub fn adam_step<T: Real, M: ParamSet<T>>(
    params: &mut M,
    grads: &M,
    st: &mut AdamState<T>,
    lr: T,
    cfg: &AdamConfig,
) -> Result<()> {
    let g = collect(grads);
    if let Some((name, _, _)) = g.iter().find(|(_, r, t)| r.trainable() && !t.is_finite()) {
        return Err(Error::NonFiniteGradient(name.clone()));
    }
    st.t += 1;
    let (b1, b2, eps) = (T::lit(cfg.beta1), T::lit(cfg.beta2), T::lit(cfg.eps));
    let c1 = T::one() - b1.powi(st.t as i32);
    let c2 = T::one() - b2.powi(st.t as i32);
    let mut i = 0;
    params.visit_mut("", &mut |_, role, p| {
        if role.trainable() {
            let (m, v) = (st.m[i].as_mut_slice(), st.v[i].as_mut_slice());
            for (((w, gi), mi), vi) in p.as_mut_slice().iter_mut().zip(g[i].2.as_slice()).zip(m).zip(v) {
                *mi = b1 * *mi + (T::one() - b1) * *gi;
                *vi = b2 * *vi + (T::one() - b2) * *gi * *gi;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *w -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        i += 1;
    });
    Ok(())
}
