use super::tensor::Tensor;
use crate::scalar::Real;

/// How the optimizer and the regularizer treat a parameter tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// Dense or recurrent weight matrix; L2-regularized.
    Weight,
    /// Convolution kernel; trained, not regularized.
    Kernel,
    Bias,
    /// Fixed statistics stored with the model; never trained.
    Buffer,
}

impl Role {
    pub fn regularized(self) -> bool {
        matches!(self, Role::Weight)
    }

    pub fn trainable(self) -> bool {
        !matches!(self, Role::Buffer)
    }
}

/// A model or layer exposing its named tensors in a fixed order.
///
/// Gradients are represented by a value of the same type, so `visit` on a
/// model and on its gradient yields aligned sequences.
pub trait ParamSet<T: Real> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(&str, Role, &'a Tensor<T>));
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, Role, &mut Tensor<T>));
}

/// `prefix.name`, or `name` at the root.
pub fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

pub(crate) fn collect<T: Real, M: ParamSet<T>>(m: &M) -> Vec<(String, Role, &Tensor<T>)> {
    let mut out = Vec::new();
    m.visit("", &mut |n, r, t| out.push((n.to_string(), r, t)));
    out
}

pub fn param_count<T: Real, M: ParamSet<T>>(m: &M) -> usize {
    let mut n = 0;
    m.visit("", &mut |_, r, t| {
        if r.trainable() {
            n += t.len()
        }
    });
    n
}

pub fn zeros_like<T: Real, M: ParamSet<T> + Clone>(m: &M) -> M {
    let mut g = m.clone();
    g.visit_mut("", &mut |_, _, t| t.fill(T::zero()));
    g
}

/// `dst += alpha * src` over trainable tensors.
pub fn add_scaled<T: Real, M: ParamSet<T>>(dst: &mut M, src: &M, alpha: T) {
    let src = collect(src);
    let mut i = 0;
    dst.visit_mut("", &mut |_, r, t| {
        if r.trainable() {
            crate::scalar::axpy(alpha, src[i].2.as_slice(), t.as_mut_slice());
        }
        i += 1;
    });
}

/// `Σ ‖W‖²` over regularized tensors.
pub fn l2_penalty<T: Real, M: ParamSet<T>>(m: &M) -> T {
    let mut s = T::zero();
    m.visit("", &mut |_, r, t| {
        if r.regularized() {
            s += t.sum_squares();
        }
    });
    s
}

/// Rescales trainable gradients so their global L2 norm is at most `max_norm`.
pub fn clip_global_norm<T: Real, M: ParamSet<T>>(g: &mut M, max_norm: T) -> T {
    let mut sq = T::zero();
    g.visit("", &mut |_, r, t| {
        if r.trainable() {
            sq += t.sum_squares();
        }
    });
    let norm = sq.sqrt();
    if norm > max_norm && norm > T::zero() {
        let s = max_norm / norm;
        g.visit_mut("", &mut |_, r, t| {
            if r.trainable() {
                t.as_mut_slice().iter_mut().for_each(|v| *v *= s);
            }
        });
    }
    norm
}
