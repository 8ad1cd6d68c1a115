use super::params::{join, ParamSet, Role};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::{axpy, dot, Real};

/// Fully connected layer `y = W x + b`, `W` is `out × in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    pub w: Tensor<T>,
    pub b: Tensor<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            w: Tensor::zeros(&[outputs, inputs]),
            b: Tensor::zeros(&[outputs]),
        }
    }

    pub fn xavier(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        Dense {
            w: super::init::xavier_uniform(&[outputs, inputs], inputs, outputs, rng),
            b: Tensor::zeros(&[outputs]),
        }
    }

    pub fn inputs(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.inputs() {
            return Err(Error::Shape(format!("dense expects {} inputs, got {}", self.inputs(), x.len())));
        }
        Ok((0..self.outputs()).map(|r| dot(self.w.row(r), x) + self.b.as_slice()[r]).collect())
    }

    /// Accumulates parameter gradients into `grad`; returns `∂L/∂x`.
    pub fn backward(&self, x: &[T], dy: &[T], grad: &mut Dense<T>) -> Vec<T> {
        let mut dx = vec![T::zero(); self.inputs()];
        for (r, &d) in dy.iter().enumerate() {
            if d == T::zero() {
                continue;
            }
            axpy(d, x, grad.w.row_mut(r));
            grad.b.as_mut_slice()[r] += d;
            axpy(d, self.w.row(r), &mut dx);
        }
        dx
    }
}

impl<T: Real> ParamSet<T> for Dense<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(&str, Role, &'a Tensor<T>)) {
        f(&join(prefix, "w"), Role::Weight, &self.w);
        f(&join(prefix, "b"), Role::Bias, &self.b);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, Role, &mut Tensor<T>)) {
        f(&join(prefix, "w"), Role::Weight, &mut self.w);
        f(&join(prefix, "b"), Role::Bias, &mut self.b);
    }
}

/// Softmax with max subtraction.
pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = logits.iter().map(|z| (*z - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `−ln p[label]` computed from logits via log-sum-exp.
pub fn cross_entropy<T: Real>(logits: &[T], label: usize) -> T {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = m + logits.iter().map(|z| (*z - m).exp()).sum::<T>().ln();
    lse - logits[label]
}

/// Dense layer, softmax and data loss for one example: `(probs, −ln p[label])`.
pub fn dense_softmax_xent<T: Real>(x: &[T], layer: &Dense<T>, label: usize) -> Result<(Vec<T>, T)> {
    if label >= layer.outputs() {
        return Err(Error::InvalidInput(format!("label {label} outside {} classes", layer.outputs())));
    }
    let logits = layer.forward(x)?;
    Ok((softmax(&logits), cross_entropy(&logits, label)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_layer_gives_uniform_probs() {
        let d = Dense::<f64>::zeros(7, 51);
        let (p, loss) = dense_softmax_xent(&[0.3; 7], &d, 4).unwrap();
        assert!(p.iter().all(|v| (*v - 1.0 / 51.0).abs() < 1e-15));
        assert!((loss - 51f64.ln()).abs() < 1e-12);
        assert!((loss - 3.9318).abs() < 1e-4);
    }

    #[test]
    fn extreme_logits_do_not_overflow() {
        let p = softmax(&[1000.0f64, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
        assert!(cross_entropy(&[1000.0f64, 0.0], 0).abs() < 1e-12);
        assert!((cross_entropy(&[1000.0f64, 0.0], 1) - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn label_out_of_range_is_rejected() {
        let d = Dense::<f64>::zeros(2, 3);
        assert!(dense_softmax_xent(&[0.0, 0.0], &d, 3).is_err());
    }

    proptest! {
        #[test]
        fn softmax_is_a_simplex_point(logits in proptest::collection::vec(-50.0f64..50.0, 1..60)) {
            let p = softmax(&logits);
            prop_assert!(p.iter().all(|v| *v >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
