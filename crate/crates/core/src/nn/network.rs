use super::dense::{cross_entropy, softmax};
use super::dropout::Dropout;
use super::params::{collect, zeros_like, ParamSet};
use crate::error::{Error, Result};
use crate::scalar::{axpy, Real};

/// A classifier whose parameters can be trained by [`batch_loss_and_gradient`].
pub trait Network<T: Real>: ParamSet<T> + Clone {
    type Input;

    fn num_classes(&self) -> usize;

    /// Pre-softmax scores in inference mode.
    fn logits(&self, x: &Self::Input) -> Result<Vec<T>>;

    /// Forward and backward for one example. Accumulates
    /// `weight · ∂(−ln p[label])/∂θ` into `grad` and returns the unweighted
    /// data loss together with the class probabilities.
    fn backprop(&self, x: &Self::Input, label: usize, weight: T, dropout: &mut Dropout, grad: &mut Self) -> Result<(T, Vec<T>)>;

    fn predict(&self, x: &Self::Input) -> Result<Vec<T>> {
        Ok(softmax(&self.logits(x)?))
    }

    fn loss(&self, x: &Self::Input, label: usize) -> Result<T> {
        check_label(label, self.num_classes())?;
        Ok(cross_entropy(&self.logits(x)?, label))
    }
}

pub(crate) fn check_label(label: usize, classes: usize) -> Result<()> {
    if label >= classes {
        return Err(Error::InvalidInput(format!("label {label} outside {classes} classes")));
    }
    Ok(())
}

/// Mean cross-entropy over `batch` plus `l2_beta · Σ‖W‖²`, and its gradient.
pub fn batch_loss_and_gradient<T: Real, M: Network<T>>(model: &M, batch: &[(&M::Input, usize)], l2_beta: T, dropout: &mut Dropout) -> Result<(T, M)> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let mut grad = zeros_like(model);
    let w = T::one() / T::lit(batch.len() as f64);
    let mut data = T::zero();
    for (x, y) in batch {
        data += model.backprop(x, *y, w, dropout, &mut grad)?.0;
    }
    let params = collect(model);
    let mut l2 = T::zero();
    let mut i = 0;
    grad.visit_mut("", &mut |_, r, g| {
        if r.regularized() {
            let p = params[i].2;
            l2 += p.sum_squares();
            axpy(T::lit(2.0) * l2_beta, p.as_slice(), g.as_mut_slice());
        }
        i += 1;
    });
    Ok((data * w + l2_beta * l2, grad))
}

/// Mean cross-entropy plus the L2 term, inference mode.
pub fn batch_loss<T: Real, M: Network<T>>(model: &M, batch: &[(&M::Input, usize)], l2_beta: T) -> Result<T> {
    let mut data = T::zero();
    for (x, y) in batch {
        data += model.loss(x, *y)?;
    }
    Ok(data / T::lit(batch.len() as f64) + l2_beta * super::params::l2_penalty(model))
}
