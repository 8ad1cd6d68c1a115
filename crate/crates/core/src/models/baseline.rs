use crate::error::{Error, Result};
use crate::nn::{dense_softmax_xent, join, Dense, Dropout, Network, ParamSet, Role, Tensor};
use crate::rng::Rng;
use crate::scalar::Real;

/// Multinomial logistic regression on standardized feature vectors.
///
/// Standardization statistics are stored as non-trainable buffers so they
/// travel with checkpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineModel<T> {
    pub mean: Tensor<T>,
    pub std: Tensor<T>,
    pub dense: Dense<T>,
}

impl<T: Real> BaselineModel<T> {
    /// Fits standardization on `features`; a zero-variance column gets σ = 1.
    pub fn new(features: &[Vec<T>], classes: usize, rng: &mut Rng) -> Result<Self> {
        let first = features.first().ok_or_else(|| Error::InvalidInput("no training features".into()))?;
        let d = first.len();
        if features.iter().any(|f| f.len() != d) {
            return Err(Error::Shape("feature vectors differ in length".into()));
        }
        let n = T::lit(features.len() as f64);
        let mean: Vec<T> = (0..d).map(|i| features.iter().map(|f| f[i]).sum::<T>() / n).collect();
        let std: Vec<T> = (0..d)
            .map(|i| {
                let v = features.iter().map(|f| (f[i] - mean[i]).powi(2)).sum::<T>() / n;
                if v.sqrt() > T::lit(1e-12) {
                    v.sqrt()
                } else {
                    T::one()
                }
            })
            .collect();
        Ok(BaselineModel {
            mean: Tensor::from_vec(&[d], mean)?,
            std: Tensor::from_vec(&[d], std)?,
            dense: Dense::xavier(d, classes, rng),
        })
    }

    pub fn standardize(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.mean.len() {
            return Err(Error::Shape(format!("baseline expects {} features, got {}", self.mean.len(), x.len())));
        }
        Ok(x.iter()
            .zip(self.mean.as_slice())
            .zip(self.std.as_slice())
            .map(|((v, m), s)| (*v - *m) / *s)
            .collect())
    }
}

pub fn baseline_predict<T: Real>(m: &BaselineModel<T>, features: &[T]) -> Result<Vec<T>> {
    m.predict(&features.to_vec())
}

impl<T: Real> ParamSet<T> for BaselineModel<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(&str, Role, &'a Tensor<T>)) {
        f(&join(prefix, "mean"), Role::Buffer, &self.mean);
        f(&join(prefix, "std"), Role::Buffer, &self.std);
        self.dense.visit(&join(prefix, "dense"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, Role, &mut Tensor<T>)) {
        f(&join(prefix, "mean"), Role::Buffer, &mut self.mean);
        f(&join(prefix, "std"), Role::Buffer, &mut self.std);
        self.dense.visit_mut(&join(prefix, "dense"), f);
    }
}

impl<T: Real> Network<T> for BaselineModel<T> {
    type Input = Vec<T>;

    fn num_classes(&self) -> usize {
        self.dense.outputs()
    }

    fn logits(&self, x: &Vec<T>) -> Result<Vec<T>> {
        self.dense.forward(&self.standardize(x)?)
    }

    fn backprop(&self, x: &Vec<T>, label: usize, weight: T, _dropout: &mut Dropout, grad: &mut Self) -> Result<(T, Vec<T>)> {
        let z = self.standardize(x)?;
        let (p, loss) = dense_softmax_xent(&z, &self.dense, label)?;
        let dz: Vec<T> = p
            .iter()
            .enumerate()
            .map(|(c, v)| weight * (*v - if c == label { T::one() } else { T::zero() }))
            .collect();
        self.dense.backward(&z, &dz, &mut grad.dense);
        Ok((loss, p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::finite_diff_gradcheck;
    use crate::rng::substream;
    use rand::Rng as _;

    #[test]
    fn standardization_and_zero_variance() {
        let feats = vec![vec![1.0, 5.0, 2.0], vec![3.0, 5.0, 4.0], vec![5.0, 5.0, 9.0]];
        let m = BaselineModel::<f64>::new(&feats, 2, &mut substream(0, "b")).unwrap();
        assert_eq!(m.std.as_slice()[1], 1.0);
        let z: Vec<Vec<f64>> = feats.iter().map(|f| m.standardize(f).unwrap()).collect();
        for i in 0..3 {
            let mean = z.iter().map(|r| r[i]).sum::<f64>() / 3.0;
            assert!(mean.abs() < 1e-12);
            let var = z.iter().map(|r| r[i] * r[i]).sum::<f64>() / 3.0;
            if i != 1 {
                assert!((var - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradients_check_out() {
        let mut rng = substream(1, "b");
        let feats: Vec<Vec<f64>> = (0..6).map(|_| (0..10).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let m = BaselineModel::new(&feats, 3, &mut rng).unwrap();
        let batch: Vec<_> = feats.iter().zip([0, 1, 2, 0, 1, 2]).collect();
        let r = finite_diff_gradcheck(&m, &batch, 0.008, 1e-5, 0).unwrap();
        assert!(r.max_rel_error < 1e-4, "{r:?}");
    }
}
