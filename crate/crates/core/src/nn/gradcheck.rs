use rand::seq::index::sample;

use super::dropout::Dropout;
use super::network::{batch_loss, batch_loss_and_gradient, Network};
use super::params::{collect, ParamSet};
use crate::error::Result;

/// Coordinates checked per tensor by [`finite_diff_gradcheck`].
pub const SAMPLES_PER_TENSOR: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `name[index]` of the worst coordinate.
    pub worst: String,
    pub checked: usize,
}

fn perturb<M: ParamSet<f64>>(m: &mut M, tensor: usize, coord: usize, delta: f64) {
    let mut i = 0;
    m.visit_mut("", &mut |_, _, t| {
        if i == tensor {
            t.as_mut_slice()[coord] += delta;
        }
        i += 1;
    });
}

/// Compares `analytic` against central differences of `loss` on up to
/// `per_tensor` randomly chosen coordinates of every trainable tensor.
/// Relative error is `|a − n| / max(1e-8, |a| + |n|)`.
pub fn check_gradient<M: ParamSet<f64> + Clone>(
    model: &M,
    analytic: &M,
    mut loss: impl FnMut(&M) -> Result<f64>,
    eps: f64,
    per_tensor: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let mut rng = crate::rng::substream(seed, "gradcheck");
    let grads = collect(analytic);
    let mut probe = model.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: String::new(),
        checked: 0,
    };
    for (ti, (name, role, g)) in grads.iter().enumerate() {
        if !role.trainable() || g.is_empty() {
            continue;
        }
        let coords: Vec<usize> = if g.len() <= per_tensor {
            (0..g.len()).collect()
        } else {
            sample(&mut rng, g.len(), per_tensor).into_vec()
        };
        for c in coords {
            perturb(&mut probe, ti, c, eps);
            let up = loss(&probe)?;
            perturb(&mut probe, ti, c, -2.0 * eps);
            let down = loss(&probe)?;
            perturb(&mut probe, ti, c, eps);
            let numeric = (up - down) / (2.0 * eps);
            let a = g.as_slice()[c];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            report.checked += 1;
            if rel > report.max_rel_error || report.worst.is_empty() {
                report.max_rel_error = report.max_rel_error.max(rel);
                report.worst = format!("{name}[{c}]");
            }
        }
    }
    Ok(report)
}

/// Gradient check of the full training loss (mean cross-entropy plus L2) of
/// `model` on `batch`, dropout disabled.
pub fn finite_diff_gradcheck<M: Network<f64>>(model: &M, batch: &[(&M::Input, usize)], l2_beta: f64, eps: f64, seed: u64) -> Result<GradCheckReport> {
    let (_, grad) = batch_loss_and_gradient(model, batch, l2_beta, &mut Dropout::inactive())?;
    check_gradient(model, &grad, |m| batch_loss(m, batch, l2_beta), eps, SAMPLES_PER_TENSOR, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::lstm::{lstm_backward, lstm_forward, LstmParams};
    use crate::nn::{Dense, Role, Tensor};
    use crate::rng::substream;
    use rand::Rng as _;

    #[derive(Clone)]
    struct Quad(Tensor<f64>);

    impl ParamSet<f64> for Quad {
        fn visit<'a>(&'a self, _: &str, f: &mut dyn FnMut(&str, Role, &'a Tensor<f64>)) {
            f("q", Role::Weight, &self.0)
        }
        fn visit_mut(&mut self, _: &str, f: &mut dyn FnMut(&str, Role, &mut Tensor<f64>)) {
            f("q", Role::Weight, &mut self.0)
        }
    }

    #[test]
    fn quadratic_is_exact() {
        let q = Quad(Tensor::from_vec(&[4], vec![0.5, -1.5, 2.0, 3.0]).unwrap());
        let loss = |m: &Quad| Ok(m.0.as_slice().iter().enumerate().map(|(i, v)| (i + 1) as f64 * v * v).sum());
        let g = Quad(Tensor::from_fn(&[4], |i| 2.0 * (i + 1) as f64 * q.0.as_slice()[i]));
        let r = check_gradient(&q, &g, loss, 1e-5, 10, 0).unwrap();
        assert_eq!(r.checked, 4);
        assert!(r.max_rel_error < 1e-9, "{r:?}");
    }

    #[derive(Clone)]
    struct TinyLstm {
        layers: Vec<LstmParams<f64>>,
        head: Dense<f64>,
    }

    impl ParamSet<f64> for TinyLstm {
        fn visit<'a>(&'a self, p: &str, f: &mut dyn FnMut(&str, Role, &'a Tensor<f64>)) {
            for (i, l) in self.layers.iter().enumerate() {
                l.visit(&format!("{p}l{i}"), f);
            }
            self.head.visit("head", f);
        }
        fn visit_mut(&mut self, p: &str, f: &mut dyn FnMut(&str, Role, &mut Tensor<f64>)) {
            for (i, l) in self.layers.iter_mut().enumerate() {
                l.visit_mut(&format!("{p}l{i}"), f);
            }
            self.head.visit_mut("head", f);
        }
    }

    impl Network<f64> for TinyLstm {
        type Input = Vec<f64>;
        fn num_classes(&self) -> usize {
            self.head.outputs()
        }
        fn logits(&self, x: &Vec<f64>) -> Result<Vec<f64>> {
            let (h, _) = lstm_forward(x, x.len() / 3, &self.layers, &mut Dropout::inactive())?;
            self.head.forward(&h)
        }
        fn backprop(&self, x: &Vec<f64>, label: usize, w: f64, d: &mut Dropout, g: &mut Self) -> Result<(f64, Vec<f64>)> {
            let (h, tape) = lstm_forward(x, x.len() / 3, &self.layers, d)?;
            let (p, loss) = crate::nn::dense_softmax_xent(&h, &self.head, label)?;
            let dz: Vec<f64> = p.iter().enumerate().map(|(c, v)| w * (v - (c == label) as u8 as f64)).collect();
            let dh = self.head.backward(&h, &dz, &mut g.head);
            lstm_backward(&self.layers, &tape, &dh, &mut g.layers);
            Ok((loss, p))
        }
    }

    #[test]
    fn two_layer_lstm_passes() {
        let mut rng = substream(9, "gc");
        let m = TinyLstm {
            layers: vec![LstmParams::init(3, 5, &mut rng), LstmParams::init(5, 5, &mut rng)],
            head: Dense::xavier(5, 4, &mut rng),
        };
        let xs: Vec<Vec<f64>> = (0..3).map(|_| (0..24).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let batch: Vec<_> = xs.iter().enumerate().map(|(i, x)| (x, i % 4)).collect();
        let r = finite_diff_gradcheck(&m, &batch, 0.008, 1e-5, 1).unwrap();
        assert!(r.max_rel_error < 1e-4, "{r:?}");
    }
}
