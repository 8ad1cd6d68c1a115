use super::dropout::Dropout;
use super::init::xavier_uniform;
use super::params::{join, ParamSet, Role};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::{axpy, dot, Real};

const GATES: [&str; 4] = ["f", "i", "c", "o"];
const F: usize = 0;
const I: usize = 1;
const G: usize = 2;
const O: usize = 3;

/// One LSTM cell. Gate weights act on `[h_{t-1}; x]` and are `S × (S + D)`;
/// gates are stored in the order forget, input, candidate, output.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams<T> {
    pub w: [Tensor<T>; 4],
    pub b: [Tensor<T>; 4],
}

impl<T: Real> LstmParams<T> {
    pub fn zeros(input: usize, state: usize) -> Self {
        LstmParams {
            w: std::array::from_fn(|_| Tensor::zeros(&[state, state + input])),
            b: std::array::from_fn(|_| Tensor::zeros(&[state])),
        }
    }

    /// Xavier-uniform gate weights, forget bias 1, other biases 0.
    pub fn init(input: usize, state: usize, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(input, state);
        for w in &mut p.w {
            *w = xavier_uniform(&[state, state + input], state + input, state, rng);
        }
        p.b[F].fill(T::one());
        p
    }

    pub fn state_size(&self) -> usize {
        self.w[0].shape()[0]
    }

    pub fn input_size(&self) -> usize {
        self.w[0].shape()[1] - self.state_size()
    }
}

impl<T: Real> ParamSet<T> for LstmParams<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(&str, Role, &'a Tensor<T>)) {
        for (g, name) in GATES.iter().enumerate() {
            f(&join(prefix, &format!("w_{name}")), Role::Weight, &self.w[g]);
            f(&join(prefix, &format!("b_{name}")), Role::Bias, &self.b[g]);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, Role, &mut Tensor<T>)) {
        for (g, name) in GATES.iter().enumerate() {
            f(&join(prefix, &format!("w_{name}")), Role::Weight, &mut self.w[g]);
            f(&join(prefix, &format!("b_{name}")), Role::Bias, &mut self.b[g]);
        }
    }
}

/// Hidden state `h` and cell memory `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmState<T> {
    pub h: Vec<T>,
    pub c: Vec<T>,
}

impl<T: Real> LstmState<T> {
    pub fn zeros(state: usize) -> Self {
        LstmState {
            h: vec![T::zero(); state],
            c: vec![T::zero(); state],
        }
    }
}

/// Gate activations of one step, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct CellCache<T> {
    pub z: Vec<T>,
    pub gates: [Vec<T>; 4],
    pub c_prev: Vec<T>,
    pub tanh_c: Vec<T>,
}

pub fn lstm_cell_forward<T: Real>(x: &[T], prev: &LstmState<T>, p: &LstmParams<T>) -> Result<(LstmState<T>, CellCache<T>)> {
    let s = p.state_size();
    if x.len() != p.input_size() || prev.h.len() != s || prev.c.len() != s {
        return Err(Error::Shape(format!(
            "lstm cell with D={}, S={s} given x={}, h={}, c={}",
            p.input_size(),
            x.len(),
            prev.h.len(),
            prev.c.len()
        )));
    }
    let mut z = Vec::with_capacity(s + x.len());
    z.extend_from_slice(&prev.h);
    z.extend_from_slice(x);
    let gates: [Vec<T>; 4] = std::array::from_fn(|g| {
        (0..s)
            .map(|r| {
                let a = dot(p.w[g].row(r), &z) + p.b[g].as_slice()[r];
                if g == G {
                    a.tanh()
                } else {
                    a.sigmoid()
                }
            })
            .collect()
    });
    let c: Vec<T> = (0..s).map(|r| gates[F][r] * prev.c[r] + gates[I][r] * gates[G][r]).collect();
    let tanh_c: Vec<T> = c.iter().map(|v| v.tanh()).collect();
    let h = (0..s).map(|r| gates[O][r] * tanh_c[r]).collect();
    let cache = CellCache {
        z,
        gates,
        c_prev: prev.c.clone(),
        tanh_c,
    };
    Ok((LstmState { h, c }, cache))
}

/// Everything a stacked LSTM forward pass produced.
#[derive(Clone, Debug)]
pub struct LstmTape<T> {
    steps: usize,
    layers: Vec<Vec<CellCache<T>>>,
    /// Dropout masks on each non-final layer's output sequence.
    masks: Vec<Option<Vec<T>>>,
    /// Final state of every layer.
    pub finals: Vec<LstmState<T>>,
}

/// Runs `layers` over `seq` (`steps × D`, row-major) from zero state.
/// Returns the last layer's final hidden vector.
pub fn lstm_forward<T: Real>(seq: &[T], steps: usize, layers: &[LstmParams<T>], dropout: &mut Dropout) -> Result<(Vec<T>, LstmTape<T>)> {
    if layers.is_empty() || steps == 0 {
        return Err(Error::Shape("lstm needs at least one layer and one step".into()));
    }
    if seq.len() != steps * layers[0].input_size() {
        return Err(Error::Shape(format!("sequence of {} values is not {steps} x {}", seq.len(), layers[0].input_size())));
    }
    let mut input = seq.to_vec();
    let mut tape = LstmTape {
        steps,
        layers: Vec::with_capacity(layers.len()),
        masks: Vec::with_capacity(layers.len()),
        finals: Vec::with_capacity(layers.len()),
    };
    for (l, p) in layers.iter().enumerate() {
        let d = p.input_size();
        if input.len() != steps * d {
            return Err(Error::Shape(format!("layer {l} expects input dim {d}")));
        }
        let mut st = LstmState::zeros(p.state_size());
        let mut caches = Vec::with_capacity(steps);
        let mut out = Vec::with_capacity(steps * p.state_size());
        for t in 0..steps {
            let (next, cache) = lstm_cell_forward(&input[t * d..(t + 1) * d], &st, p)?;
            out.extend_from_slice(&next.h);
            caches.push(cache);
            st = next;
        }
        let mask = if l + 1 < layers.len() { dropout.mask::<T>(out.len()) } else { None };
        if let Some(m) = &mask {
            out.iter_mut().zip(m).for_each(|(o, k)| *o *= *k);
        }
        tape.layers.push(caches);
        tape.masks.push(mask);
        tape.finals.push(st);
        input = out;
    }
    let h = tape.finals.last().expect("nonempty").h.clone();
    Ok((h, tape))
}

/// Full backpropagation through time. `dh_final` is the gradient with
/// respect to the last layer's final hidden vector; parameter gradients are
/// accumulated into `grads`. Returns the gradient of the input sequence.
pub fn lstm_backward<T: Real>(layers: &[LstmParams<T>], tape: &LstmTape<T>, dh_final: &[T], grads: &mut [LstmParams<T>]) -> Vec<T> {
    let steps = tape.steps;
    let top = layers.len() - 1;
    let mut dout = vec![T::zero(); steps * layers[top].state_size()];
    dout[(steps - 1) * dh_final.len()..].copy_from_slice(dh_final);
    for l in (0..layers.len()).rev() {
        let (p, g) = (&layers[l], &mut grads[l]);
        let (s, d) = (p.state_size(), p.input_size());
        if let Some(m) = &tape.masks[l] {
            dout.iter_mut().zip(m).for_each(|(o, k)| *o *= *k);
        }
        let mut din = vec![T::zero(); steps * d];
        let mut dh_next = vec![T::zero(); s];
        let mut dc_next = vec![T::zero(); s];
        let mut dz = vec![T::zero(); s + d];
        let mut da: [Vec<T>; 4] = std::array::from_fn(|_| vec![T::zero(); s]);
        for t in (0..steps).rev() {
            let cc = &tape.layers[l][t];
            let [f, i, gc, o] = &cc.gates;
            for r in 0..s {
                let dh = dout[t * s + r] + dh_next[r];
                let dc = dc_next[r] + dh * o[r] * (T::one() - cc.tanh_c[r] * cc.tanh_c[r]);
                da[F][r] = dc * cc.c_prev[r] * f[r] * (T::one() - f[r]);
                da[I][r] = dc * gc[r] * i[r] * (T::one() - i[r]);
                da[G][r] = dc * i[r] * (T::one() - gc[r] * gc[r]);
                da[O][r] = dh * cc.tanh_c[r] * o[r] * (T::one() - o[r]);
                dc_next[r] = dc * f[r];
            }
            dz.fill(T::zero());
            for gate in 0..4 {
                for r in 0..s {
                    let a = da[gate][r];
                    axpy(a, &cc.z, g.w[gate].row_mut(r));
                    g.b[gate].as_mut_slice()[r] += a;
                    axpy(a, p.w[gate].row(r), &mut dz);
                }
            }
            dh_next.copy_from_slice(&dz[..s]);
            din[t * d..(t + 1) * d].copy_from_slice(&dz[s..]);
        }
        dout = din;
    }
    dout
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng as _;

    fn random_params(d: usize, s: usize, rng: &mut Rng) -> LstmParams<f64> {
        let mut p = LstmParams::zeros(d, s);
        p.visit_mut("", &mut |_, _, t| t.as_mut_slice().iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0)));
        p
    }

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn zero_params_give_zero_state() {
        let p = LstmParams::<f64>::zeros(2, 3);
        let (st, _) = lstm_cell_forward(&[0.4, -1.0], &LstmState::zeros(3), &p).unwrap();
        assert_eq!(st.h, vec![0.0; 3]);
        assert_eq!(st.c, vec![0.0; 3]);
    }

    #[test]
    fn saturated_forget_gate_keeps_memory() {
        let mut p = LstmParams::<f64>::zeros(2, 3);
        p.b[F].fill(30.0);
        let prev = LstmState {
            h: vec![0.0; 3],
            c: vec![0.7, -2.0, 0.1],
        };
        let (st, _) = lstm_cell_forward(&[0.0, 0.0], &prev, &p).unwrap();
        for (a, b) in st.c.iter().zip(&prev.c) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn cell_matches_scalar_oracle() {
        let mut rng = substream(11, "lstm-oracle");
        for _ in 0..20 {
            let (s, d) = (3, 2);
            let p = random_params(d, s, &mut rng);
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let prev = LstmState {
                h: (0..s).map(|_| rng.random_range(-1.0..1.0)).collect(),
                c: (0..s).map(|_| rng.random_range(-2.0..2.0)).collect(),
            };
            let (st, _) = lstm_cell_forward(&x, &prev, &p).unwrap();
            for r in 0..s {
                let mut pre = [0.0f64; 4];
                for g in 0..4 {
                    pre[g] = p.b[g].as_slice()[r];
                    for k in 0..s {
                        pre[g] += p.w[g].row(r)[k] * prev.h[k];
                    }
                    for k in 0..d {
                        pre[g] += p.w[g].row(r)[s + k] * x[k];
                    }
                }
                let c = sig(pre[0]) * prev.c[r] + sig(pre[1]) * pre[2].tanh();
                let h = sig(pre[3]) * c.tanh();
                assert!((st.c[r] - c).abs() < 1e-12);
                assert!((st.h[r] - h).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stacked_shapes_and_single_step() {
        let mut rng = substream(5, "lstm");
        let layers = vec![LstmParams::<f64>::init(6, 50, &mut rng), LstmParams::init(50, 50, &mut rng)];
        let seq: Vec<f64> = (0..120).map(|i| (i as f64 * 0.1).sin()).collect();
        let (h, tape) = lstm_forward(&seq, 20, &layers, &mut Dropout::inactive()).unwrap();
        assert_eq!(h.len(), 50);
        assert!(h.iter().all(|v| v.abs() < 1.0));
        assert_eq!(tape.finals.len(), 2);

        let one = &layers[..1];
        let (h1, _) = lstm_forward(&seq[..6], 1, one, &mut Dropout::inactive()).unwrap();
        let (st, _) = lstm_cell_forward(&seq[..6], &LstmState::zeros(50), &layers[0]).unwrap();
        assert_eq!(h1, st.h);
    }

    #[test]
    fn zero_everything_gives_zero_final_state() {
        let layers = vec![LstmParams::<f64>::zeros(4, 5), LstmParams::zeros(5, 5)];
        let (h, _) = lstm_forward(&[0.0; 40], 10, &layers, &mut Dropout::inactive()).unwrap();
        assert_eq!(h, vec![0.0; 5]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let layers = vec![LstmParams::<f64>::zeros(4, 5)];
        assert!(lstm_forward(&[0.0; 41], 10, &layers, &mut Dropout::inactive()).is_err());
        assert!(lstm_cell_forward(&[0.0; 3], &LstmState::zeros(5), &layers[0]).is_err());
    }
}
