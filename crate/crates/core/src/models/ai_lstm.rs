use crate::error::{Error, Result};
use crate::nn::{dense_softmax_xent, join, lstm_backward, lstm_forward, Dense, Dropout, LstmParams, Network, ParamSet, Role, Tensor};
use crate::preprocess::{axis_split, AugTensor, SkelTensor};
use crate::rng::Rng;
use crate::scalar::Real;

/// Three parameter-independent stacked LSTMs, one per coordinate axis, whose
/// final hidden states are concatenated (x, y, z) into a shared softmax head.
///
/// With `J = 6` this is the plain axis-independent model; with `J = 16` it is
/// the spatially augmented variant fed by [`crate::preprocess::spatial_augment`].
#[derive(Clone, Debug, PartialEq)]
pub struct AiLstmModel<T> {
    pub axes: [Vec<LstmParams<T>>; 3],
    pub head: Dense<T>,
}

/// The spatial variant differs only in its input width.
pub type SpatialAiLstmModel<T> = AiLstmModel<T>;

const AXES: [&str; 3] = ["x", "y", "z"];

impl<T: Real> AiLstmModel<T> {
    pub fn new(joints: usize, state: usize, layers: usize, classes: usize, rng: &mut Rng) -> Self {
        let axes = std::array::from_fn(|_| {
            (0..layers)
                .map(|l| LstmParams::init(if l == 0 { joints } else { state }, state, rng))
                .collect()
        });
        AiLstmModel {
            axes,
            head: Dense::xavier(3 * state, classes, rng),
        }
    }

    pub fn joints(&self) -> usize {
        self.axes[0][0].input_size()
    }

    pub fn state_size(&self) -> usize {
        self.axes[0][0].state_size()
    }

    pub fn layers(&self) -> usize {
        self.axes[0].len()
    }

    fn check(&self, x: &SkelTensor<T>) -> Result<()> {
        if x.joints() != self.joints() {
            return Err(Error::Shape(format!("model expects {} joints, input has {}", self.joints(), x.joints())));
        }
        Ok(())
    }

    /// The concatenated final hidden states, `3·S` values: the head's input.
    pub fn embed(&self, x: &SkelTensor<T>) -> Result<Vec<T>> {
        self.check(x)?;
        let mut emb = Vec::with_capacity(3 * self.state_size());
        for (net, seq) in self.axes.iter().zip(axis_split(x)) {
            emb.extend(lstm_forward(&seq, x.frames(), net, &mut Dropout::inactive())?.0);
        }
        Ok(emb)
    }
}

/// Class probabilities for a spatially augmented input.
pub fn spatial_ai_lstm_forward<T: Real>(x: &AugTensor<T>, m: &SpatialAiLstmModel<T>) -> Result<Vec<T>> {
    m.predict(x.as_skel())
}

pub fn ai_lstm_forward<T: Real>(x: &SkelTensor<T>, m: &AiLstmModel<T>) -> Result<Vec<T>> {
    m.predict(x)
}

impl<T: Real> ParamSet<T> for AiLstmModel<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(&str, Role, &'a Tensor<T>)) {
        for (net, a) in self.axes.iter().zip(AXES) {
            for (l, p) in net.iter().enumerate() {
                p.visit(&join(prefix, &format!("{a}.l{l}")), f);
            }
        }
        self.head.visit(&join(prefix, "head"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, Role, &mut Tensor<T>)) {
        for (net, a) in self.axes.iter_mut().zip(AXES) {
            for (l, p) in net.iter_mut().enumerate() {
                p.visit_mut(&join(prefix, &format!("{a}.l{l}")), f);
            }
        }
        self.head.visit_mut(&join(prefix, "head"), f);
    }
}

impl<T: Real> Network<T> for AiLstmModel<T> {
    type Input = SkelTensor<T>;

    fn num_classes(&self) -> usize {
        self.head.outputs()
    }

    fn logits(&self, x: &SkelTensor<T>) -> Result<Vec<T>> {
        self.head.forward(&self.embed(x)?)
    }

    fn backprop(&self, x: &SkelTensor<T>, label: usize, weight: T, dropout: &mut Dropout, grad: &mut Self) -> Result<(T, Vec<T>)> {
        self.check(x)?;
        let s = self.state_size();
        let mut emb = Vec::with_capacity(3 * s);
        let mut tapes = Vec::with_capacity(3);
        for (net, seq) in self.axes.iter().zip(axis_split(x)) {
            let (h, tape) = lstm_forward(&seq, x.frames(), net, dropout)?;
            emb.extend(h);
            tapes.push(tape);
        }
        let mask = dropout.mask::<T>(emb.len());
        if let Some(m) = &mask {
            emb.iter_mut().zip(m).for_each(|(e, k)| *e *= *k);
        }
        let (p, loss) = dense_softmax_xent(&emb, &self.head, label)?;
        let dz: Vec<T> = p
            .iter()
            .enumerate()
            .map(|(c, v)| weight * (*v - if c == label { T::one() } else { T::zero() }))
            .collect();
        let mut demb = self.head.backward(&emb, &dz, &mut grad.head);
        if let Some(m) = &mask {
            demb.iter_mut().zip(m).for_each(|(e, k)| *e *= *k);
        }
        for (a, tape) in tapes.iter().enumerate() {
            lstm_backward(&self.axes[a], tape, &demb[a * s..(a + 1) * s], &mut grad.axes[a]);
        }
        Ok((loss, p))
    }
}
