use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{
    conv3d_backward, conv3d_forward, dense_softmax_xent, join, maxpool3d, maxpool3d_backward, relu_backward_inplace, relu_inplace, Conv3dLayer, Dense, Dropout,
    Network, ParamSet, PoolTape, Role, Tensor,
};
use crate::rng::Rng;
use crate::scalar::Real;

const POOL: [usize; 3] = [2, 2, 2];

/// Layer sizes of one hand stream. Kernels are `[kt, kh, kw]` per conv layer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnConfig {
    /// `[F, H, W, C]` of each hand volume.
    pub input: [usize; 4],
    pub channels: [usize; 4],
    pub kernels: [[usize; 3]; 4],
    pub fc: [usize; 2],
}

impl CnnConfig {
    pub const DEFAULT_CHANNELS: [usize; 4] = [8, 16, 16, 32];
    pub const DEFAULT_FC: [usize; 2] = [128, 64];

    /// Picks, per dimension, the largest kernels from {3, 2, 1} that keep
    /// every layer non-empty. A dimension that already fits 3×3×3 gets it.
    pub fn fit(input: [usize; 4], channels: [usize; 4], fc: [usize; 2]) -> Result<Self> {
        let mut kernels = [[0; 3]; 4];
        for d in 0..3 {
            let ks = fit_dim(input[d]).ok_or_else(|| Error::InvalidConfig(format!("input extent {} too small for two conv/pool stages", input[d])))?;
            for (l, k) in ks.into_iter().enumerate() {
                kernels[l][d] = k;
            }
        }
        let cfg = CnnConfig { input, channels, kernels, fc };
        cfg.shapes()?;
        Ok(cfg)
    }

    pub fn with_defaults(input: [usize; 4]) -> Result<Self> {
        Self::fit(input, Self::DEFAULT_CHANNELS, Self::DEFAULT_FC)
    }

    /// Activation shapes after conv1, conv2, pool1, conv3, conv4, pool2.
    pub fn shapes(&self) -> Result<[[usize; 4]; 6]> {
        let mut out = [[0; 4]; 6];
        let mut cur = self.input;
        let mut i = 0;
        for l in 0..4 {
            let k = self.kernels[l];
            if (0..3).any(|d| k[d] == 0 || k[d] > cur[d]) {
                return Err(Error::InvalidConfig(format!("conv{} kernel {k:?} does not fit {cur:?}", l + 1)));
            }
            cur = [cur[0] - k[0] + 1, cur[1] - k[1] + 1, cur[2] - k[2] + 1, self.channels[l]];
            out[i] = cur;
            i += 1;
            if l % 2 == 1 {
                cur = [cur[0] / 2, cur[1] / 2, cur[2] / 2, cur[3]];
                if cur[..3].contains(&0) {
                    return Err(Error::InvalidConfig(format!("pool after conv{} leaves an empty volume", l + 1)));
                }
                out[i] = cur;
                i += 1;
            }
        }
        Ok(out)
    }

    pub fn flat_len(&self) -> usize {
        self.shapes().map(|s| s[5].iter().product()).unwrap_or(0)
    }
}

fn fit_dim(n: usize) -> Option<[usize; 4]> {
    let stage = |n: usize, k1: usize, k2: usize| -> Option<usize> {
        let n = n.checked_sub(k1)? + 1;
        let n = n.checked_sub(k2)? + 1;
        Some(n / 2).filter(|p| *p >= 1)
    };
    let mut best: Option<[usize; 4]> = None;
    for code in 0..81 {
        let k = [code / 27, code / 9 % 3, code / 3 % 3, code % 3].map(|c| 3 - c);
        let fits = stage(n, k[0], k[1]).and_then(|m| stage(m, k[2], k[3])).is_some();
        if fits && best.is_none_or(|b| k.iter().sum::<usize>() > b.iter().sum()) {
            best = Some(k);
        }
    }
    best
}

/// conv1 → conv2 → pool → conv3 → conv4 → pool → FC1 → FC2, ReLU throughout.
#[derive(Clone, Debug, PartialEq)]
pub struct HandStream<T> {
    pub conv: [Conv3dLayer<T>; 4],
    pub fc1: Dense<T>,
    pub fc2: Dense<T>,
}

impl<T: Real> HandStream<T> {
    fn new(cfg: &CnnConfig, rng: &mut Rng) -> Self {
        let cin = [cfg.input[3], cfg.channels[0], cfg.channels[1], cfg.channels[2]];
        HandStream {
            conv: std::array::from_fn(|l| Conv3dLayer::he(cfg.channels[l], cfg.kernels[l], cin[l], rng)),
            fc1: Dense::xavier(cfg.flat_len(), cfg.fc[0], rng),
            fc2: Dense::xavier(cfg.fc[0], cfg.fc[1], rng),
        }
    }
}

impl<T: Real> ParamSet<T> for HandStream<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(&str, Role, &'a Tensor<T>)) {
        for (l, c) in self.conv.iter().enumerate() {
            c.visit(&join(prefix, &format!("conv{}", l + 1)), f);
        }
        self.fc1.visit(&join(prefix, "fc1"), f);
        self.fc2.visit(&join(prefix, "fc2"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, Role, &mut Tensor<T>)) {
        for (l, c) in self.conv.iter_mut().enumerate() {
            c.visit_mut(&join(prefix, &format!("conv{}", l + 1)), f);
        }
        self.fc1.visit_mut(&join(prefix, "fc1"), f);
        self.fc2.visit_mut(&join(prefix, "fc2"), f);
    }
}

struct StreamTape<T> {
    /// Inputs to conv1..conv4.
    conv_in: [Tensor<T>; 4],
    /// ReLU outputs of conv2 and conv4.
    conv_out: [Tensor<T>; 2],
    pools: [PoolTape; 2],
    flat: Vec<T>,
    fc1: Vec<T>,
    fc1_drop: Vec<T>,
    mask: Option<Vec<T>>,
    fc2: Vec<T>,
}

fn relu_conv<T: Real>(x: &Tensor<T>, l: &Conv3dLayer<T>) -> Result<Tensor<T>> {
    let mut y = conv3d_forward(x, l)?;
    relu_inplace(y.as_mut_slice());
    Ok(y)
}

impl<T: Real> HandStream<T> {
    fn forward(&self, x: &Tensor<T>, dropout: &mut Dropout) -> Result<StreamTape<T>> {
        let c1 = relu_conv(x, &self.conv[0])?;
        let c2 = relu_conv(&c1, &self.conv[1])?;
        let (p1, t1) = maxpool3d(&c2, POOL)?;
        let c3 = relu_conv(&p1, &self.conv[2])?;
        let c4 = relu_conv(&c3, &self.conv[3])?;
        let (p2, t2) = maxpool3d(&c4, POOL)?;
        let flat = p2.into_vec();
        let mut fc1 = self.fc1.forward(&flat)?;
        relu_inplace(&mut fc1);
        let mask = dropout.mask::<T>(fc1.len());
        let fc1_drop = match &mask {
            Some(m) => fc1.iter().zip(m).map(|(a, b)| *a * *b).collect(),
            None => fc1.clone(),
        };
        let mut fc2 = self.fc2.forward(&fc1_drop)?;
        relu_inplace(&mut fc2);
        Ok(StreamTape {
            conv_in: [x.clone(), c1, p1, c3],
            conv_out: [c2, c4],
            pools: [t1, t2],
            flat,
            fc1,
            fc1_drop,
            mask,
            fc2,
        })
    }

    fn backward(&self, tape: &StreamTape<T>, dfc2: &[T], grad: &mut HandStream<T>) {
        let mut d = dfc2.to_vec();
        relu_backward_inplace(&mut d, &tape.fc2);
        let mut d = self.fc2.backward(&tape.fc1_drop, &d, &mut grad.fc2);
        if let Some(m) = &tape.mask {
            d.iter_mut().zip(m).for_each(|(a, b)| *a *= *b);
        }
        relu_backward_inplace(&mut d, &tape.fc1);
        let dflat = self.fc1.backward(&tape.flat, &d, &mut grad.fc1);
        let dp2 = Tensor::from_vec(&pooled(&tape.pools[1]), dflat).expect("flat matches pool output");
        let mut dc4 = maxpool3d_backward(&dp2, &tape.pools[1]);
        relu_backward_inplace(dc4.as_mut_slice(), tape.conv_out[1].as_slice());
        let mut dc3 = conv3d_backward(&tape.conv_in[3], &self.conv[3], &dc4, &mut grad.conv[3], true).expect("dx requested");
        relu_backward_inplace(dc3.as_mut_slice(), tape.conv_in[3].as_slice());
        let dp1 = conv3d_backward(&tape.conv_in[2], &self.conv[2], &dc3, &mut grad.conv[2], true).expect("dx requested");
        let mut dc2 = maxpool3d_backward(&dp1, &tape.pools[0]);
        relu_backward_inplace(dc2.as_mut_slice(), tape.conv_out[0].as_slice());
        let mut dc1 = conv3d_backward(&tape.conv_in[1], &self.conv[1], &dc2, &mut grad.conv[1], true).expect("dx requested");
        relu_backward_inplace(dc1.as_mut_slice(), tape.conv_in[1].as_slice());
        conv3d_backward(&tape.conv_in[0], &self.conv[0], &dc1, &mut grad.conv[0], false);
    }
}

fn pooled(t: &PoolTape) -> Vec<usize> {
    let s = &t.in_shape;
    vec![s[0] / POOL[0], s[1] / POOL[1], s[2] / POOL[2], s[3]]
}

/// Left and right hand volumes, each `F × H × W × C`.
#[derive(Clone, Debug, PartialEq)]
pub struct HandPair<T> {
    pub left: Tensor<T>,
    pub right: Tensor<T>,
}

impl<T: Real> HandPair<T> {
    pub fn from_volumes(left: &crate::data::HandVolume, right: &crate::data::HandVolume) -> Self {
        let conv = |v: &crate::data::HandVolume| Tensor::from_fn(&v.dims(), |i| T::lit(v.data[i] as f64));
        HandPair {
            left: conv(left),
            right: conv(right),
        }
    }
}

/// Two independent hand streams whose FC2 outputs are concatenated (left,
/// right) into one softmax head.
#[derive(Clone, Debug, PartialEq)]
pub struct HandCnnModel<T> {
    pub config: CnnConfig,
    pub left: HandStream<T>,
    pub right: HandStream<T>,
    pub head: Dense<T>,
}

impl<T: Real> HandCnnModel<T> {
    pub fn new(config: CnnConfig, classes: usize, rng: &mut Rng) -> Result<Self> {
        config.shapes()?;
        let left = HandStream::new(&config, rng);
        let right = HandStream::new(&config, rng);
        let head = Dense::xavier(2 * config.fc[1], classes, rng);
        Ok(HandCnnModel { config, left, right, head })
    }

    fn check(&self, x: &HandPair<T>) -> Result<()> {
        for (side, v) in [("left", &x.left), ("right", &x.right)] {
            if v.shape() != self.config.input {
                return Err(Error::Shape(format!("{side} volume {:?}, model expects {:?}", v.shape(), self.config.input)));
            }
        }
        Ok(())
    }

    /// Concatenated FC2 activations of both streams.
    pub fn embed(&self, x: &HandPair<T>) -> Result<Vec<T>> {
        self.check(x)?;
        let mut e = self.left.forward(&x.left, &mut Dropout::inactive())?.fc2;
        e.extend(self.right.forward(&x.right, &mut Dropout::inactive())?.fc2);
        Ok(e)
    }
}

pub fn cnn_forward<T: Real>(x: &HandPair<T>, m: &HandCnnModel<T>) -> Result<Vec<T>> {
    m.predict(x)
}

impl<T: Real> ParamSet<T> for HandCnnModel<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(&str, Role, &'a Tensor<T>)) {
        self.left.visit(&join(prefix, "left"), f);
        self.right.visit(&join(prefix, "right"), f);
        self.head.visit(&join(prefix, "head"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, Role, &mut Tensor<T>)) {
        self.left.visit_mut(&join(prefix, "left"), f);
        self.right.visit_mut(&join(prefix, "right"), f);
        self.head.visit_mut(&join(prefix, "head"), f);
    }
}

impl<T: Real> Network<T> for HandCnnModel<T> {
    type Input = HandPair<T>;

    fn num_classes(&self) -> usize {
        self.head.outputs()
    }

    fn logits(&self, x: &HandPair<T>) -> Result<Vec<T>> {
        self.head.forward(&self.embed(x)?)
    }

    fn backprop(&self, x: &HandPair<T>, label: usize, weight: T, dropout: &mut Dropout, grad: &mut Self) -> Result<(T, Vec<T>)> {
        self.check(x)?;
        let tl = self.left.forward(&x.left, dropout)?;
        let tr = self.right.forward(&x.right, dropout)?;
        let mut emb = tl.fc2.clone();
        emb.extend_from_slice(&tr.fc2);
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
        let n = tl.fc2.len();
        self.left.backward(&tl, &demb[..n], &mut grad.left);
        self.right.backward(&tr, &demb[n..], &mut grad.right);
        Ok((loss, p))
    }
}
