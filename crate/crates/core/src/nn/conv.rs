use super::init::he_normal;
use super::params::{join, ParamSet, Role};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::{axpy, dot, Real};

/// 3D convolution, stride 1, valid padding. Volumes are `F × H × W × C`
/// (channels last); the kernel is `K × kt × kh × kw × Cin`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv3dLayer<T> {
    pub kernel: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Real> Conv3dLayer<T> {
    pub fn zeros(out_channels: usize, k: [usize; 3], in_channels: usize) -> Self {
        Conv3dLayer {
            kernel: Tensor::zeros(&[out_channels, k[0], k[1], k[2], in_channels]),
            bias: Tensor::zeros(&[out_channels]),
        }
    }

    pub fn he(out_channels: usize, k: [usize; 3], in_channels: usize, rng: &mut Rng) -> Self {
        let fan_in = k[0] * k[1] * k[2] * in_channels;
        Conv3dLayer {
            kernel: he_normal(&[out_channels, k[0], k[1], k[2], in_channels], fan_in, rng),
            bias: Tensor::zeros(&[out_channels]),
        }
    }

    pub fn out_channels(&self) -> usize {
        self.kernel.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernel.shape()[4]
    }

    pub fn window(&self) -> [usize; 3] {
        let s = self.kernel.shape();
        [s[1], s[2], s[3]]
    }

    /// Output shape for an input of shape `[F, H, W, Cin]`.
    pub fn output_shape(&self, input: &[usize]) -> Result<[usize; 4]> {
        let k = self.window();
        if input.len() != 4 || input[3] != self.in_channels() {
            return Err(Error::Shape(format!("conv3d expects [F, H, W, {}], got {input:?}", self.in_channels())));
        }
        if (0..3).any(|d| k[d] > input[d]) {
            return Err(Error::Shape(format!("kernel {k:?} larger than input {input:?}")));
        }
        Ok([input[0] - k[0] + 1, input[1] - k[1] + 1, input[2] - k[2] + 1, self.out_channels()])
    }
}

impl<T: Real> ParamSet<T> for Conv3dLayer<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(&str, Role, &'a Tensor<T>)) {
        f(&join(prefix, "kernel"), Role::Kernel, &self.kernel);
        f(&join(prefix, "bias"), Role::Bias, &self.bias);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, Role, &mut Tensor<T>)) {
        f(&join(prefix, "kernel"), Role::Kernel, &mut self.kernel);
        f(&join(prefix, "bias"), Role::Bias, &mut self.bias);
    }
}

pub fn conv3d_forward<T: Real>(x: &Tensor<T>, layer: &Conv3dLayer<T>) -> Result<Tensor<T>> {
    let out_shape = layer.output_shape(x.shape())?;
    let [fo, ho, wo, k_out] = out_shape;
    let [kt, kh, kw] = layer.window();
    let (h, w, c) = (x.shape()[1], x.shape()[2], x.shape()[3]);
    let span = kw * c;
    let (xs, ks, bs) = (x.as_slice(), layer.kernel.as_slice(), layer.bias.as_slice());
    let kstride = kt * kh * span;
    let mut out = Tensor::zeros(&out_shape);
    let os = out.as_mut_slice();
    for f in 0..fo {
        for y in 0..ho {
            for xx in 0..wo {
                let o = ((f * ho + y) * wo + xx) * k_out;
                for k in 0..k_out {
                    let mut acc = bs[k];
                    for a in 0..kt {
                        for b in 0..kh {
                            let xi = (((f + a) * h + y + b) * w + xx) * c;
                            let ki = k * kstride + (a * kh + b) * span;
                            acc += dot(&ks[ki..ki + span], &xs[xi..xi + span]);
                        }
                    }
                    os[o + k] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Accumulates kernel and bias gradients into `grad`; returns `∂L/∂x` when
/// `want_dx` is set.
pub fn conv3d_backward<T: Real>(x: &Tensor<T>, layer: &Conv3dLayer<T>, dy: &Tensor<T>, grad: &mut Conv3dLayer<T>, want_dx: bool) -> Option<Tensor<T>> {
    let [fo, ho, wo, k_out] = [dy.shape()[0], dy.shape()[1], dy.shape()[2], dy.shape()[3]];
    let [kt, kh, kw] = layer.window();
    let (h, w, c) = (x.shape()[1], x.shape()[2], x.shape()[3]);
    let span = kw * c;
    let kstride = kt * kh * span;
    let (xs, ks, dys) = (x.as_slice(), layer.kernel.as_slice(), dy.as_slice());
    let mut dx = want_dx.then(|| Tensor::zeros(x.shape()));
    let gk = grad.kernel.as_mut_slice();
    for f in 0..fo {
        for y in 0..ho {
            for xx in 0..wo {
                let o = ((f * ho + y) * wo + xx) * k_out;
                for k in 0..k_out {
                    let d = dys[o + k];
                    if d == T::zero() {
                        continue;
                    }
                    grad.bias.as_mut_slice()[k] += d;
                    for a in 0..kt {
                        for b in 0..kh {
                            let xi = (((f + a) * h + y + b) * w + xx) * c;
                            let ki = k * kstride + (a * kh + b) * span;
                            axpy(d, &xs[xi..xi + span], &mut gk[ki..ki + span]);
                            if let Some(dx) = dx.as_mut() {
                                axpy(d, &ks[ki..ki + span], &mut dx.as_mut_slice()[xi..xi + span]);
                            }
                        }
                    }
                }
            }
        }
    }
    dx
}

/// Argmax routing recorded by [`maxpool3d`].
#[derive(Clone, Debug)]
pub struct PoolTape {
    pub in_shape: Vec<usize>,
    pub argmax: Vec<usize>,
}

/// Max pooling with stride equal to the window; remainders are dropped.
/// Ties go to the first element in (t, y, x) order.
pub fn maxpool3d<T: Real>(x: &Tensor<T>, window: [usize; 3]) -> Result<(Tensor<T>, PoolTape)> {
    let s = x.shape();
    if s.len() != 4 || (0..3).any(|d| window[d] == 0 || s[d] < window[d]) {
        return Err(Error::Shape(format!("cannot pool {s:?} with window {window:?}")));
    }
    let (h, w, c) = (s[1], s[2], s[3]);
    let out_shape = [s[0] / window[0], h / window[1], w / window[2], c];
    let mut out = Tensor::zeros(&out_shape);
    let mut argmax = vec![0; out.len()];
    let xs = x.as_slice();
    let os = out.as_mut_slice();
    for f in 0..out_shape[0] {
        for y in 0..out_shape[1] {
            for xx in 0..out_shape[2] {
                for ch in 0..c {
                    let mut best = T::neg_infinity();
                    let mut at = 0;
                    for a in 0..window[0] {
                        for b in 0..window[1] {
                            for e in 0..window[2] {
                                let i = (((f * window[0] + a) * h + y * window[1] + b) * w + xx * window[2] + e) * c + ch;
                                if xs[i] > best {
                                    best = xs[i];
                                    at = i;
                                }
                            }
                        }
                    }
                    let o = ((f * out_shape[1] + y) * out_shape[2] + xx) * c + ch;
                    os[o] = best;
                    argmax[o] = at;
                }
            }
        }
    }
    Ok((
        out,
        PoolTape {
            in_shape: s.to_vec(),
            argmax,
        },
    ))
}

pub fn maxpool3d_backward<T: Real>(dy: &Tensor<T>, tape: &PoolTape) -> Tensor<T> {
    let mut dx = Tensor::zeros(&tape.in_shape);
    let d = dx.as_mut_slice();
    for (g, &i) in dy.as_slice().iter().zip(&tape.argmax) {
        d[i] += *g;
    }
    dx
}

pub fn relu_inplace<T: Real>(x: &mut [T]) {
    x.iter_mut().for_each(|v| *v = v.max(T::zero()));
}

/// Zeroes `dy` wherever the ReLU output `y` was not positive.
pub fn relu_backward_inplace<T: Real>(dy: &mut [T], y: &[T]) {
    dy.iter_mut().zip(y).for_each(|(d, v)| {
        if *v <= T::zero() {
            *d = T::zero()
        }
    });
}
