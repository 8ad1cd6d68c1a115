use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense `T × J × 3` joint coordinates, indexed (time, joint, axis).
#[derive(Clone, Debug, PartialEq)]
pub struct SkelTensor<T> {
    frames: usize,
    joints: usize,
    data: Vec<T>,
}

impl<T: Real> SkelTensor<T> {
    pub fn new(frames: usize, joints: usize, data: Vec<T>) -> Result<Self> {
        if frames == 0 {
            return Err(Error::Shape("skeletal tensor needs at least one frame".into()));
        }
        if data.len() != frames * joints * 3 {
            return Err(Error::Shape(format!(
                "{frames}x{joints}x3 tensor needs {} values, got {}",
                frames * joints * 3,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite skeletal value".into()));
        }
        Ok(SkelTensor { frames, joints, data })
    }

    pub fn zeros(frames: usize, joints: usize) -> Self {
        SkelTensor {
            frames,
            joints,
            data: vec![T::zero(); frames * joints * 3],
        }
    }

    pub fn from_fn(frames: usize, joints: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(frames * joints * 3);
        for t in 0..frames {
            for j in 0..joints {
                for a in 0..3 {
                    data.push(f(t, j, a));
                }
            }
        }
        SkelTensor { frames, joints, data }
    }

    #[inline]
    pub fn frames(&self) -> usize {
        self.frames
    }

    #[inline]
    pub fn joints(&self) -> usize {
        self.joints
    }

    #[inline]
    pub fn get(&self, t: usize, j: usize, a: usize) -> T {
        self.data[(t * self.joints + j) * 3 + a]
    }

    #[inline]
    pub fn point(&self, t: usize, j: usize) -> [T; 3] {
        let i = (t * self.joints + j) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn cast<U: Real>(&self) -> SkelTensor<U> {
        SkelTensor {
            frames: self.frames,
            joints: self.joints,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    /// Keeps the listed frames, in order.
    pub fn take_frames(&self, idx: &[usize]) -> Self {
        let row = self.joints * 3;
        let mut data = Vec::with_capacity(idx.len() * row);
        for &t in idx {
            data.extend_from_slice(&self.data[t * row..(t + 1) * row]);
        }
        SkelTensor {
            frames: idx.len(),
            joints: self.joints,
            data,
        }
    }
}
