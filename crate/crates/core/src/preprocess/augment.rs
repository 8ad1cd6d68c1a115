use super::skel::SkelTensor;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Joint count after origin transfer: 6 absolute + 5 relative to each wrist.
pub const AUG_JOINTS: usize = 16;

/// Origin-transferred skeleton, `T × 16 × 3`.
///
/// Joints 0–5 are the input joints; 6–10 are the five joints other than
/// the left wrist, relative to the left wrist; 11–15 the five joints other
/// than the right wrist, relative to the right wrist. Relative blocks keep
/// canonical joint order.
#[derive(Clone, Debug, PartialEq)]
pub struct AugTensor<T>(SkelTensor<T>);

impl<T: Real> AugTensor<T> {
    pub fn as_skel(&self) -> &SkelTensor<T> {
        &self.0
    }

    pub fn into_skel(self) -> SkelTensor<T> {
        self.0
    }
}

const LEFT_WRIST: usize = 0;
const RIGHT_WRIST: usize = 1;

/// Appends per-frame joint positions relative to each wrist. Expects the
/// canonical 6-joint order with `frames` time steps.
pub fn spatial_augment<T: Real>(x: &SkelTensor<T>, frames: usize) -> Result<AugTensor<T>> {
    if x.joints() != 6 || x.frames() != frames {
        return Err(Error::Shape(format!(
            "spatial augmentation expects {frames}x6x3, got {}x{}x3",
            x.frames(),
            x.joints()
        )));
    }
    let out = SkelTensor::from_fn(frames, AUG_JOINTS, |t, j, a| match j {
        0..=5 => x.get(t, j, a),
        6..=10 => {
            let src = [1, 2, 3, 4, 5][j - 6];
            x.get(t, src, a) - x.get(t, LEFT_WRIST, a)
        }
        _ => {
            let src = [0, 2, 3, 4, 5][j - 11];
            x.get(t, src, a) - x.get(t, RIGHT_WRIST, a)
        }
    });
    Ok(AugTensor(out))
}

/// Splits coordinates into three row-major `T × J` matrices (x, y, z).
pub fn axis_split<T: Real>(x: &SkelTensor<T>) -> [Vec<T>; 3] {
    let n = x.frames() * x.joints();
    let mut out = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for p in x.as_slice().chunks_exact(3) {
        for a in 0..3 {
            out[a].push(p[a]);
        }
    }
    out
}

/// Inverse of [`axis_split`].
pub fn recombine<T: Real>(axes: &[Vec<T>; 3], frames: usize, joints: usize) -> Result<SkelTensor<T>> {
    if axes.iter().any(|a| a.len() != frames * joints) {
        return Err(Error::Shape("axis matrices do not match T x J".into()));
    }
    let data = (0..frames * joints).flat_map(|i| [axes[0][i], axes[1][i], axes[2][i]]).collect();
    SkelTensor::new(frames, joints, data)
}
