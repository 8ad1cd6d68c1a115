use super::skel::SkelTensor;
use crate::data::{JointId, SignSample};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Frame count fed to the skeletal models.
pub const DEFAULT_FRAMES: usize = 20;

/// `T × |joints| × 3` tensor of the chosen joints, in the given order.
pub fn select_joints<T: Real>(s: &SignSample, joints: &[JointId]) -> Result<SkelTensor<T>> {
    if s.frames.is_empty() {
        return Err(Error::InvalidInput("sample has no frames".into()));
    }
    let mut data = Vec::with_capacity(s.frames.len() * joints.len() * 3);
    for f in &s.frames {
        for j in joints {
            data.extend(f.joint(*j).iter().map(|v| T::lit(*v)));
        }
    }
    SkelTensor::new(s.frames.len(), joints.len(), data)
}

/// Source frame index for each of `target` output frames.
///
/// Downsampling (`len >= target`) picks `round(linspace(0, len-1, target))`
/// with halves rounded up, computed in exact integer arithmetic and forced
/// strictly increasing. Upsampling repeats frames: output `k` takes frame
/// `⌊k·len/target⌋`, so each frame appears `⌊target/len⌋` or `⌈target/len⌉`
/// times in order.
pub fn resample_indices(len: usize, target: usize) -> Vec<usize> {
    if len == 0 || target == 0 {
        return Vec::new();
    }
    if len < target {
        return (0..target).map(|k| k * len / target).collect();
    }
    if target == 1 {
        return vec![0];
    }
    let den = 2 * (target - 1);
    let mut out: Vec<usize> = Vec::with_capacity(target);
    for k in 0..target {
        let mut idx = (2 * k * (len - 1) + (target - 1)) / den;
        if let Some(&prev) = out.last() {
            idx = idx.max(prev + 1);
        }
        out.push(idx.min(len - 1));
    }
    out
}

/// Uniformly resamples along time to exactly `target` frames.
pub fn resample_uniform<T: Real>(x: &SkelTensor<T>, target: usize) -> Result<SkelTensor<T>> {
    if target == 0 {
        return Err(Error::InvalidInput("target frame count must be positive".into()));
    }
    Ok(x.take_frames(&resample_indices(x.frames(), target)))
}
