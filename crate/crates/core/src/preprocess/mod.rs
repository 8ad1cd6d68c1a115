//! Raw samples to fixed-shape model inputs.

mod augment;
mod hands;
mod resample;
mod segment;
mod skel;

pub use augment::{axis_split, recombine, spatial_augment, AugTensor, AUG_JOINTS};
pub use hands::{build_hand_volumes, select_low_motion_frames, FrameSource, HandCropParams, ImageSequence};
pub use resample::{resample_indices, resample_uniform, select_joints, DEFAULT_FRAMES};
pub use segment::{segment_stream, smoothed_wrist_speed, SegmentParams};
pub use skel::SkelTensor;

pub use crate::data::HandVolume;

use crate::data::{SignSample, DESIGNATED_JOINTS};
use crate::error::Result;
use crate::scalar::Real;

/// The standard skeletal pipeline: designated joints, resampled to `frames`.
pub fn skeletal_input<T: Real>(s: &SignSample, frames: usize) -> Result<SkelTensor<T>> {
    resample_uniform(&select_joints(s, &DESIGNATED_JOINTS)?, frames)
}
