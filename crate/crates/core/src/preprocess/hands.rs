use serde::{Deserialize, Serialize};

use super::resample::resample_indices;
use super::segment::smoothed_wrist_speed;
use crate::data::{HandVolume, JointId, SignSample};
use crate::error::{Error, Result};

/// Anything that can produce color frames for hand cropping.
pub trait FrameSource {
    /// `(width, height, channels)`
    fn dims(&self) -> (usize, usize, usize);

    /// Full-scale channel value; 255 for 8-bit images.
    fn value_scale(&self) -> f32 {
        1.0
    }

    /// Writes the channels of in-bounds pixel `(x, y)` of `frame` into `out`.
    fn pixel(&self, frame: usize, x: usize, y: usize, out: &mut [f32]);
}

/// Decoded frames held in memory, `height × width × channels` each.
#[derive(Clone, Debug)]
pub struct ImageSequence {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub scale: f32,
    pub frames: Vec<Vec<f32>>,
}

impl FrameSource for ImageSequence {
    fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    fn value_scale(&self) -> f32 {
        self.scale
    }

    fn pixel(&self, frame: usize, x: usize, y: usize, out: &mut [f32]) {
        let i = (y * self.width + x) * self.channels;
        out.copy_from_slice(&self.frames[frame][i..i + self.channels]);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandCropParams {
    /// Square crop side in source pixels.
    pub patch: usize,
    /// Output side after bilinear resizing.
    pub out_hw: usize,
    /// Frames per volume.
    pub frames: usize,
    /// Smoothing width for the motion score.
    pub smoothing_window: usize,
}

impl Default for HandCropParams {
    fn default() -> Self {
        HandCropParams {
            patch: 100,
            out_hw: 32,
            frames: 15,
            smoothing_window: 5,
        }
    }
}

/// Picks `n` frame indices with the least wrist motion.
///
/// The timeline is cut into `n` equal bins and the minimum-motion frame of
/// each bin is chosen (lowest index on ties), so the picks stay in temporal
/// order. Samples shorter than `n` fall back to uniform frame repetition.
pub fn select_low_motion_frames(s: &SignSample, n: usize, smoothing_window: usize) -> Vec<usize> {
    let len = s.frames.len();
    if len < n {
        return resample_indices(len, n);
    }
    let score = smoothed_wrist_speed(&s.frames, smoothing_window);
    (0..n)
        .map(|b| {
            let (lo, hi) = (b * len / n, (b + 1) * len / n);
            let mut best = lo;
            for t in lo + 1..hi {
                if score[t] < score[best] {
                    best = t;
                }
            }
            best
        })
        .collect()
}

/// Crops a `patch × patch` window centered at `(cx, cy)`; outside pixels are 0.
fn crop(src: &dyn FrameSource, frame: usize, cx: f64, cy: f64, patch: usize) -> Vec<f32> {
    let (w, h, c) = src.dims();
    let scale = src.value_scale();
    let x0 = cx.round() as i64 - (patch / 2) as i64;
    let y0 = cy.round() as i64 - (patch / 2) as i64;
    let mut out = vec![0.0f32; patch * patch * c];
    for py in 0..patch {
        let y = y0 + py as i64;
        if y < 0 || y >= h as i64 {
            continue;
        }
        for px in 0..patch {
            let x = x0 + px as i64;
            if x < 0 || x >= w as i64 {
                continue;
            }
            let o = (py * patch + px) * c;
            src.pixel(frame, x as usize, y as usize, &mut out[o..o + c]);
            for v in &mut out[o..o + c] {
                *v = (*v / scale).clamp(0.0, 1.0);
            }
        }
    }
    out
}

fn source_coord(o: usize, from: usize, to: usize) -> (usize, usize, f32) {
    let s = ((o as f64 + 0.5) * from as f64 / to as f64 - 0.5).clamp(0.0, (from - 1) as f64);
    let i0 = s.floor() as usize;
    let i1 = (i0 + 1).min(from - 1);
    (i0, i1, (s - i0 as f64) as f32)
}

/// Bilinear resize with half-pixel centers; exact passthrough when sizes match.
fn resize(img: &[f32], from: usize, to: usize, c: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; to * to * c];
    for oy in 0..to {
        let (y0, y1, wy) = source_coord(oy, from, to);
        for ox in 0..to {
            let (x0, x1, wx) = source_coord(ox, from, to);
            for ch in 0..c {
                let p = |y: usize, x: usize| img[(y * from + x) * c + ch];
                out[(oy * to + ox) * c + ch] = p(y0, x0) * (1.0 - wx) * (1.0 - wy)
                    + p(y0, x1) * wx * (1.0 - wy)
                    + p(y1, x0) * (1.0 - wx) * wy
                    + p(y1, x1) * wx * wy;
            }
        }
    }
    out
}

/// Left and right hand patch volumes from the low-motion frames of `s`.
pub fn build_hand_volumes(s: &SignSample, source: &dyn FrameSource, p: &HandCropParams) -> Result<(HandVolume, HandVolume)> {
    if p.patch == 0 || p.out_hw == 0 || p.frames == 0 {
        return Err(Error::InvalidConfig("hand crop sizes must be positive".into()));
    }
    if s.frames.iter().any(|f| f.joints2d.is_none()) {
        return Err(Error::MissingModality(format!(
            "sample {} has no 2D joints for hand cropping",
            s.sample_id
        )));
    }
    let (_, _, c) = source.dims();
    let idx = select_low_motion_frames(s, p.frames, p.smoothing_window);
    let mut vols = [Vec::new(), Vec::new()];
    for &t in &idx {
        let j2 = s.frames[t].joints2d.as_ref().expect("checked above");
        for (hand, joint) in [JointId::WristLeft, JointId::WristRight].into_iter().enumerate() {
            let [u, v] = j2[joint.index()];
            let patch = crop(source, t, u, v, p.patch);
            vols[hand].extend(resize(&patch, p.patch, p.out_hw, c));
        }
    }
    let [l, r] = vols;
    Ok((
        HandVolume::new(p.frames, p.out_hw, p.out_hw, c, l)?,
        HandVolume::new(p.frames, p.out_hw, p.out_hw, c, r)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{SkeletonFrame, NUM_JOINTS};
    use crate::preprocess::segment::tests::stream;

    struct Constant(f32);
    impl FrameSource for Constant {
        fn dims(&self) -> (usize, usize, usize) {
            (640, 480, 3)
        }
        fn pixel(&self, _: usize, _: usize, _: usize, out: &mut [f32]) {
            out.fill(self.0);
        }
    }

    fn with_2d(mut frames: Vec<SkeletonFrame>, uv: [f64; 2]) -> SignSample {
        for f in &mut frames {
            f.joints2d = Some(vec![uv; NUM_JOINTS]);
        }
        SignSample {
            subject_id: "s".into(),
            class_label: 0,
            sample_id: "x".into(),
            fps: 30.0,
            frames,
            hand_volumes: None,
        }
    }

    #[test]
    fn constant_speed_picks_first_of_each_bin() {
        let s = with_2d(stream(&[0.25; 45]), [0.0, 0.0]);
        let idx = select_low_motion_frames(&s, 15, 5);
        assert_eq!(idx, (0..15).map(|b| b * 3).collect::<Vec<_>>());
    }

    #[test]
    fn zero_motion_frame_in_each_bin_is_found() {
        let n = 5;
        let bin = 10;
        let mut v: Vec<f64> = (0..n * bin).map(|t| 0.01 + 0.001 * (t % 7) as f64).collect();
        let picks: Vec<usize> = (0..n).map(|b| b * bin + 3 + b).collect();
        for &z in &picks {
            v[z] = 0.0;
            v[z + 1] = 0.0;
        }
        let s = with_2d(stream(&v), [0.0, 0.0]);
        assert_eq!(select_low_motion_frames(&s, n, 1), picks);
    }

    #[test]
    fn short_sample_repeats_frames() {
        let s = with_2d(stream(&[0.01; 7]), [0.0, 0.0]);
        let idx = select_low_motion_frames(&s, 15, 5);
        assert_eq!(idx, resample_indices(7, 15));
    }

    #[test]
    fn uniform_gray_gives_constant_volume() {
        let s = with_2d(stream(&[0.01; 20]), [320.0, 240.0]);
        let p = HandCropParams {
            patch: 40,
            out_hw: 16,
            frames: 15,
            smoothing_window: 5,
        };
        let (l, r) = build_hand_volumes(&s, &Constant(0.5), &p).unwrap();
        assert_eq!(l.dims(), [15, 16, 16, 3]);
        assert!(l.data.iter().chain(&r.data).all(|v| *v == 0.5));
    }

    #[test]
    fn corner_crop_is_zero_padded() {
        let s = with_2d(stream(&[0.01; 20]), [0.0, 0.0]);
        let p = HandCropParams {
            patch: 10,
            out_hw: 10,
            frames: 2,
            smoothing_window: 5,
        };
        let (l, _) = build_hand_volumes(&s, &Constant(1.0), &p).unwrap();
        for y in 0..10 {
            for x in 0..10 {
                let expect = if y >= 5 && x >= 5 { 1.0 } else { 0.0 };
                assert_eq!(l.at(0, y, x, 0), expect, "({y},{x})");
            }
        }
    }

    #[test]
    fn equal_sizes_pass_crop_through() {
        let (w, h, c) = (64, 48, 3);
        let frames: Vec<Vec<f32>> = (0..20)
            .map(|f| (0..w * h * c).map(|i| ((i * 7 + f * 13) % 256) as f32).collect())
            .collect();
        let seq = ImageSequence {
            width: w,
            height: h,
            channels: c,
            scale: 255.0,
            frames,
        };
        let (cx, cy) = (30.0, 20.0);
        let s = with_2d(stream(&[0.01; 20]), [cx, cy]);
        let p = HandCropParams {
            patch: 12,
            out_hw: 12,
            frames: 4,
            smoothing_window: 5,
        };
        let idx = select_low_motion_frames(&s, 4, 5);
        let (l, _) = build_hand_volumes(&s, &seq, &p).unwrap();
        for (k, &t) in idx.iter().enumerate() {
            for y in 0..12 {
                for x in 0..12 {
                    for ch in 0..c {
                        let sx = 30 - 6 + x;
                        let sy = 20 - 6 + y;
                        let expect = seq.frames[t][(sy * w + sx) * c + ch] / 255.0;
                        assert_eq!(l.at(k, y, x, ch), expect);
                    }
                }
            }
        }
    }

    #[test]
    fn missing_2d_joints_is_fatal() {
        let mut s = with_2d(stream(&[0.01; 20]), [0.0, 0.0]);
        s.frames[3].joints2d = None;
        let err = build_hand_volumes(&s, &Constant(0.5), &HandCropParams::default()).unwrap_err();
        assert!(matches!(err, Error::MissingModality(_)));
    }
}
