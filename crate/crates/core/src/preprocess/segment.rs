use serde::{Deserialize, Serialize};

use crate::data::{JointId, SkeletonFrame};
use crate::error::{Error, Result};

/// Wrist-motion segmentation thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentParams {
    /// Smoothed wrist speed, meters per frame.
    pub velocity_threshold: f64,
    /// Moving-average width in frames; odd.
    pub smoothing_window: usize,
    pub min_segment_len: usize,
    /// Runs separated by fewer than this many frames are merged.
    pub merge_gap: usize,
}

impl Default for SegmentParams {
    fn default() -> Self {
        SegmentParams {
            velocity_threshold: 0.01,
            smoothing_window: 5,
            min_segment_len: 10,
            merge_gap: 8,
        }
    }
}

impl SegmentParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.velocity_threshold > 0.0)
            || self.smoothing_window == 0
            || self.smoothing_window.is_multiple_of(2)
            || self.min_segment_len == 0
            || self.merge_gap == 0
        {
            return Err(Error::InvalidConfig(format!(
                "segment params must be positive with an odd smoothing window: {self:?}"
            )));
        }
        Ok(())
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Per-frame wrist speed: the larger of the two wrists' central-difference
/// velocity norms (one-sided at the ends), then a centered moving average of
/// width `window` truncated at the boundaries.
pub fn smoothed_wrist_speed(frames: &[SkeletonFrame], window: usize) -> Vec<f64> {
    let n = frames.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![0.0];
    }
    let speed_of = |j: JointId, t: usize| {
        let (lo, hi, h) = if t == 0 {
            (0, 1, 1.0)
        } else if t == n - 1 {
            (n - 2, n - 1, 1.0)
        } else {
            (t - 1, t + 1, 2.0)
        };
        norm(sub(frames[hi].joint(j), frames[lo].joint(j))) / h
    };
    let raw: Vec<f64> = (0..n)
        .map(|t| speed_of(JointId::WristLeft, t).max(speed_of(JointId::WristRight, t)))
        .collect();
    let half = window / 2;
    (0..n)
        .map(|t| {
            let lo = t.saturating_sub(half);
            let hi = (t + half + 1).min(n);
            raw[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Splits a continuous stream into half-open `(start, end)` gesture ranges.
pub fn segment_stream(frames: &[SkeletonFrame], p: &SegmentParams) -> Result<Vec<(usize, usize)>> {
    if frames.len() < 2 {
        return Err(Error::InvalidInput("segmentation needs at least 2 frames".into()));
    }
    p.validate()?;
    let speed = smoothed_wrist_speed(frames, p.smoothing_window);

    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (t, &s) in speed.iter().enumerate() {
        match (s >= p.velocity_threshold, start) {
            (true, None) => start = Some(t),
            (false, Some(st)) => {
                runs.push((st, t));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(st) = start {
        runs.push((st, speed.len()));
    }

    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(runs.len());
    for r in runs {
        match merged.last_mut() {
            Some(last) if r.0 - last.1 < p.merge_gap => last.1 = r.1,
            _ => merged.push(r),
        }
    }
    merged.retain(|(s, e)| e - s >= p.min_segment_len);
    Ok(merged)
}
