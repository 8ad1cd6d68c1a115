//! The 126 handcrafted statistics used by the feature baseline.

use std::path::Path;

use crate::error::{Error, Result};
use crate::preprocess::SkelTensor;
use crate::scalar::Real;

pub const STATS: [&str; 7] = ["mean", "area", "skew", "kurtosis", "motion_energy", "range", "variance"];
pub const NUM_FEATURES: usize = 126;

/// Column index of a statistic: `(joint·3 + axis)·7 + stat`.
pub fn feature_index(joint: usize, axis: usize, stat: usize) -> usize {
    (joint * 3 + axis) * 7 + stat
}

/// Mean, area (Σ|s|), skew, excess kurtosis, motion energy (Σ Δs²), range and
/// population variance of one series. Shape moments are 0 when σ < 1e-12.
pub fn series_stats<T: Real>(s: &[T]) -> [T; 7] {
    let n = T::lit(s.len() as f64);
    let mean = s.iter().copied().sum::<T>() / n;
    let area = s.iter().map(|v| v.abs()).sum::<T>();
    let m2 = s.iter().map(|v| (*v - mean).powi(2)).sum::<T>() / n;
    let sigma = m2.sqrt();
    let (skew, kurt) = if sigma < T::lit(1e-12) {
        (T::zero(), T::zero())
    } else {
        let m3 = s.iter().map(|v| (*v - mean).powi(3)).sum::<T>() / n;
        let m4 = s.iter().map(|v| (*v - mean).powi(4)).sum::<T>() / n;
        (m3 / sigma.powi(3), m4 / (m2 * m2) - T::lit(3.0))
    };
    let energy = s.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<T>();
    let (lo, hi) = s.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    [mean, area, skew, kurt, energy, hi - lo, m2]
}

pub fn extract_features126<T: Real>(x: &SkelTensor<T>) -> Result<Vec<T>> {
    if x.joints() != 6 {
        return Err(Error::Shape(format!("features need 6 joints, got {}", x.joints())));
    }
    if x.frames() < 2 {
        return Err(Error::InvalidInput(format!("features need at least 2 frames, got {}", x.frames())));
    }
    let mut out = Vec::with_capacity(NUM_FEATURES);
    let mut series = vec![T::zero(); x.frames()];
    for j in 0..6 {
        for a in 0..3 {
            for (t, v) in series.iter_mut().enumerate() {
                *v = x.get(t, j, a);
            }
            out.extend(series_stats(&series));
        }
    }
    Ok(out)
}

/// One exported row.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRow {
    pub subject: String,
    pub label: usize,
    pub features: Vec<f64>,
}

/// CSV with header `subject,label,f000..f125`. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_features_csv(path: &Path, rows: &[FeatureRow]) -> Result<()> {
    let mut s = String::from("subject,label");
    for i in 0..NUM_FEATURES {
        s.push_str(&format!(",f{i:03}"));
    }
    s.push('\n');
    for r in rows {
        s.push_str(&r.subject);
        s.push_str(&format!(",{}", r.label));
        for v in &r.features {
            s.push_str(&format!(",{v:?}"));
        }
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_features_csv(path: &Path) -> Result<Vec<FeatureRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::format(path, "empty file"))?;
    if header.split(',').count() != NUM_FEATURES + 2 {
        return Err(Error::format(path, "unexpected header"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |m: &str| Error::format(path, format!("row {}: {m}", i + 1));
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != NUM_FEATURES + 2 {
                return Err(bad("wrong column count"));
            }
            Ok(FeatureRow {
                subject: cols[0].to_string(),
                label: cols[1].parse().map_err(|_| bad("bad label"))?,
                features: cols[2..].iter().map(|c| c.parse::<f64>().map_err(|_| bad("bad number"))).collect::<Result<_>>()?,
            })
        })
        .collect()
}
