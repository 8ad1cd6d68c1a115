use std::collections::HashSet;

use super::joints::{JointId, NUM_JOINTS};
use super::volume::HandVolume;
use crate::error::{Error, Result};

/// One tracked skeleton: camera-space joints in meters, optional image-plane
/// joints in pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonFrame {
    pub t: f64,
    pub joints3d: Vec<[f64; 3]>,
    pub joints2d: Option<Vec<[f64; 2]>>,
}

impl SkeletonFrame {
    pub fn validate(&self) -> Result<()> {
        if self.joints3d.len() != NUM_JOINTS {
            return Err(Error::Shape(format!("expected {NUM_JOINTS} 3D joints, got {}", self.joints3d.len())));
        }
        if !self.t.is_finite() || self.joints3d.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite joint coordinate".into()));
        }
        if let Some(j2) = &self.joints2d {
            if j2.len() != NUM_JOINTS {
                return Err(Error::Shape(format!("expected {NUM_JOINTS} 2D joints, got {}", j2.len())));
            }
            if j2.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("non-finite 2D joint coordinate".into()));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn joint(&self, j: JointId) -> [f64; 3] {
        self.joints3d[j.index()]
    }
}

/// Identity of a sample for split auditing: `(subject, label, file stem)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SampleKey {
    pub subject: String,
    pub label: usize,
    pub id: String,
}

/// One gesture instance.
#[derive(Clone, Debug, PartialEq)]
pub struct SignSample {
    pub subject_id: String,
    pub class_label: usize,
    /// File stem; unique within `(subject, class)`.
    pub sample_id: String,
    pub fps: f64,
    pub frames: Vec<SkeletonFrame>,
    /// `(left, right)`
    pub hand_volumes: Option<(HandVolume, HandVolume)>,
}

impl SignSample {
    pub fn key(&self) -> SampleKey {
        SampleKey {
            subject: self.subject_id.clone(),
            label: self.class_label,
            id: self.sample_id.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::InvalidInput(format!("sample {} has no frames", self.sample_id)));
        }
        for f in &self.frames {
            f.validate()?;
        }
        if self.frames.windows(2).any(|w| w[1].t < w[0].t) {
            return Err(Error::InvalidInput(format!("sample {} frames not time-ordered", self.sample_id)));
        }
        if let Some((l, r)) = &self.hand_volumes {
            if l.dims() != r.dims() {
                return Err(Error::Shape("left and right hand volumes differ in shape".into()));
            }
        }
        Ok(())
    }
}

/// A labelled collection of samples from several subjects.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub vocabulary: Vec<String>,
    pub subjects: Vec<String>,
    pub samples: Vec<SignSample>,
}

impl Dataset {
    /// Builds a dataset, checking labels, subject membership, per-sample
    /// invariants and sample-identity uniqueness.
    pub fn new(vocabulary: Vec<String>, subjects: Vec<String>, samples: Vec<SignSample>) -> Result<Self> {
        let subject_set: HashSet<&str> = subjects.iter().map(String::as_str).collect();
        if subject_set.len() != subjects.len() {
            return Err(Error::InvalidInput("duplicate subject id".into()));
        }
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if s.class_label >= vocabulary.len() {
                return Err(Error::InvalidInput(format!(
                    "label {} outside vocabulary of {}",
                    s.class_label,
                    vocabulary.len()
                )));
            }
            if !subject_set.contains(s.subject_id.as_str()) {
                return Err(Error::UnknownSubject(s.subject_id.clone()));
            }
            s.validate()?;
            if !seen.insert(s.key()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate sample {}/{}/{}",
                    s.subject_id, vocabulary[s.class_label], s.sample_id
                )));
            }
        }
        Ok(Dataset {
            vocabulary,
            subjects,
            samples,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn has_hand_volumes(&self) -> bool {
        !self.samples.is_empty() && self.samples.iter().all(|s| s.hand_volumes.is_some())
    }

    /// Same vocabulary, given subject list, chosen samples.
    pub(crate) fn derive(&self, subjects: Vec<String>, samples: Vec<SignSample>) -> Dataset {
        Dataset {
            vocabulary: self.vocabulary.clone(),
            subjects,
            samples,
        }
    }

    /// Per-class sample counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for s in &self.samples {
            counts[s.class_label] += 1;
        }
        counts
    }
}
