use std::collections::HashSet;

use rand::seq::SliceRandom;

use super::sample::{Dataset, SignSample};
use crate::error::{Error, Result};
use crate::rng;

/// A train/test partition of one dataset.
#[derive(Clone, Debug)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
}

/// Holds out every sample of `test_subject`.
pub fn split_cross_subject(d: &Dataset, test_subject: &str) -> Result<Split> {
    if !d.subjects.iter().any(|s| s == test_subject) {
        return Err(Error::UnknownSubject(test_subject.to_string()));
    }
    let (test, train): (Vec<SignSample>, Vec<SignSample>) =
        d.samples.iter().cloned().partition(|s| s.subject_id == test_subject);
    if test.is_empty() {
        log::warn!("subject {test_subject} has no samples; test split is empty");
    }
    let train_subjects = d.subjects.iter().filter(|s| *s != test_subject).cloned().collect();
    Ok(Split {
        train: d.derive(train_subjects, train),
        test: d.derive(vec![test_subject.to_string()], test),
    })
}

/// Adaptation split: the test subject's samples are halved per class into a
/// fixed held-out half and a pool; the first `⌊fraction/0.5 · |pool|⌋` pool
/// samples join the training set.
///
/// The pool is ordered round-robin across classes, so every prefix is class
/// balanced and the training pools for increasing fractions are nested. The
/// held-out half depends only on `seed`, never on `fraction`.
pub fn split_adaptation(d: &Dataset, test_subject: &str, fraction: f64, seed: u64) -> Result<Split> {
    if !(0.0..=0.5).contains(&fraction) {
        return Err(Error::InvalidConfig(format!("adaptation fraction {fraction} outside [0, 0.5]")));
    }
    let base = split_cross_subject(d, test_subject)?;
    let mut per_class: Vec<Vec<SignSample>> = vec![Vec::new(); d.num_classes()];
    for s in base.test.samples {
        per_class[s.class_label].push(s);
    }
    let mut held_out = Vec::new();
    let mut pools: Vec<Vec<SignSample>> = Vec::with_capacity(per_class.len());
    for (c, mut samples) in per_class.into_iter().enumerate() {
        let mut r = rng::keyed(seed, "adaptation", &[c as u64]);
        samples.shuffle(&mut r);
        let n_test = samples.len() - samples.len() / 2;
        let pool = samples.split_off(n_test);
        held_out.extend(samples);
        pools.push(pool);
    }
    let mut pool = Vec::new();
    let depth = pools.iter().map(Vec::len).max().unwrap_or(0);
    for i in 0..depth {
        for p in &pools {
            if let Some(s) = p.get(i) {
                pool.push(s.clone());
            }
        }
    }
    let take = ((fraction / 0.5) * pool.len() as f64 + 1e-9).floor() as usize;
    let mut train = base.train.samples;
    train.extend(pool.into_iter().take(take));
    let mut train_subjects = base.train.subjects;
    if take > 0 {
        train_subjects.push(test_subject.to_string());
    }
    held_out.sort_by_key(|s| s.key());
    Ok(Split {
        train: d.derive(train_subjects, train),
        test: d.derive(vec![test_subject.to_string()], held_out),
    })
}

/// Fails if any sample identity occurs in both halves.
pub fn audit_split(split: &Split) -> Result<()> {
    let train: HashSet<_> = split.train.samples.iter().map(SignSample::key).collect();
    if let Some(s) = split.test.samples.iter().find(|s| train.contains(&s.key())) {
        return Err(Error::SplitOverlap(format!(
            "{}/{}/{} in both train and test",
            s.subject_id, s.class_label, s.sample_id
        )));
    }
    Ok(())
}
