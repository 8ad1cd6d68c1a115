use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::report::{EvalReport, ExperimentResult};
use crate::data::{audit_split, split_adaptation, split_cross_subject, Dataset};
use crate::error::{Error, Result};
use crate::models::{argmax, run_to_completion, Hyperparams, ModelSpec, Predictor, TrainedModel};

/// Scores every test sample with `model`, in dataset order.
pub fn evaluate(model: &dyn Predictor, test: &Dataset) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if model.vocabulary() != test.vocabulary.as_slice() {
        return Err(Error::VocabularyMismatch(format!(
            "model knows {} classes, dataset has {}",
            model.vocabulary().len(),
            test.vocabulary.len()
        )));
    }
    let pairs = test
        .samples
        .iter()
        .map(|s| Ok((s.class_label, argmax(&model.scores(s)?))))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_predictions(&test.subjects.join("+"), test.num_classes(), &pairs)
}

/// Applies `f` to every item on up to `jobs` threads; results keep input order.
pub fn parallel_map<I: Sync, R: Send>(items: &[I], jobs: usize, f: impl Fn(&I) -> R + Sync) -> Vec<R> {
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(items.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every slot filled")).collect()
}

/// Trains a fresh model without `subject` and evaluates it on `subject`.
pub fn cross_subject_fold(d: &Dataset, subject: &str, spec: &ModelSpec, hp: &Hyperparams) -> Result<EvalReport> {
    let split = split_cross_subject(d, subject)?;
    audit_split(&split)?;
    let model = TrainedModel::train(spec, &split.train, hp, &mut run_to_completion)?;
    evaluate(&model, &split.test)
}

/// One fold per subject, run on up to `jobs` threads. Returns every fold's
/// outcome in subject order so completed folds survive a failing one.
pub fn run_cross_subject_folds(d: &Dataset, spec: &ModelSpec, hp: &Hyperparams, jobs: usize) -> Result<Vec<Result<EvalReport>>> {
    if d.subjects.len() < 2 {
        return Err(Error::InvalidInput("cross-subject evaluation needs at least two subjects".into()));
    }
    Ok(parallel_map(&d.subjects, jobs, |s| {
        log::info!("fold {s}: training {}", spec.kind);
        let r = cross_subject_fold(d, s, spec, hp);
        if let Ok(r) = &r {
            log::info!("fold {s}: accuracy {:.4} on {} samples", r.accuracy, r.n_samples);
        }
        r
    }))
}

/// Leave-one-subject-out evaluation with equal weight per subject.
pub fn cross_subject_experiment(d: &Dataset, spec: &ModelSpec, hp: &Hyperparams, jobs: usize) -> Result<ExperimentResult> {
    let folds = run_cross_subject_folds(d, spec, hp, jobs)?.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult::new("cross-subject", spec.kind.name(), hp.clone(), d.vocabulary.clone(), folds))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptationPoint {
    pub fraction: f64,
    pub accuracy: f64,
    pub train_size: usize,
    pub report: EvalReport,
}

/// Accuracy on the fixed held-out half of `subject` as growing shares of
/// that subject's other half join the training set.
pub fn adaptation_curve(d: &Dataset, subject: &str, fractions: &[f64], spec: &ModelSpec, hp: &Hyperparams, jobs: usize) -> Result<Vec<AdaptationPoint>> {
    if fractions.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig("adaptation fractions must be sorted".into()));
    }
    let splits = fractions.iter().map(|&f| split_adaptation(d, subject, f, hp.seed)).collect::<Result<Vec<_>>>()?;
    audit_adaptation(&splits.iter().collect::<Vec<_>>())?;
    let idx: Vec<usize> = (0..splits.len()).collect();
    parallel_map(&idx, jobs, |&i| {
        let split = &splits[i];
        let model = TrainedModel::train(spec, &split.train, hp, &mut run_to_completion)?;
        let report = evaluate(&model, &split.test)?;
        log::info!("fraction {}: accuracy {:.4}", fractions[i], report.accuracy);
        Ok(AdaptationPoint {
            fraction: fractions[i],
            accuracy: report.accuracy,
            train_size: split.train.len(),
            report,
        })
    })
    .into_iter()
    .collect()
}

/// Checks every adaptation split for overlap, and that all share one test set.
pub fn audit_adaptation(splits: &[&crate::data::Split]) -> Result<()> {
    for s in splits {
        audit_split(s)?;
    }
    if let Some(first) = splits.first() {
        let keys = |s: &crate::data::Split| s.test.samples.iter().map(|x| x.key()).collect::<Vec<_>>();
        let k0 = keys(first);
        if splits.iter().any(|s| keys(s) != k0) {
            return Err(Error::SplitOverlap("adaptation test halves differ across fractions".into()));
        }
    }
    Ok(())
}
