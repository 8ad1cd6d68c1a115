use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Hyperparams;

/// Test results for one held-out subject. Confusion rows are true classes,
/// columns predictions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(rename = "subject")]
    pub test_subject: String,
    #[serde(rename = "n")]
    pub n_samples: usize,
    pub accuracy: f64,
    pub confusion: Vec<Vec<usize>>,
    /// `None` for classes absent from the test set.
    pub per_class_accuracy: Vec<Option<f64>>,
}

impl EvalReport {
    /// Builds a report from `(true, predicted)` pairs.
    pub fn from_predictions(test_subject: &str, classes: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut confusion = vec![vec![0; classes]; classes];
        for &(t, p) in pairs {
            if t >= classes || p >= classes {
                return Err(Error::InvalidInput(format!("class pair ({t}, {p}) outside {classes} classes")));
            }
            confusion[t][p] += 1;
        }
        let hits: usize = (0..classes).map(|c| confusion[c][c]).sum();
        let per_class_accuracy = confusion
            .iter()
            .enumerate()
            .map(|(c, row)| {
                let n: usize = row.iter().sum();
                (n > 0).then(|| row[c] as f64 / n as f64)
            })
            .collect();
        Ok(EvalReport {
            test_subject: test_subject.to_string(),
            n_samples: pairs.len(),
            accuracy: hits as f64 / pairs.len() as f64,
            confusion,
            per_class_accuracy,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.confusion.len()
    }

    pub fn trace(&self) -> usize {
        (0..self.num_classes()).map(|c| self.confusion[c][c]).sum()
    }

    /// Confusion counts restricted to classes `a` and `b`:
    /// `(correct, total)` over test samples of either class predicted as
    /// either class.
    pub fn pair_counts(&self, a: usize, b: usize) -> (usize, usize) {
        let m = &self.confusion;
        (m[a][a] + m[b][b], m[a][a] + m[a][b] + m[b][a] + m[b][b])
    }

    /// How well the model tells `a` from `b`: `pair_counts` as a fraction.
    pub fn pairwise_accuracy(&self, a: usize, b: usize) -> Option<f64> {
        let (hit, n) = self.pair_counts(a, b);
        (n > 0).then(|| hit as f64 / n as f64)
    }
}

/// Per-fold reports of one experiment plus their aggregate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub model: String,
    pub hyperparams: Hyperparams,
    pub folds: Vec<EvalReport>,
    pub mean_accuracy: f64,
    /// Population standard deviation over folds.
    pub std_accuracy: f64,
    pub seed: u64,
    pub vocabulary: Vec<String>,
}

impl ExperimentResult {
    pub fn new(experiment: &str, model: &str, hyperparams: Hyperparams, vocabulary: Vec<String>, folds: Vec<EvalReport>) -> Self {
        let (mean_accuracy, std_accuracy) = mean_std(&folds.iter().map(|f| f.accuracy).collect::<Vec<_>>());
        ExperimentResult {
            experiment: experiment.to_string(),
            model: model.to_string(),
            seed: hyperparams.seed,
            hyperparams,
            folds,
            mean_accuracy,
            std_accuracy,
            vocabulary,
        }
    }
}

/// Mean and population standard deviation; `(0, 0)` for no values.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accounting_identities() {
        let pairs = [(0, 0), (0, 1), (1, 1), (2, 1), (2, 2), (2, 2)];
        let r = EvalReport::from_predictions("s", 4, &pairs).unwrap();
        assert_eq!(r.confusion.iter().flatten().sum::<usize>(), 6);
        assert_eq!(r.accuracy, r.trace() as f64 / 6.0);
        let rows: Vec<usize> = r.confusion.iter().map(|row| row.iter().sum()).collect();
        assert_eq!(rows, vec![2, 1, 3, 0]);
        assert_eq!(r.per_class_accuracy, vec![Some(0.5), Some(1.0), Some(2.0 / 3.0), None]);
        assert_eq!(r.pair_counts(0, 1), (2, 3));
        assert_eq!(r.pairwise_accuracy(0, 3), Some(1.0));
        assert_eq!(r.pairwise_accuracy(3, 3), None);
        assert!(EvalReport::from_predictions("s", 2, &[]).is_err());
    }

    #[test]
    fn population_std() {
        let (m, s) = mean_std(&[0.5, 0.7, 0.9]);
        assert!((m - 0.7).abs() < 1e-15);
        assert!((s - (0.08f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
