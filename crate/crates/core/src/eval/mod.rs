//! Cross-subject experiments, adaptation curves, embedding export and
//! report files.

mod experiment;
mod output;
mod report;

pub use experiment::{
    adaptation_curve, audit_adaptation, cross_subject_experiment, cross_subject_fold, evaluate, parallel_map, run_cross_subject_folds, AdaptationPoint,
};
pub use output::{export_embeddings, read_metrics, write_embeddings_csv, write_reports, Embeddings};
pub use report::{mean_std, EvalReport, ExperimentResult};
