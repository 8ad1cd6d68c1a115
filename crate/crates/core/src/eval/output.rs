use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::report::ExperimentResult;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::TrainedModel;

/// Skeletal embeddings (head inputs) of every sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Embeddings {
    pub subjects: Vec<String>,
    pub labels: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl Embeddings {
    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

pub fn export_embeddings(model: &TrainedModel, d: &Dataset) -> Result<Embeddings> {
    let mut e = Embeddings {
        subjects: Vec::with_capacity(d.len()),
        labels: Vec::with_capacity(d.len()),
        rows: Vec::with_capacity(d.len()),
    };
    for s in &d.samples {
        e.rows.push(model.embed_sample(s)?);
        e.subjects.push(s.subject_id.clone());
        e.labels.push(s.class_label);
    }
    Ok(e)
}

/// CSV with header `subject,label,e000..`.
pub fn write_embeddings_csv(path: &Path, e: &Embeddings) -> Result<()> {
    let mut s = String::from("subject,label");
    for i in 0..e.dim() {
        let _ = write!(s, ",e{i:03}");
    }
    s.push('\n');
    for ((subject, label), row) in e.subjects.iter().zip(&e.labels).zip(&e.rows) {
        let _ = write!(s, "{subject},{label}");
        for v in row {
            let _ = write!(s, ",{v:?}");
        }
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn confusion_csv(vocabulary: &[String], m: &[Vec<usize>]) -> String {
    let mut s = vocabulary.join(",");
    s.push('\n');
    for row in m {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Writes `metrics.json` and one `confusion_<subject>.csv` per fold.
/// Returns the written paths.
pub fn write_reports(result: &ExperimentResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    let metrics = out_dir.join("metrics.json");
    let json = serde_json::to_string_pretty(result).expect("result serializes");
    std::fs::write(&metrics, json + "\n").map_err(|e| Error::io(&metrics, e))?;
    written.push(metrics);
    for fold in &result.folds {
        let p = out_dir.join(format!("confusion_{}.csv", fold.test_subject));
        std::fs::write(&p, confusion_csv(&result.vocabulary, &fold.confusion)).map_err(|e| Error::io(&p, e))?;
        written.push(p);
    }
    Ok(written)
}

pub fn read_metrics(path: &Path) -> Result<ExperimentResult> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}
