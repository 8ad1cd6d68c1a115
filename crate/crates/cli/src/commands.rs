use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use serde::Serialize;
use signkit_core::data::{
    audit_split, load_dataset, read_frame_stream, save_dataset, split_adaptation, split_cross_subject, Dataset, SignSample, SynthConfig,
};
use signkit_core::eval::{audit_adaptation, evaluate, export_embeddings, parallel_map, write_embeddings_csv, write_reports, EvalReport, ExperimentResult};
use signkit_core::models::features::{write_features_csv, FeatureRow};
use signkit_core::models::{feature_input, EpochStats, Hyperparams, MaxFused, ModelKind, ModelSpec, Predictor, TrainedModel};
use signkit_core::preprocess::{segment_stream, HandCropParams, SegmentParams};
use signkit_core::{Error, Result as CoreResult};

use crate::config::{parse_pairs, Settings};
use crate::exit::{Failure, USAGE};

type Result<T> = std::result::Result<T, Failure>;

fn required_path(s: &Settings, key: &str) -> Result<PathBuf> {
    s.explicit::<PathBuf>(key)?.ok_or_else(|| Failure::new(USAGE, format!("--{key} is required")))
}

fn load(s: &Settings) -> Result<Dataset> {
    let root = required_path(s, "data")?;
    let loaded = load_dataset(&root)?;
    for w in &loaded.warnings {
        log::warn!("{w}");
    }
    log::info!(
        "loaded {} samples, {} classes, {} subjects from {}",
        loaded.dataset.len(),
        loaded.dataset.num_classes(),
        loaded.dataset.subjects.len(),
        root.display()
    );
    Ok(loaded.dataset)
}

fn write_json<V: Serialize>(path: &Path, v: &V) -> Result<()> {
    let json = serde_json::to_string_pretty(v).map_err(|e| Failure::new(crate::exit::INTERNAL, e.to_string()))?;
    std::fs::write(path, json + "\n").map_err(|e| Failure::new(USAGE, format!("cannot write {}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::new(USAGE, format!("cannot create {}: {e}", dir.display())))
}

fn model_kind(s: &Settings) -> Result<ModelKind> {
    Ok(s.value::<String>("model")?.parse()?)
}

/// Model and optimizer settings. Flags and config entries override the
/// `template` (a checkpoint's own settings), which overrides the defaults.
fn resolve(s: &Settings, template: Option<&TrainedModel>) -> Result<(ModelSpec, Hyperparams)> {
    let kind = match (s.explicit::<String>("model")?, template) {
        (Some(m), _) => m.parse()?,
        (None, Some(t)) => t.spec.kind,
        (None, None) => model_kind(s)?,
    };
    let (mut spec, mut hp) = match template {
        Some(t) => (ModelSpec { kind, ..t.spec.clone() }, t.hyperparams.clone()),
        None => (ModelSpec::new(kind), Hyperparams::for_kind(kind)),
    };
    macro_rules! pick {
        ($field:expr, $key:literal, $ty:ty) => {
            if let Some(v) = s.explicit::<$ty>($key)? {
                $field = v;
            } else if template.is_none() {
                $field = s.value::<$ty>($key)?;
            }
        };
    }
    pick!(spec.state_size, "state-size", usize);
    pick!(spec.lstm_layers, "layers", usize);
    pick!(spec.frames, "frames", usize);
    pick!(hp.epochs, "epochs", usize);
    pick!(hp.batch_size, "batch-size", usize);
    pick!(hp.l2_beta, "l2-beta", f64);
    pick!(hp.dropout_keep, "dropout-keep", f64);
    pick!(hp.seed, "seed", u64);
    if let Some(lr) = s.explicit::<f64>("lr")? {
        hp.learning_rate = lr;
    }
    if let Some(c) = s.explicit::<f64>("clip-norm")? {
        hp.clip_norm = Some(c);
    }
    spec.validate()?;
    hp.validate()?;
    Ok((spec, hp))
}

fn log_epoch(branch: &str, e: &EpochStats) -> ControlFlow<()> {
    log::debug!("{branch} epoch {}: loss {:.5}, train accuracy {:.4}", e.epoch, e.loss, e.train_accuracy);
    ControlFlow::Continue(())
}

fn check_modality(kind: ModelKind, d: &Dataset) -> CoreResult<()> {
    if kind.needs_hand_volumes() && !d.has_hand_volumes() {
        return Err(Error::MissingModality(format!("{} needs hand volumes for every sample", kind.name())));
    }
    Ok(())
}

pub fn synth(s: &Settings) -> Result<()> {
    let out = required_path(s, "out")?;
    let hands = s.value::<bool>("hands")?.then(|| -> Result<HandCropParams> {
        Ok(HandCropParams {
            patch: s.value("patch")?,
            out_hw: s.value("patch-out")?,
            frames: s.value("hand-frames")?,
            ..HandCropParams::default()
        })
    });
    let cfg = SynthConfig {
        num_classes: s.value("classes")?,
        num_subjects: s.value("subjects")?,
        samples_per_class_per_subject: s.value("samples-per-class")?,
        frame_length_range: (s.value("min-frames")?, s.value("max-frames")?),
        noise_sigma: s.value("noise-sigma")?,
        twin_class_pairs: parse_pairs(&s.value::<String>("twin-pairs")?)?,
        relation_class_pairs: parse_pairs(&s.value::<String>("relation-pairs")?)?,
        hands: hands.transpose()?,
        rng_seed: s.value("seed")?,
        ..SynthConfig::default()
    };
    let d = signkit_core::data::generate_synthetic(&cfg)?;
    save_dataset(&d, &out)?;
    log::info!("wrote {} samples to {}", d.len(), out.display());
    Ok(())
}

pub fn train(s: &Settings) -> Result<()> {
    let d = load(s)?;
    let out = required_path(s, "out")?;
    let (spec, hp) = resolve(s, None)?;
    check_modality(spec.kind, &d)?;
    log::info!("training {} for {} epochs at lr {}", spec.kind, hp.epochs, hp.learning_rate);
    let model = TrainedModel::train(&spec, &d, &hp, &mut log_epoch)?;
    for (h, last) in model.history.iter().zip(model.final_stats()) {
        log::info!("{}: final loss {:.5}, train accuracy {:.4}", h.branch, last.loss, last.train_accuracy);
    }
    create_dir(&out)?;
    model.save(&out.join("model.sgnm"))?;
    write_json(&out.join("history.json"), &model.history)?;
    log::info!("wrote {}", out.join("model.sgnm").display());
    Ok(())
}

/// One model, or two fused by element-wise maximum.
enum Fitted {
    One(TrainedModel),
    Two(TrainedModel, TrainedModel),
}

impl Fitted {
    fn name(&self) -> String {
        match self {
            Fitted::One(m) => m.kind().name().to_string(),
            Fitted::Two(..) => ModelKind::MaxFusion.name().to_string(),
        }
    }

    fn evaluate(&self, test: &Dataset) -> CoreResult<EvalReport> {
        match self {
            Fitted::One(m) => evaluate(m, test),
            Fitted::Two(a, b) => evaluate(&MaxFused::new(a as &dyn Predictor, b as &dyn Predictor)?, test),
        }
    }
}

type Template = (ModelSpec, Hyperparams);

fn fit_templates(templates: &[Template], train: &Dataset) -> CoreResult<Fitted> {
    let mut models = templates
        .iter()
        .map(|(spec, hp)| TrainedModel::train(spec, train, hp, &mut log_epoch))
        .collect::<CoreResult<Vec<_>>>()?;
    Ok(match models.len() {
        1 => Fitted::One(models.remove(0)),
        _ => {
            let b = models.remove(1);
            Fitted::Two(models.remove(0), b)
        }
    })
}

fn check_vocabulary(m: &TrainedModel, d: &Dataset) -> CoreResult<()> {
    if m.vocabulary != d.vocabulary {
        return Err(Error::VocabularyMismatch(format!(
            "checkpoint vocabulary ({} classes) differs from the dataset's ({} classes)",
            m.vocabulary.len(),
            d.vocabulary.len()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct CurvePoint {
    fraction: f64,
    accuracy: f64,
    train_size: usize,
}

pub fn eval(s: &Settings) -> Result<()> {
    let d = load(s)?;
    let out = required_path(s, "out")?;
    let paths: Vec<PathBuf> = s.list("checkpoint")?;
    if paths.len() > 2 {
        return Err(Failure::new(USAGE, "at most two checkpoints can be fused"));
    }
    let checkpoints = paths.iter().map(|p| TrainedModel::load(p)).collect::<CoreResult<Vec<_>>>()?;
    for m in &checkpoints {
        check_vocabulary(m, &d)?;
    }
    let protocol = s.value::<String>("protocol")?;
    let subject = s.explicit::<String>("subject")?;
    let jobs = s.value::<usize>("jobs")?.max(1);

    let result = match protocol.as_str() {
        "single-split" => {
            let fitted = match checkpoints.len() {
                0 => return Err(Failure::new(USAGE, "single-split evaluation needs --checkpoint")),
                1 => Fitted::One(checkpoints.into_iter().next().expect("one checkpoint")),
                _ => {
                    let mut it = checkpoints.into_iter();
                    let a = it.next().expect("two checkpoints");
                    Fitted::Two(a, it.next().expect("two checkpoints"))
                }
            };
            let test = match &subject {
                Some(sub) => split_cross_subject(&d, sub)?.test,
                None => d.clone(),
            };
            let report = fitted.evaluate(&test)?;
            log::info!("accuracy {:.4} on {} samples", report.accuracy, report.n_samples);
            let hp = match &fitted {
                Fitted::One(m) | Fitted::Two(m, _) => m.hyperparams.clone(),
            };
            ExperimentResult::new("single-split", &fitted.name(), hp, d.vocabulary.clone(), vec![report])
        }
        "cross-subject" | "adaptation" => {
            let templates: Vec<Template> = if checkpoints.is_empty() {
                vec![resolve(s, None)?]
            } else {
                checkpoints.iter().map(|m| resolve(s, Some(m))).collect::<Result<_>>()?
            };
            for (spec, _) in &templates {
                check_modality(spec.kind, &d)?;
            }
            let model_name = if templates.len() == 2 { ModelKind::MaxFusion.name() } else { templates[0].0.kind.name() };
            let hp = templates[0].1.clone();
            if protocol == "cross-subject" {
                if d.subjects.len() < 2 {
                    return Err(Failure::new(USAGE, "cross-subject evaluation needs at least two subjects"));
                }
                let folds = parallel_map(&d.subjects, jobs, |sub| {
                    let split = split_cross_subject(&d, sub)?;
                    audit_split(&split)?;
                    log::info!("fold {sub}: training on {} samples", split.train.len());
                    let r = fit_templates(&templates, &split.train)?.evaluate(&split.test)?;
                    log::info!("fold {sub}: accuracy {:.4}", r.accuracy);
                    Ok(r)
                })
                .into_iter()
                .collect::<CoreResult<Vec<_>>>()?;
                ExperimentResult::new("cross-subject", model_name, hp, d.vocabulary.clone(), folds)
            } else {
                let subject = match subject {
                    Some(x) => x,
                    None => d.subjects.first().cloned().ok_or(Error::EmptyDataset)?,
                };
                let fractions: Vec<f64> = s.list("fractions")?;
                if fractions.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Failure::new(USAGE, "adaptation fractions must be sorted"));
                }
                let splits = fractions
                    .iter()
                    .map(|&f| split_adaptation(&d, &subject, f, hp.seed))
                    .collect::<CoreResult<Vec<_>>>()?;
                audit_adaptation(&splits.iter().collect::<Vec<_>>())?;
                let reports = parallel_map(&splits, jobs, |split| fit_templates(&templates, &split.train)?.evaluate(&split.test))
                    .into_iter()
                    .collect::<CoreResult<Vec<_>>>()?;
                let curve: Vec<CurvePoint> = fractions
                    .iter()
                    .zip(&splits)
                    .zip(&reports)
                    .map(|((&fraction, split), r)| {
                        log::info!("fraction {fraction}: accuracy {:.4}", r.accuracy);
                        CurvePoint {
                            fraction,
                            accuracy: r.accuracy,
                            train_size: split.train.len(),
                        }
                    })
                    .collect();
                create_dir(&out)?;
                write_json(&out.join("curve.json"), &curve)?;
                let folds = reports
                    .into_iter()
                    .zip(&fractions)
                    .map(|(mut r, f)| {
                        r.test_subject = format!("{subject}@{f}");
                        r
                    })
                    .collect();
                ExperimentResult::new("adaptation", model_name, hp, d.vocabulary.clone(), folds)
            }
        }
        other => {
            return Err(Failure::new(
                USAGE,
                format!("unknown protocol {other:?}; expected single-split, cross-subject or adaptation"),
            ))
        }
    };
    write_reports(&result, &out)?;
    log::info!("mean accuracy {:.4} (std {:.4}); reports in {}", result.mean_accuracy, result.std_accuracy, out.display());
    Ok(())
}

#[derive(Serialize)]
struct Segment {
    start: usize,
    end: usize,
}

pub fn segment(s: &Settings) -> Result<()> {
    let stream = required_path(s, "stream")?;
    let out = required_path(s, "out")?;
    let frames = read_frame_stream(&stream)?;
    let params = SegmentParams {
        velocity_threshold: s.value("velocity-threshold")?,
        smoothing_window: s.value("smoothing-window")?,
        min_segment_len: s.value("min-segment-len")?,
        merge_gap: s.value("merge-gap")?,
    };
    let segs: Vec<Segment> = segment_stream(&frames, &params)?
        .into_iter()
        .map(|(start, end)| Segment { start, end })
        .collect();
    log::info!("{} segments in {} frames", segs.len(), frames.len());
    write_json(&out, &segs)
}

fn feature_row(s: &SignSample) -> CoreResult<Option<FeatureRow>> {
    if s.frames.len() < 2 {
        log::warn!("skipping {}/{}/{}: fewer than 2 frames", s.subject_id, s.class_label, s.sample_id);
        return Ok(None);
    }
    Ok(Some(FeatureRow {
        subject: s.subject_id.clone(),
        label: s.class_label,
        features: feature_input(s)?,
    }))
}

pub fn features(s: &Settings) -> Result<()> {
    let d = load(s)?;
    let out = required_path(s, "out")?;
    let mut rows = Vec::with_capacity(d.len());
    for sample in &d.samples {
        rows.extend(feature_row(sample)?);
    }
    write_features_csv(&out, &rows)?;
    log::info!("wrote {} feature rows to {}", rows.len(), out.display());
    Ok(())
}

pub fn embed(s: &Settings) -> Result<()> {
    let d = load(s)?;
    let out = required_path(s, "out")?;
    let model = TrainedModel::load(&required_path(s, "checkpoint")?)?;
    check_vocabulary(&model, &d)?;
    let e = export_embeddings(&model, &d)?;
    write_embeddings_csv(&out, &e)?;
    log::info!("wrote {} embeddings of dimension {} to {}", e.rows.len(), e.dim(), out.display());
    Ok(())
}
