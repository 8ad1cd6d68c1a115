//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test -p signkit-core --test acceptance -- 3 5` runs a subset.
//! Failures are reported but only change the exit status under `--strict`.

use std::collections::{BTreeSet, HashSet};
use std::sync::OnceLock;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng as _;
use signkit_core::data::{
    audit_split, generate_synthetic, load_dataset, read_hpv, save_dataset, split_adaptation, split_cross_subject, write_hpv, Dataset,
    HandVolume, SampleKey, SynthConfig,
};
use signkit_core::eval::{adaptation_curve, audit_adaptation, evaluate, write_reports, EvalReport, ExperimentResult};
use signkit_core::models::features::extract_features126;
use signkit_core::models::{CnnConfig, EpochStats, HandCnnModel, HandPair, Hyperparams, MaxFused, ModelKind, ModelSpec, TrainedModel};
use signkit_core::nn::checkpoint::Checkpoint;
use signkit_core::nn::{conv3d_forward, finite_diff_gradcheck, lstm_cell_forward, maxpool3d, Conv3dLayer, LstmParams, LstmState, ParamSet, Role, Tensor};
use signkit_core::preprocess::{spatial_augment, HandCropParams, SkelTensor};
use signkit_core::rng::{substream, Rng};
use signkit_core::{AiLstm64, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

type Criterion = fn() -> Result<Outcome>;

const CRITERIA: [(&str, Criterion, Duration); 9] = [
    ("gradient fidelity", gradient_fidelity, Duration::from_secs(120)),
    ("oracle equivalence", oracle_equivalence, Duration::from_secs(60)),
    ("overfit sanity", overfit_sanity, Duration::from_secs(600)),
    ("architecture ordering", architecture_ordering, Duration::from_secs(7200)),
    ("fusion confusion repair", fusion_confusion_repair, Duration::from_secs(7200)),
    ("adaptation trend", adaptation_trend, Duration::from_secs(7200)),
    ("split soundness", split_soundness, Duration::from_secs(600)),
    ("determinism", determinism, Duration::from_secs(600)),
    ("format round-trips", format_round_trips, Duration::from_secs(600)),
];

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if std::env::args().any(|a| a == "--list") {
        for (i, (name, _, _)) in CRITERIA.iter().enumerate() {
            println!("criterion_{}_{}: test", i + 1, name.replace(' ', "_"));
        }
        return ExitCode::SUCCESS;
    }
    let mut failed = 0;
    for (i, (name, run, budget)) in CRITERIA.iter().enumerate() {
        let n = i + 1;
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = run().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let took = t0.elapsed();
        let in_budget = took <= *budget;
        let pass = outcome.pass && in_budget;
        failed += usize::from(!pass);
        let over = if in_budget { String::new() } else { format!(", over the {}s budget", budget.as_secs()) };
        println!(
            "{} criterion {n} ({name}): {} [{:.1}s{over}]",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            took.as_secs_f64()
        );
    }
    if failed == 0 {
        return ExitCode::SUCCESS;
    }
    println!("{failed} criterion(s) failed");
    if std::env::args().any(|a| a == "--strict") {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

// ---------------------------------------------------------------- 1

fn random_skel(frames: usize, joints: usize, rng: &mut Rng) -> SkelTensor<f64> {
    SkelTensor::from_fn(frames, joints, |_, _, _| rng.random_range(-1.0..1.0))
}

fn random_volume(dims: [usize; 4], rng: &mut Rng) -> Tensor<f64> {
    Tensor::from_fn(&dims, |_| rng.random_range(0.0..1.0))
}

fn gradient_fidelity() -> Result<Outcome> {
    const TOL: f64 = 1e-4;
    const EPS: f64 = 1e-5;
    // Piecewise linear: a small step rarely crosses a ReLU or pooling switch.
    const CNN_EPS: f64 = 1e-7;
    let mut worst: Vec<String> = Vec::new();
    let mut max_err: f64 = 0.0;
    let mut record = |what: &str, seed: u64, r: signkit_core::nn::GradCheckReport| {
        if r.max_rel_error > max_err {
            max_err = r.max_rel_error;
        }
        if r.max_rel_error >= TOL {
            worst.push(format!("{what} seed {seed}: {:.2e} at {}", r.max_rel_error, r.worst));
        }
    };
    for seed in 0..3u64 {
        let mut rng = substream(seed, "acceptance.gradcheck");
        let labels = [0usize, 3, 4];

        let m = AiLstm64::new(6, 5, 2, 5, &mut rng);
        let xs: Vec<_> = labels.iter().map(|_| random_skel(20, 6, &mut rng)).collect();
        let batch: Vec<_> = xs.iter().zip(labels).collect();
        record("ai-lstm", seed, finite_diff_gradcheck(&m, &batch, 0.008, EPS, seed)?);

        let m = AiLstm64::new(16, 5, 2, 5, &mut rng);
        let xs = xs.iter().map(|x| Ok(spatial_augment(x, 20)?.into_skel())).collect::<Result<Vec<_>>>()?;
        let batch: Vec<_> = xs.iter().zip(labels).collect();
        record("spatial-ai-lstm", seed, finite_diff_gradcheck(&m, &batch, 0.008, EPS, seed)?);

        let dims = [8, 12, 12, 3];
        let mut m = HandCnnModel::<f64>::new(CnnConfig::with_defaults(dims)?, 5, &mut rng)?;
        // Zero biases over dead channels put pre-activations exactly on the
        // ReLU kink, where central differences are meaningless.
        m.visit_mut("", &mut |_, role, t| {
            if role == Role::Bias {
                t.as_mut_slice().iter_mut().for_each(|v| *v = rng.random_range(-0.1..0.1));
            }
        });
        let xs: Vec<_> = labels
            .iter()
            .map(|_| HandPair {
                left: random_volume(dims, &mut rng),
                right: random_volume(dims, &mut rng),
            })
            .collect();
        let batch: Vec<_> = xs.iter().zip(labels).collect();
        record("cnn3d", seed, finite_diff_gradcheck(&m, &batch, 0.008, CNN_EPS, seed)?);
    }
    let detail = if worst.is_empty() {
        format!("max relative error {max_err:.2e} < {TOL:e} over 3 models x 3 seeds")
    } else {
        worst.join("; ")
    };
    Ok(Outcome::new(worst.is_empty(), detail))
}

// ---------------------------------------------------------------- 2

/// Valid, stride-1 3D convolution written directly from its definition.
fn conv_oracle(x: &[f64], xd: [usize; 4], k: &[f64], kd: [usize; 5], b: &[f64]) -> Vec<f64> {
    let [f, h, w, c] = xd;
    let [ko, kt, kh, kw, _] = kd;
    let (fo, ho, wo) = (f - kt + 1, h - kh + 1, w - kw + 1);
    let mut out = Vec::new();
    for t in 0..fo {
        for y in 0..ho {
            for z in 0..wo {
                for o in 0..ko {
                    let mut s = b[o];
                    for a in 0..kt {
                        for p in 0..kh {
                            for q in 0..kw {
                                for ch in 0..c {
                                    let xv = x[(((t + a) * h + (y + p)) * w + (z + q)) * c + ch];
                                    let kv = k[(((o * kt + a) * kh + p) * kw + q) * c + ch];
                                    s += xv * kv;
                                }
                            }
                        }
                    }
                    out.push(s);
                }
            }
        }
    }
    out
}

fn pool_oracle(x: &[f64], xd: [usize; 4], win: [usize; 3]) -> Vec<f64> {
    let [f, h, w, c] = xd;
    let mut out = Vec::new();
    for t in 0..f / win[0] {
        for y in 0..h / win[1] {
            for z in 0..w / win[2] {
                for ch in 0..c {
                    let mut m = f64::NEG_INFINITY;
                    for a in 0..win[0] {
                        for p in 0..win[1] {
                            for q in 0..win[2] {
                                m = m.max(x[(((t * win[0] + a) * h + y * win[1] + p) * w + z * win[2] + q) * c + ch]);
                            }
                        }
                    }
                    out.push(m);
                }
            }
        }
    }
    out
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// One LSTM step from the gate equations, with each gate's weight split
/// into its recurrent and input blocks.
fn lstm_oracle(x: &[f64], h: &[f64], c: &[f64], p: &LstmParams<f64>) -> (Vec<f64>, Vec<f64>) {
    let s = h.len();
    let pre = |g: usize, r: usize| {
        let row = p.w[g].row(r);
        let rec: f64 = (0..s).map(|k| row[k] * h[k]).sum();
        let inp: f64 = (0..x.len()).map(|k| row[s + k] * x[k]).sum();
        rec + inp + p.b[g].as_slice()[r]
    };
    let mut h2 = Vec::new();
    let mut c2 = Vec::new();
    for r in 0..s {
        let f = sigmoid(pre(0, r));
        let i = sigmoid(pre(1, r));
        let g = pre(2, r).tanh();
        let o = sigmoid(pre(3, r));
        let cn = f * c[r] + i * g;
        c2.push(cn);
        h2.push(o * cn.tanh());
    }
    (h2, c2)
}

/// The seven statistics per series from their textbook formulas.
fn features_oracle(x: &SkelTensor<f64>) -> Vec<f64> {
    let mut out = Vec::new();
    for j in 0..6 {
        for a in 0..3 {
            let s: Vec<f64> = (0..x.frames()).map(|t| x.get(t, j, a)).collect();
            let n = s.len() as f64;
            let mean = s.iter().sum::<f64>() / n;
            let var = s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let sd = var.sqrt();
            let skew = s.iter().map(|v| ((v - mean) / sd).powi(3)).sum::<f64>() / n;
            let kurt = s.iter().map(|v| ((v - mean) / sd).powi(4)).sum::<f64>() / n - 3.0;
            let area = s.iter().map(|v| v.abs()).sum::<f64>();
            let energy = (1..s.len()).map(|t| (s[t] - s[t - 1]).powi(2)).sum::<f64>();
            let max = s.iter().cloned().fold(f64::MIN, f64::max);
            let min = s.iter().cloned().fold(f64::MAX, f64::min);
            out.extend([mean, area, skew, kurt, energy, max - min, var]);
        }
    }
    out
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn oracle_equivalence() -> Result<Outcome> {
    const TOL: f64 = 1e-12;
    const INSTANCES: usize = 100;
    let mut rng = substream(2, "acceptance.oracles");
    let mut worst = [0.0f64; 4];
    for _ in 0..INSTANCES {
        let xd = [rng.random_range(2..6), rng.random_range(2..7), rng.random_range(2..7), rng.random_range(1..4)];
        let kd = [rng.random_range(1..4), rng.random_range(1..=xd[0]), rng.random_range(1..=xd[1]), rng.random_range(1..=xd[2]), xd[3]];
        let x = Tensor::from_fn(&xd, |_| rng.random_range(-1.0..1.0));
        let layer = Conv3dLayer {
            kernel: Tensor::from_fn(&kd, |_| rng.random_range(-1.0..1.0)),
            bias: Tensor::from_fn(&[kd[0]], |_| rng.random_range(-1.0..1.0)),
        };
        let y = conv3d_forward(&x, &layer)?;
        let want = conv_oracle(x.as_slice(), xd, layer.kernel.as_slice(), kd, layer.bias.as_slice());
        worst[0] = worst[0].max(max_abs_diff(y.as_slice(), &want));

        let win = [rng.random_range(1..=xd[0]), rng.random_range(1..=xd[1]), rng.random_range(1..=xd[2])];
        let (y, _) = maxpool3d(&x, win)?;
        worst[1] = worst[1].max(max_abs_diff(y.as_slice(), &pool_oracle(x.as_slice(), xd, win)));

        let (d, s) = (rng.random_range(1..8), rng.random_range(1..8));
        let mut p = LstmParams::<f64>::zeros(d, s);
        p.visit_mut("", &mut |_, _, t| t.as_mut_slice().iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0)));
        let xv: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let prev = LstmState {
            h: (0..s).map(|_| rng.random_range(-1.0..1.0)).collect(),
            c: (0..s).map(|_| rng.random_range(-2.0..2.0)).collect(),
        };
        let (st, _) = lstm_cell_forward(&xv, &prev, &p)?;
        let (h, c) = lstm_oracle(&xv, &prev.h, &prev.c, &p);
        worst[2] = worst[2].max(max_abs_diff(&st.h, &h)).max(max_abs_diff(&st.c, &c));

        let frames = rng.random_range(3..40);
        let skel = SkelTensor::from_fn(frames, 6, |_, _, _| rng.random_range(-1.0..1.0));
        worst[3] = worst[3].max(max_abs_diff(&extract_features126(&skel)?, &features_oracle(&skel)));
    }
    let names = ["conv3d", "maxpool3d", "lstm_cell_forward", "extract_features126"];
    let detail = names.iter().zip(worst).map(|(n, w)| format!("{n} {w:.1e}")).collect::<Vec<_>>().join(", ");
    Ok(Outcome::new(
        worst.iter().all(|w| *w < TOL),
        format!("max |diff| over {INSTANCES} instances each: {detail}"),
    ))
}

// ---------------------------------------------------------------- 3

fn overfit_sanity() -> Result<Outcome> {
    const BUDGET: Duration = Duration::from_secs(600);
    let d = generate_synthetic(&SynthConfig {
        num_classes: 5,
        num_subjects: 1,
        samples_per_class_per_subject: 100,
        rng_seed: 3,
        ..SynthConfig::default()
    })?;
    let kind = ModelKind::AiLstm;
    let spec = ModelSpec::new(kind);
    let hp = Hyperparams {
        epochs: 300,
        seed: 3,
        ..Hyperparams::for_kind(kind)
    };
    let t0 = Instant::now();
    let mut best = (0.0f64, 0usize);
    let mut timed_out = false;
    let mut hook = |_: &str, e: &EpochStats| {
        if e.train_accuracy > best.0 {
            best = (e.train_accuracy, e.epoch + 1);
        }
        if e.train_accuracy >= 0.99 {
            return ControlFlow::Break(());
        }
        if t0.elapsed() > BUDGET {
            timed_out = true;
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    };
    let m = TrainedModel::train(&spec, &d, &hp, &mut hook)?;
    let last = m.final_stats()[0].clone();
    let epochs = last.epoch + 1;
    let pass = last.train_accuracy >= 0.99;
    let why = if pass {
        String::new()
    } else if timed_out {
        format!("; stopped by the {}s budget", BUDGET.as_secs())
    } else {
        "; epoch limit reached".into()
    };
    Ok(Outcome::new(
        pass,
        format!(
            "S=50 x2, lr {}, batch 64, keep 0.5, beta 0.008 on {} samples: train accuracy {:.3} after {epochs} epochs (best {:.3} at epoch {}, loss {:.3}){why}",
            hp.learning_rate,
            d.len(),
            last.train_accuracy,
            best.0,
            best.1,
            last.loss
        ),
    ))
}

// ---------------------------------------------------------------- 4, 5, 6

const TWINS: [(usize, usize); 4] = [(0, 1), (2, 3), (4, 5), (6, 7)];
const SUITE_SEEDS: [u64; 3] = [0, 1, 2];

/// Cross-subject results for one synthetic seed, all folds pooled.
struct SeedRun {
    seed: u64,
    ai: f64,
    spatial: f64,
    fusion: f64,
    twins_ai: f64,
    twins_fusion: f64,
}

fn suite_dataset(seed: u64) -> Result<Dataset> {
    generate_synthetic(&SynthConfig {
        num_classes: 20,
        num_subjects: 12,
        samples_per_class_per_subject: 2,
        frame_length_range: (30, 60),
        twin_class_pairs: TWINS.to_vec(),
        relation_class_pairs: vec![(8, 9), (10, 11), (12, 13), (14, 15)],
        relation_offset: 0.03,
        hands: Some(HandCropParams {
            frames: 4,
            out_hw: 12,
            ..HandCropParams::default()
        }),
        rng_seed: seed,
        ..SynthConfig::default()
    })
}

// Desk-scale settings: beta 0.008 swamps the data term for S=12 models.
fn suite_model(kind: ModelKind, seed: u64) -> (ModelSpec, Hyperparams) {
    let spec = ModelSpec {
        state_size: 12,
        cnn_channels: [4, 8, 8, 8],
        cnn_fc: [32, 16],
        ..ModelSpec::new(kind)
    };
    let (epochs, learning_rate) = if kind == ModelKind::Cnn3d { (30, 3e-3) } else { (40, 1e-2) };
    let hp = Hyperparams {
        epochs,
        learning_rate,
        l2_beta: 1e-4,
        dropout_keep: 0.8,
        seed,
        ..Hyperparams::default()
    };
    (spec, hp)
}

fn run_seed(seed: u64) -> Result<SeedRun> {
    let d = suite_dataset(seed)?;
    let mut hook = |_: &str, _: &EpochStats| ControlFlow::Continue(());
    let mut train = |kind, set: &Dataset| {
        let (spec, hp) = suite_model(kind, seed);
        TrainedModel::train(&spec, set, &hp, &mut hook)
    };
    let (mut ai, mut spatial, mut fusion) = (Vec::new(), Vec::new(), Vec::new());
    for subject in &d.subjects {
        let split = split_cross_subject(&d, subject)?;
        let a = train(ModelKind::AiLstm, &split.train)?;
        let s = train(ModelKind::SpatialAiLstm, &split.train)?;
        let c = train(ModelKind::Cnn3d, &split.train)?;
        ai.push(evaluate(&a, &split.test)?);
        spatial.push(evaluate(&s, &split.test)?);
        fusion.push(evaluate(&MaxFused::new(&a, &c)?, &split.test)?);
    }
    let mean = |r: &[EvalReport]| r.iter().map(|r| r.accuracy).sum::<f64>() / r.len() as f64;
    Ok(SeedRun {
        seed,
        ai: mean(&ai),
        spatial: mean(&spatial),
        fusion: mean(&fusion),
        twins_ai: pairwise(&ai, &TWINS),
        twins_fusion: pairwise(&fusion, &TWINS),
    })
}

/// Criteria 4 and 5 share one 3-seed cross-subject suite.
fn suite() -> std::result::Result<&'static [SeedRun], String> {
    static SUITE: OnceLock<std::result::Result<Vec<SeedRun>, String>> = OnceLock::new();
    SUITE
        .get_or_init(|| SUITE_SEEDS.iter().map(|&s| run_seed(s)).collect::<Result<_>>().map_err(|e| e.to_string()))
        .as_deref()
        .map_err(Clone::clone)
}

fn architecture_ordering() -> Result<Outcome> {
    const MARGIN: f64 = 0.03;
    let runs = match suite() {
        Ok(r) => r,
        Err(e) => return Ok(Outcome::new(false, format!("error: {e}"))),
    };
    let wins = runs.iter().filter(|r| r.spatial - r.ai >= MARGIN && r.fusion - r.ai >= MARGIN).count();
    let detail = runs
        .iter()
        .map(|r| format!("seed {}: ai {:.3} spatial {:.3} max-fusion {:.3}", r.seed, r.ai, r.spatial, r.fusion))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Outcome::new(
        2 * wins > runs.len(),
        format!("{detail}; both margins >= 3pp on {wins}/{} seeds", runs.len()),
    ))
}

fn fusion_confusion_repair() -> Result<Outcome> {
    let runs = match suite() {
        Ok(r) => r,
        Err(e) => return Ok(Outcome::new(false, format!("error: {e}"))),
    };
    let pass = runs.iter().all(|r| r.twins_ai <= 0.60 && r.twins_fusion >= 0.90);
    let detail = runs
        .iter()
        .map(|r| format!("seed {}: ai {:.3} max-fusion {:.3}", r.seed, r.twins_ai, r.twins_fusion))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Outcome::new(pass, format!("twin-pair accuracy, all folds: {detail}")))
}

fn adaptation_trend() -> Result<Outcome> {
    const NOISE: f64 = 0.02;
    const FRACTIONS: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
    let d = generate_synthetic(&SynthConfig {
        num_classes: 10,
        num_subjects: 6,
        samples_per_class_per_subject: 10,
        style_amplitude: 0.15,
        rng_seed: 4,
        ..SynthConfig::default()
    })?;
    let spec = ModelSpec {
        state_size: 12,
        ..ModelSpec::new(ModelKind::Baseline)
    };
    let hp = Hyperparams {
        epochs: 100,
        learning_rate: 1e-2,
        l2_beta: 1e-4,
        dropout_keep: 0.8,
        seed: 4,
        ..Hyperparams::default()
    };
    // Averaged over every held-out subject.
    let mut curve = [0.0; FRACTIONS.len()];
    for subject in &d.subjects {
        let points = adaptation_curve(&d, subject, &FRACTIONS, &spec, &hp, 1)?;
        for (c, p) in curve.iter_mut().zip(&points) {
            *c += p.accuracy / d.subjects.len() as f64;
        }
    }
    let monotone = curve.windows(2).all(|w| w[1] >= w[0] - NOISE);
    let gap = curve[5] - curve[0];
    let recovered = if gap > 0.0 { (curve[1] - curve[0]) / gap } else { 0.0 };
    let shown = curve.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>().join(", ");
    Ok(Outcome::new(
        monotone && recovered >= 0.5,
        format!("mean curve over {} subjects [{shown}]; non-decreasing {monotone}; 0.1 recovers {:.0}% of the gap", d.subjects.len(), 100.0 * recovered),
    ))
}

// ---------------------------------------------------------------- 7

fn keys(d: &Dataset) -> BTreeSet<SampleKey> {
    d.samples.iter().map(|s| s.key()).collect()
}

fn split_soundness() -> Result<Outcome> {
    let d = generate_synthetic(&SynthConfig {
        num_classes: 6,
        num_subjects: 12,
        samples_per_class_per_subject: 5,
        rng_seed: 7,
        ..SynthConfig::default()
    })?;
    let all = keys(&d);
    let mut folds = 0;
    let mut seen_test: HashSet<SampleKey> = HashSet::new();
    for subject in &d.subjects {
        let sp = split_cross_subject(&d, subject)?;
        audit_split(&sp)?;
        let (tr, te) = (keys(&sp.train), keys(&sp.test));
        if !tr.is_disjoint(&te) || tr.union(&te).cloned().collect::<BTreeSet<_>>() != all {
            return Ok(Outcome::new(false, format!("fold {subject} overlaps or loses samples")));
        }
        if te.iter().any(|k| k.subject != *subject || !seen_test.insert(k.clone())) {
            return Ok(Outcome::new(false, format!("fold {subject} test set is not exactly that subject")));
        }
        folds += 1;
    }
    let fractions = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
    let mut checked = 0;
    for subject in &d.subjects {
        for seed in 0..3 {
            let splits = fractions.iter().map(|&f| split_adaptation(&d, subject, f, seed)).collect::<Result<Vec<_>>>()?;
            audit_adaptation(&splits.iter().collect::<Vec<_>>())?;
            let test0 = keys(&splits[0].test);
            for sp in &splits {
                let (tr, te) = (keys(&sp.train), keys(&sp.test));
                if !tr.is_disjoint(&te) || te != test0 {
                    return Ok(Outcome::new(false, format!("adaptation split for {subject} seed {seed} unsound")));
                }
                checked += 1;
            }
        }
    }
    Ok(Outcome::new(
        seen_test.len() == all.len(),
        format!("{folds} cross-subject folds and {checked} adaptation splits disjoint; test halves fixed per seed"),
    ))
}

// ---------------------------------------------------------------- 8

fn tiny_dataset(seed: u64, hands: bool) -> Result<Dataset> {
    generate_synthetic(&SynthConfig {
        num_classes: 3,
        num_subjects: 3,
        samples_per_class_per_subject: 3,
        frame_length_range: (20, 30),
        hands: hands.then(|| HandCropParams {
            frames: 4,
            out_hw: 8,
            ..HandCropParams::default()
        }),
        rng_seed: seed,
        ..SynthConfig::default()
    })
}

fn tiny_spec(kind: ModelKind) -> ModelSpec {
    ModelSpec {
        state_size: 6,
        lstm_layers: 1,
        frames: 10,
        cnn_channels: [2, 2, 2, 2],
        cnn_fc: [6, 6],
        ..ModelSpec::new(kind)
    }
}

fn tiny_hp(kind: ModelKind, seed: u64) -> Hyperparams {
    Hyperparams {
        epochs: 3,
        batch_size: 8,
        learning_rate: 1e-2,
        seed,
        ..Hyperparams::for_kind(kind)
    }
}

fn read_tree(root: &Path) -> std::io::Result<Vec<(PathBuf, Vec<u8>)>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir)? {
            let p = e?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).expect("under root").to_path_buf(), std::fs::read(&p)?));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn train_and_report(d: &Dataset, kind: ModelKind, out: &Path) -> Result<(Vec<u8>, Vec<(PathBuf, Vec<u8>)>)> {
    let hp = tiny_hp(kind, 11);
    let sp = split_cross_subject(d, &d.subjects[0])?;
    let m = TrainedModel::train(&tiny_spec(kind), &sp.train, &hp, &mut |_: &str, _: &EpochStats| ControlFlow::Continue(()))?;
    let report = evaluate(&m, &sp.test)?;
    write_reports(&ExperimentResult::new("single-split", kind.name(), hp, d.vocabulary.clone(), vec![report]), out)?;
    m.save(&out.join("model.sgnm"))?;
    let tree = read_tree(out).map_err(|e| signkit_core::Error::InvalidInput(e.to_string()))?;
    Ok((m.to_checkpoint().to_bytes(), tree))
}

fn determinism() -> Result<Outcome> {
    let d = tiny_dataset(5, true)?;
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut checked = Vec::new();
    for kind in [ModelKind::AiLstm, ModelKind::SpatialAiLstm, ModelKind::Cnn3d, ModelKind::MaxFusion, ModelKind::Baseline] {
        let a = train_and_report(&d, kind, &tmp.path().join(format!("{}-a", kind.name())))?;
        let b = train_and_report(&d, kind, &tmp.path().join(format!("{}-b", kind.name())))?;
        if a != b {
            return Ok(Outcome::new(false, format!("{kind} outputs differ between runs")));
        }
        checked.push(kind.name());
    }
    Ok(Outcome::new(true, format!("checkpoints and reports byte-identical across two runs for {}", checked.join(", "))))
}

// ---------------------------------------------------------------- 9

fn format_round_trips() -> Result<Outcome> {
    let io = |e: std::io::Error| signkit_core::Error::InvalidInput(e.to_string());
    let tmp = tempfile::tempdir().expect("temp dir");
    let d = tiny_dataset(9, true)?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    save_dataset(&d, &a)?;
    let loaded = load_dataset(&a)?.dataset;
    save_dataset(&loaded, &b)?;
    let dataset_ok = read_tree(&a).map_err(io)? == read_tree(&b).map_err(io)? && loaded == d;

    let mut rng = substream(9, "acceptance.hpv");
    let vol = |rng: &mut Rng| HandVolume::new(3, 5, 4, 3, (0..180).map(|_| rng.random_range(0.0..1.0f32)).collect());
    let (l, r) = (vol(&mut rng)?, vol(&mut rng)?);
    let (p1, p2) = (tmp.path().join("1.hpv"), tmp.path().join("2.hpv"));
    write_hpv(&p1, &l, &r)?;
    let (l2, r2) = read_hpv(&p1)?;
    write_hpv(&p2, &l2, &r2)?;
    let hpv_ok = std::fs::read(&p1).map_err(io)? == std::fs::read(&p2).map_err(io)? && (l2, r2) == (l, r);

    let mut ck_ok = true;
    for kind in [ModelKind::AiLstm, ModelKind::SpatialAiLstm, ModelKind::Cnn3d, ModelKind::MaxFusion, ModelKind::Baseline] {
        let m = TrainedModel::train(&tiny_spec(kind), &d, &tiny_hp(kind, 1), &mut |_: &str, _: &EpochStats| ControlFlow::Continue(()))?;
        let (c1, c2) = (tmp.path().join("1.sgnm"), tmp.path().join("2.sgnm"));
        m.save(&c1)?;
        let back = TrainedModel::load(&c1)?;
        back.save(&c2)?;
        let bytes = std::fs::read(&c1).map_err(io)?;
        ck_ok &= bytes == std::fs::read(&c2).map_err(io)? && back == m;
        let ck = Checkpoint::from_bytes(&bytes).map_err(signkit_core::Error::InvalidInput)?;
        ck_ok &= ck.to_bytes() == bytes;
    }
    Ok(Outcome::new(
        dataset_ok && hpv_ok && ck_ok,
        format!("dataset tree {dataset_ok}, .hpv {hpv_ok}, checkpoints (5 architectures) {ck_ok}"),
    ))
}

fn pairwise(reports: &[EvalReport], pairs: &[(usize, usize)]) -> f64 {
    let (mut hit, mut all) = (0, 0);
    for r in reports {
        for &(a, b) in pairs {
            let (h, n) = r.pair_counts(a, b);
            hit += h;
            all += n;
        }
    }
    hit as f64 / all.max(1) as f64
}
