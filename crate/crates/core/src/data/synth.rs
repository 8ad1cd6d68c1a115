//! Parametric multi-subject gesture generator.
//!
//! Each class owns a motion prototype over the six arm joints (a sum of
//! 2–4 sinusoids per joint-axis). Subjects differ by body scale, standing
//! offset, signing speed and a per-motion personal style. Two kinds of
//! class pairs are supported:
//!
//! * twin pairs share the motion prototype exactly and differ only in the
//!   hand texture rendered into the hand-patch volumes;
//! * relation pairs share the motion prototype but the second class holds
//!   the right arm displaced relative to the left, so they differ only in
//!   inter-joint geometry.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::joints::{JointId, DESIGNATED_JOINTS, NUM_JOINTS};
use super::sample::{Dataset, SignSample, SkeletonFrame};
use crate::error::{Error, Result};
use crate::preprocess::{build_hand_volumes, FrameSource, HandCropParams};
use crate::rng::{self, Rng};

pub const FRAME_WIDTH: usize = 1920;
pub const FRAME_HEIGHT: usize = 1080;
const FOCAL: f64 = 1060.0;
const FPS: f64 = 30.0;
const HAND_RADIUS_M: f64 = 0.09;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectVariation {
    pub scale_range: (f64, f64),
    /// Standing offset per axis (x, y, z), meters.
    pub offset_range: [(f64, f64); 3],
    /// Signing speed multiplier; faster subjects produce shorter samples.
    pub speed_range: (f64, f64),
}

impl Default for SubjectVariation {
    fn default() -> Self {
        SubjectVariation {
            scale_range: (0.85, 1.15),
            offset_range: [(-0.3, 0.3), (-0.1, 0.1), (-0.6, 0.6)],
            speed_range: (0.8, 1.25),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub num_subjects: usize,
    pub samples_per_class_per_subject: usize,
    pub frame_length_range: (usize, usize),
    /// i.i.d. coordinate noise, meters.
    pub noise_sigma: f64,
    pub subject_variation: SubjectVariation,
    /// Per-sample whole-body translation jitter, meters.
    pub sample_offset_sigma: f64,
    /// Amplitude of each subject's personal deviation from a motion prototype.
    pub style_amplitude: f64,
    pub twin_class_pairs: Vec<(usize, usize)>,
    pub relation_class_pairs: Vec<(usize, usize)>,
    /// Right-arm displacement distinguishing the second class of a relation pair.
    pub relation_offset: f64,
    /// Render hand-patch volumes with these crop settings.
    pub hands: Option<HandCropParams>,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_classes: 10,
            num_subjects: 4,
            samples_per_class_per_subject: 4,
            frame_length_range: (30, 90),
            noise_sigma: 0.005,
            subject_variation: SubjectVariation::default(),
            sample_offset_sigma: 0.02,
            style_amplitude: 0.02,
            twin_class_pairs: Vec::new(),
            relation_class_pairs: Vec::new(),
            relation_offset: 0.15,
            hands: None,
            rng_seed: 0,
        }
    }
}

fn check_range(name: &str, r: (f64, f64)) -> Result<()> {
    if !(r.0.is_finite() && r.1.is_finite() && r.0 <= r.1) {
        return Err(Error::InvalidConfig(format!("{name} range {r:?} is empty")));
    }
    Ok(())
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.num_subjects == 0 {
            return Err(Error::InvalidConfig("need at least one class and one subject".into()));
        }
        if self.samples_per_class_per_subject == 0 {
            return Err(Error::InvalidConfig("samples_per_class_per_subject must be positive".into()));
        }
        let (lo, hi) = self.frame_length_range;
        if lo < 2 || lo > hi {
            return Err(Error::InvalidConfig(format!("frame_length_range ({lo}, {hi}) invalid")));
        }
        let v = &self.subject_variation;
        check_range("scale", v.scale_range)?;
        check_range("speed", v.speed_range)?;
        for r in v.offset_range {
            check_range("offset", r)?;
        }
        if v.scale_range.0 <= 0.0 || v.speed_range.0 <= 0.0 {
            return Err(Error::InvalidConfig("scale and speed must be positive".into()));
        }
        for x in [self.noise_sigma, self.sample_offset_sigma, self.style_amplitude] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::InvalidConfig("noise and style amplitudes must be >= 0".into()));
            }
        }
        let mut used = vec![false; self.num_classes];
        for &(a, b) in self.twin_class_pairs.iter().chain(&self.relation_class_pairs) {
            if a >= self.num_classes || b >= self.num_classes || a == b {
                return Err(Error::InvalidConfig(format!("class pair ({a}, {b}) invalid")));
            }
            if used[a] || used[b] {
                return Err(Error::InvalidConfig(format!("class in more than one pair: ({a}, {b})")));
            }
            used[a] = true;
            used[b] = true;
        }
        if let Some(h) = &self.hands {
            if h.patch == 0 || h.out_hw == 0 || h.frames == 0 || h.smoothing_window % 2 == 0 {
                return Err(Error::InvalidConfig("hand crop sizes must be positive, window odd".into()));
            }
        }
        Ok(())
    }

    /// Motion prototype of each class and whether it carries the relation shift.
    fn motion_assignment(&self) -> Vec<(usize, bool)> {
        let mut out: Vec<(usize, bool)> = (0..self.num_classes).map(|c| (c, false)).collect();
        for &(a, b) in &self.twin_class_pairs {
            out[b] = (a, false);
        }
        for &(a, b) in &self.relation_class_pairs {
            out[b] = (a, true);
        }
        out
    }
}

/// Rest body, meters, relative to the spine base; x to the subject's right.
fn rest_pose() -> [[f64; 3]; NUM_JOINTS] {
    use JointId::*;
    let mut p = [[0.0; 3]; NUM_JOINTS];
    let mut set = |j: JointId, v: [f64; 3]| p[j.index()] = v;
    set(SpineBase, [0.0, 0.0, 0.0]);
    set(SpineMid, [0.0, 0.3, 0.0]);
    set(SpineShoulder, [0.0, 0.5, 0.0]);
    set(Neck, [0.0, 0.56, 0.0]);
    set(Head, [0.0, 0.72, 0.0]);
    set(ShoulderLeft, [-0.18, 0.5, 0.0]);
    set(ElbowLeft, [-0.22, 0.22, -0.1]);
    set(WristLeft, [-0.14, 0.32, -0.3]);
    set(ShoulderRight, [0.18, 0.5, 0.0]);
    set(ElbowRight, [0.22, 0.22, -0.1]);
    set(WristRight, [0.14, 0.32, -0.3]);
    set(HipLeft, [-0.1, -0.05, 0.0]);
    set(KneeLeft, [-0.1, -0.45, 0.0]);
    set(AnkleLeft, [-0.1, -0.85, 0.0]);
    set(FootLeft, [-0.1, -0.9, -0.1]);
    set(HipRight, [0.1, -0.05, 0.0]);
    set(KneeRight, [0.1, -0.45, 0.0]);
    set(AnkleRight, [0.1, -0.85, 0.0]);
    set(FootRight, [0.1, -0.9, -0.1]);
    p
}

/// Where the spine base sits in camera space before subject offsets.
const BODY_ORIGIN: [f64; 3] = [0.0, -0.3, 3.8];

#[derive(Clone, Debug)]
struct Sinusoid {
    amp: f64,
    freq: f64,
    phase: f64,
}

impl Sinusoid {
    fn at(&self, u: f64) -> f64 {
        self.amp * (2.0 * PI * self.freq * u + self.phase).sin()
    }
}

/// Displacement curves for the six designated joints × 3 axes.
#[derive(Clone, Debug)]
struct MotionCurves(Vec<Vec<Sinusoid>>);

const JOINT_AMPLITUDE: [f64; 6] = [0.12, 0.12, 0.05, 0.05, 0.012, 0.012];
const AXIS_AMPLITUDE: [f64; 3] = [1.0, 1.0, 0.6];

impl MotionCurves {
    fn random(r: &mut Rng, scale: f64, min_terms: usize, max_terms: usize) -> Self {
        let mut curves = Vec::with_capacity(18);
        for j in 0..6 {
            for a in 0..3 {
                let k = r.random_range(min_terms..=max_terms);
                let base = scale * JOINT_AMPLITUDE[j] * AXIS_AMPLITUDE[a] / (k as f64).sqrt();
                curves.push(
                    (0..k)
                        .map(|_| Sinusoid {
                            amp: base * r.random_range(0.4..1.0),
                            freq: r.random_range(0.5..2.5),
                            phase: r.random_range(0.0..2.0 * PI),
                        })
                        .collect(),
                );
            }
        }
        MotionCurves(curves)
    }

    /// Displacement of designated joint `j` (canonical order) at phase `u ∈ [0,1]`.
    /// Elbows and shoulders are partly dragged along by their wrist.
    fn displacement(&self, j: usize, u: f64) -> [f64; 3] {
        let own = |jj: usize| -> [f64; 3] {
            let mut d = [0.0; 3];
            for (a, v) in d.iter_mut().enumerate() {
                *v = self.0[jj * 3 + a].iter().map(|s| s.at(u)).sum();
            }
            d
        };
        let mut d = own(j);
        let drag = match j {
            2 | 3 => 0.4,
            4 | 5 => 0.08,
            _ => 0.0,
        };
        if drag > 0.0 {
            let w = own(j % 2);
            for a in 0..3 {
                d[a] += drag * w[a];
            }
        }
        d
    }
}

/// Per-class hand appearance.
#[derive(Clone, Debug)]
struct HandShape {
    base: [f32; 3],
    amp: f32,
    freq: f32,
    angle: f32,
}

impl HandShape {
    fn for_class(seed: u64, class: usize, hand: usize) -> Self {
        let mut r = rng::keyed(seed, "handshape", &[class as u64, hand as u64]);
        let hue = r.random_range(0.0f32..1.0);
        let base = hsv(hue, r.random_range(0.5f32..0.9), r.random_range(0.45f32..0.8));
        HandShape {
            base,
            amp: r.random_range(0.1f32..0.25),
            freq: r.random_range(0.4f32..1.2),
            angle: r.random_range(0.0f32..std::f32::consts::PI),
        }
    }
}

fn hsv(h: f32, s: f32, v: f32) -> [f32; 3] {
    let i = (h * 6.0).floor();
    let f = h * 6.0 - i;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - f * s), v * (1.0 - (1.0 - f) * s));
    match (i as i32).rem_euclid(6) {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

/// Procedural color video of one sample: two textured hand discs centered
/// on the projected wrists over a flat background.
struct SyntheticScene<'a> {
    frames: &'a [SkeletonFrame],
    shapes: [HandShape; 2],
    brightness: f32,
    background: [f32; 3],
    /// Per-frame texture rotation jitter.
    twist: Vec<f32>,
}

impl FrameSource for SyntheticScene<'_> {
    fn dims(&self) -> (usize, usize, usize) {
        (FRAME_WIDTH, FRAME_HEIGHT, 3)
    }

    fn pixel(&self, frame: usize, x: usize, y: usize, out: &mut [f32]) {
        let f = &self.frames[frame];
        let j2 = f.joints2d.as_ref().expect("synthetic frames carry 2D joints");
        for (hand, joint) in [JointId::WristLeft, JointId::WristRight].into_iter().enumerate() {
            let [cu, cv] = j2[joint.index()];
            let depth = f.joint(joint)[2].max(0.5);
            let radius = HAND_RADIUS_M * FOCAL / depth;
            let (dx, dy) = (x as f64 - cu, y as f64 - cv);
            if dx * dx + dy * dy <= radius * radius {
                let sh = &self.shapes[hand];
                let (xi, eta) = ((dx / radius) as f32, (dy / radius) as f32);
                let ang = sh.angle + self.twist[frame];
                let wave = (2.0 * std::f32::consts::PI * sh.freq * (xi * ang.cos() + eta * ang.sin())).sin();
                for c in 0..3 {
                    out[c] = (self.brightness * (sh.base[c] + sh.amp * wave)).clamp(0.0, 1.0);
                }
                return;
            }
        }
        out.copy_from_slice(&self.background);
    }
}

fn project(p: [f64; 3]) -> [f64; 2] {
    [
        FRAME_WIDTH as f64 / 2.0 + FOCAL * p[0] / p[2],
        FRAME_HEIGHT as f64 / 2.0 - FOCAL * p[1] / p[2],
    ]
}

struct Subject {
    scale: f64,
    offset: [f64; 3],
    speed: f64,
    brightness: f32,
    background: [f32; 3],
}

fn uniform(r: &mut Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        r.random_range(lo..hi)
    }
}

fn class_name(c: usize, n: usize) -> String {
    let w = n.saturating_sub(1).to_string().len().max(2);
    format!("sign_{c:0w$}")
}

fn subject_name(s: usize, n: usize) -> String {
    let w = n.to_string().len().max(2);
    format!("subject_{:0w$}", s + 1)
}

/// Generates a dataset; a pure function of `cfg`.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let seed = cfg.rng_seed;
    let rest = rest_pose();
    let motions = cfg.motion_assignment();

    let prototypes: Vec<MotionCurves> = (0..cfg.num_classes)
        .map(|m| MotionCurves::random(&mut rng::keyed(seed, "prototype", &[m as u64]), 1.0, 2, 4))
        .collect();

    let subjects: Vec<Subject> = (0..cfg.num_subjects)
        .map(|s| {
            let mut r = rng::keyed(seed, "subject", &[s as u64]);
            let v = &cfg.subject_variation;
            let g = r.random_range(0.25f32..0.45);
            Subject {
                scale: uniform(&mut r, v.scale_range),
                offset: [
                    uniform(&mut r, v.offset_range[0]),
                    uniform(&mut r, v.offset_range[1]),
                    uniform(&mut r, v.offset_range[2]),
                ],
                speed: uniform(&mut r, v.speed_range),
                brightness: r.random_range(0.8f32..1.2),
                background: [g, g * r.random_range(0.9f32..1.1), g * r.random_range(0.9f32..1.1)],
            }
        })
        .collect();

    let shapes: Vec<[HandShape; 2]> = (0..cfg.num_classes)
        .map(|c| [HandShape::for_class(seed, c, 0), HandShape::for_class(seed, c, 1)])
        .collect();

    let jitter = Normal::new(0.0, cfg.sample_offset_sigma.max(0.0)).expect("valid sigma");
    let noise = Normal::new(0.0, cfg.noise_sigma.max(0.0)).expect("valid sigma");
    let style_scale = if JOINT_AMPLITUDE[0] > 0.0 {
        cfg.style_amplitude / JOINT_AMPLITUDE[0]
    } else {
        0.0
    };

    let mut samples = Vec::with_capacity(cfg.num_subjects * cfg.num_classes * cfg.samples_per_class_per_subject);
    for (si, subj) in subjects.iter().enumerate() {
        for class in 0..cfg.num_classes {
            let (motion, shifted) = motions[class];
            let proto = &prototypes[motion];
            let style = MotionCurves::random(
                &mut rng::keyed(seed, "style", &[si as u64, motion as u64]),
                style_scale,
                1,
                1,
            );
            for k in 0..cfg.samples_per_class_per_subject {
                // Everything that shapes the motion is keyed by the motion
                // prototype, so twin classes get identical trajectories.
                let mut mr = rng::keyed(seed, "sample", &[si as u64, motion as u64, k as u64]);
                let (lo, hi) = cfg.frame_length_range;
                let base_len = mr.random_range(lo as f64..=hi as f64);
                let len = ((base_len / subj.speed).round() as usize).clamp(lo, hi);
                let warp = mr.random_range(-0.15..0.15);
                let shift = [jitter.sample(&mut mr), jitter.sample(&mut mr), jitter.sample(&mut mr)];

                let mut nr = rng::keyed(seed, "noise", &[si as u64, class as u64, k as u64]);
                let mut frames = Vec::with_capacity(len);
                for t in 0..len {
                    let lin = t as f64 / (len - 1) as f64;
                    let u = lin + warp * (PI * lin).sin() / PI;
                    let mut joints3d = [[0.0; 3]; NUM_JOINTS];
                    for (j, rp) in rest.iter().enumerate() {
                        joints3d[j] = *rp;
                    }
                    for (dj, joint) in DESIGNATED_JOINTS.iter().enumerate() {
                        let d = proto.displacement(dj, u);
                        let st = style.displacement(dj, u);
                        let p = &mut joints3d[joint.index()];
                        for a in 0..3 {
                            p[a] += d[a] + st[a];
                        }
                        if shifted {
                            let amount = match joint {
                                JointId::WristRight => 1.0,
                                JointId::ElbowRight => 0.5,
                                _ => 0.0,
                            };
                            p[0] += amount * cfg.relation_offset;
                            p[1] += amount * 0.5 * cfg.relation_offset;
                        }
                    }
                    // Hands follow their wrists.
                    for (w, hs) in [
                        (JointId::WristLeft, [JointId::HandLeft, JointId::HandTipLeft, JointId::ThumbLeft]),
                        (JointId::WristRight, [JointId::HandRight, JointId::HandTipRight, JointId::ThumbRight]),
                    ] {
                        let wp = joints3d[w.index()];
                        let sign = if w == JointId::WristLeft { 1.0 } else { -1.0 };
                        let offs = [[0.0, 0.05, -0.02], [0.0, 0.1, -0.03], [sign * 0.03, 0.04, -0.03]];
                        for (h, o) in hs.iter().zip(offs) {
                            joints3d[h.index()] = [wp[0] + o[0], wp[1] + o[1], wp[2] + o[2]];
                        }
                    }
                    let mut frame = SkeletonFrame {
                        t: t as f64 / FPS,
                        joints3d: Vec::with_capacity(NUM_JOINTS),
                        joints2d: None,
                    };
                    for p in joints3d {
                        let mut q = [0.0; 3];
                        for a in 0..3 {
                            q[a] = BODY_ORIGIN[a] + subj.offset[a] + shift[a] + subj.scale * p[a] + noise.sample(&mut nr);
                        }
                        frame.joints3d.push(q);
                    }
                    frame.joints2d = Some(frame.joints3d.iter().map(|p| project(*p)).collect());
                    frames.push(frame);
                }

                let mut sample = SignSample {
                    subject_id: subject_name(si, cfg.num_subjects),
                    class_label: class,
                    sample_id: format!("{k:04}"),
                    fps: FPS,
                    frames,
                    hand_volumes: None,
                };
                if let Some(hp) = &cfg.hands {
                    let mut tr = rng::keyed(seed, "twist", &[si as u64, class as u64, k as u64]);
                    let twist = (0..sample.frames.len()).map(|_| tr.random_range(-0.2f32..0.2)).collect();
                    let scene = SyntheticScene {
                        frames: &sample.frames,
                        shapes: shapes[class].clone(),
                        brightness: subj.brightness,
                        background: subj.background,
                        twist,
                    };
                    sample.hand_volumes = Some(build_hand_volumes(&sample, &scene, hp)?);
                }
                samples.push(sample);
            }
        }
    }
    Dataset::new(
        (0..cfg.num_classes).map(|c| class_name(c, cfg.num_classes)).collect(),
        (0..cfg.num_subjects).map(|s| subject_name(s, cfg.num_subjects)).collect(),
        samples,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::skeletal_input;

    fn small() -> SynthConfig {
        SynthConfig {
            num_classes: 4,
            num_subjects: 2,
            samples_per_class_per_subject: 3,
            twin_class_pairs: vec![(0, 1)],
            rng_seed: 7,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(generate_synthetic(&small()).unwrap(), generate_synthetic(&small()).unwrap());
        let other = SynthConfig {
            rng_seed: 8,
            ..small()
        };
        assert_ne!(generate_synthetic(&small()).unwrap(), generate_synthetic(&other).unwrap());
    }

    #[test]
    fn paper_scale_counts() {
        let cfg = SynthConfig {
            num_classes: 51,
            num_subjects: 12,
            samples_per_class_per_subject: 4,
            frame_length_range: (20, 30),
            ..SynthConfig::default()
        };
        let d = generate_synthetic(&cfg).unwrap();
        assert_eq!(d.len(), 2448);
        assert_eq!(d.num_classes(), 51);
        assert_eq!(d.subjects.len(), 12);
    }

    #[test]
    fn zero_classes_or_subjects_is_fatal() {
        for cfg in [
            SynthConfig {
                num_classes: 0,
                ..small()
            },
            SynthConfig {
                num_subjects: 0,
                ..small()
            },
            SynthConfig {
                twin_class_pairs: vec![(0, 9)],
                ..small()
            },
        ] {
            assert!(matches!(generate_synthetic(&cfg), Err(Error::InvalidConfig(_))));
        }
    }

    fn mean_joint_distance(a: &SignSample, b: &SignSample) -> f64 {
        let x = skeletal_input::<f64>(a, 20).unwrap();
        let y = skeletal_input::<f64>(b, 20).unwrap();
        let mut total = 0.0;
        for t in 0..20 {
            for j in 0..6 {
                let (p, q) = (x.point(t, j), y.point(t, j));
                total += ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
            }
        }
        total / 120.0
    }

    #[test]
    fn twin_classes_share_motion() {
        let d = generate_synthetic(&small()).unwrap();
        let find = |subj: &str, c: usize, id: &str| {
            d.samples
                .iter()
                .find(|s| s.subject_id == subj && s.class_label == c && s.sample_id == id)
                .unwrap()
        };
        for subj in &d.subjects {
            for id in ["0000", "0001", "0002"] {
                let twin = mean_joint_distance(find(subj, 0, id), find(subj, 1, id));
                let other = if id == "0000" { "0001" } else { "0000" };
                let within = mean_joint_distance(find(subj, 0, id), find(subj, 0, other));
                assert!(twin < within, "{subj}/{id}: twin {twin} vs within-class {within}");
            }
        }
    }

    #[test]
    fn hand_volumes_are_rendered_in_unit_range() {
        let cfg = SynthConfig {
            hands: Some(HandCropParams {
                patch: 60,
                out_hw: 8,
                frames: 5,
                smoothing_window: 5,
            }),
            ..small()
        };
        let d = generate_synthetic(&cfg).unwrap();
        assert!(d.has_hand_volumes());
        let (l, r) = d.samples[0].hand_volumes.as_ref().unwrap();
        assert_eq!(l.dims(), [5, 8, 8, 3]);
        assert!(l.data.iter().chain(&r.data).all(|v| (0.0..=1.0).contains(v)));
        // Different classes get different textures.
        let (l2, _) = d.samples[3].hand_volumes.as_ref().unwrap();
        assert_ne!(l.data, l2.data);
    }
}
