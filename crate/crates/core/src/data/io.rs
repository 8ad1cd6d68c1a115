//! On-disk dataset layout:
//!
//! ```text
//! <root>/<subject_id>/<class_name>/<sample_id>.skel.json
//! <root>/<subject_id>/<class_name>/<sample_id>.hpv        (optional)
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::sample::{Dataset, SignSample, SkeletonFrame};
use super::volume::HandVolume;
use crate::error::{Error, Result};

const SKEL_EXT: &str = ".skel.json";
const HPV_EXT: &str = "hpv";
const HPV_MAGIC: [u8; 8] = *b"HPV1\0\0\0\0";

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    t: f64,
    joints3d: Vec<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    joints2d: Option<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct SkelRecord {
    fps: f64,
    frames: Vec<FrameRecord>,
}

impl From<&SkeletonFrame> for FrameRecord {
    fn from(f: &SkeletonFrame) -> Self {
        FrameRecord {
            t: f.t,
            joints3d: f.joints3d.clone(),
            joints2d: f.joints2d.clone(),
        }
    }
}

impl From<FrameRecord> for SkeletonFrame {
    fn from(r: FrameRecord) -> Self {
        SkeletonFrame {
            t: r.t,
            joints3d: r.joints3d,
            joints2d: r.joints2d,
        }
    }
}

/// A loaded dataset plus the files that were skipped.
#[derive(Debug)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub warnings: Vec<String>,
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let e = e.map_err(|e| Error::io(dir, e))?;
        let name = e.file_name();
        if name.to_string_lossy().starts_with('.') {
            continue;
        }
        out.push(e.path());
    }
    out.sort();
    Ok(out)
}

fn subdirs(dir: &Path) -> Result<Vec<PathBuf>> {
    Ok(sorted_entries(dir)?.into_iter().filter(|p| p.is_dir()).collect())
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Reads a `.skel.json` file into `(fps, frames)`, validating every frame.
pub fn read_skel_json(path: &Path) -> Result<(f64, Vec<SkeletonFrame>)> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let rec: SkelRecord =
        serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::format(path, e.to_string()))?;
    if !rec.fps.is_finite() || rec.fps <= 0.0 {
        return Err(Error::format(path, "fps must be positive"));
    }
    let frames: Vec<SkeletonFrame> = rec.frames.into_iter().map(Into::into).collect();
    for fr in &frames {
        fr.validate().map_err(|e| Error::format(path, e.to_string()))?;
    }
    Ok((rec.fps, frames))
}

pub fn write_skel_json(path: &Path, fps: f64, frames: &[SkeletonFrame]) -> Result<()> {
    let rec = SkelRecord {
        fps,
        frames: frames.iter().map(FrameRecord::from).collect(),
    };
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer(&mut w, &rec).map_err(|e| Error::format(path, e.to_string()))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a bare JSON array of frames (`[{"t":..,"joints3d":[..]}, ..]`), the
/// continuous-stream format used for segmentation.
pub fn read_frame_stream(path: &Path) -> Result<Vec<SkeletonFrame>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let recs: Vec<FrameRecord> =
        serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::format(path, e.to_string()))?;
    let frames: Vec<SkeletonFrame> = recs.into_iter().map(Into::into).collect();
    for fr in &frames {
        fr.validate().map_err(|e| Error::format(path, e.to_string()))?;
    }
    Ok(frames)
}

pub fn write_frame_stream(path: &Path, frames: &[SkeletonFrame]) -> Result<()> {
    let recs: Vec<FrameRecord> = frames.iter().map(FrameRecord::from).collect();
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer(&mut w, &recs).map_err(|e| Error::format(path, e.to_string()))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a `.hpv` hand-patch file: magic, 5 × u32 (hands, F, H, W, C), then
/// `hands·F·H·W·C` little-endian f32, left hand first.
pub fn read_hpv(path: &Path) -> Result<(HandVolume, HandVolume)> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 28 || bytes[..8] != HPV_MAGIC {
        return Err(Error::format(path, "bad HPV magic"));
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize;
    let (hands, f, h, w, c) = (dim(0), dim(1), dim(2), dim(3), dim(4));
    if hands != 2 {
        return Err(Error::format(path, format!("expected 2 hands, found {hands}")));
    }
    let per = f
        .checked_mul(h)
        .and_then(|x| x.checked_mul(w))
        .and_then(|x| x.checked_mul(c))
        .ok_or_else(|| Error::format(path, "dimension overflow"))?;
    if bytes.len() != 28 + 2 * per * 4 {
        return Err(Error::format(path, "payload length does not match header"));
    }
    let values: Vec<f32> = bytes[28..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    if values.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
        return Err(Error::format(path, "hand volume values must lie in [0, 1]"));
    }
    let right = values[per..].to_vec();
    let mut left = values;
    left.truncate(per);
    Ok((
        HandVolume::new(f, h, w, c, left).map_err(|e| Error::format(path, e.to_string()))?,
        HandVolume::new(f, h, w, c, right).map_err(|e| Error::format(path, e.to_string()))?,
    ))
}

pub fn write_hpv(path: &Path, left: &HandVolume, right: &HandVolume) -> Result<()> {
    if left.dims() != right.dims() {
        return Err(Error::Shape("left and right hand volumes differ in shape".into()));
    }
    let mut buf = Vec::with_capacity(28 + 8 * left.data.len());
    buf.extend_from_slice(&HPV_MAGIC);
    for d in [2, left.frames, left.height, left.width, left.channels] {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in left.data.iter().chain(&right.data) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn load_sample(path: &Path, subject: &str, label: usize, stem: &str) -> Result<SignSample> {
    let (fps, frames) = read_skel_json(path)?;
    if frames.is_empty() {
        return Err(Error::format(path, "no frames"));
    }
    let hpv = path.with_file_name(format!("{stem}.{HPV_EXT}"));
    let hand_volumes = if hpv.exists() { Some(read_hpv(&hpv)?) } else { None };
    let s = SignSample {
        subject_id: subject.to_string(),
        class_label: label,
        sample_id: stem.to_string(),
        fps,
        frames,
        hand_volumes,
    };
    s.validate().map_err(|e| Error::format(path, e.to_string()))?;
    Ok(s)
}

/// Loads every parseable sample under `root`. Vocabulary is the sorted union
/// of class directory names; malformed samples are skipped with a warning.
pub fn load_dataset(root: &Path) -> Result<LoadedDataset> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset root not found"),
        ));
    }
    let subject_dirs = subdirs(root)?;
    let mut vocab = BTreeSet::new();
    let mut layout = Vec::with_capacity(subject_dirs.len());
    for sd in &subject_dirs {
        let classes = subdirs(sd)?;
        for c in &classes {
            vocab.insert(file_name(c));
        }
        layout.push((file_name(sd), classes));
    }
    let vocabulary: Vec<String> = vocab.into_iter().collect();
    let subjects: Vec<String> = layout.iter().map(|(s, _)| s.clone()).collect();

    let mut samples = Vec::new();
    let mut warnings = Vec::new();
    for (subject, classes) in &layout {
        for cdir in classes {
            let cname = file_name(cdir);
            let label = vocabulary.binary_search(&cname).expect("class in vocabulary");
            for p in sorted_entries(cdir)? {
                let name = file_name(&p);
                let Some(stem) = name.strip_suffix(SKEL_EXT) else {
                    continue;
                };
                match load_sample(&p, subject, label, stem) {
                    Ok(s) => samples.push(s),
                    Err(e) => {
                        log::warn!("skipping {}: {e}", p.display());
                        warnings.push(e.to_string());
                    }
                }
            }
        }
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dataset = Dataset::new(vocabulary, subjects, samples)?;
    Ok(LoadedDataset { dataset, warnings })
}

/// Writes `d` in the canonical layout. Every `(subject, class)` directory is
/// created, including empty ones, so the vocabulary survives a reload.
pub fn save_dataset(d: &Dataset, root: &Path) -> Result<()> {
    for subject in &d.subjects {
        for class in &d.vocabulary {
            let dir = root.join(subject).join(class);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
    }
    for s in &d.samples {
        let dir = root.join(&s.subject_id).join(&d.vocabulary[s.class_label]);
        write_skel_json(&dir.join(format!("{}{SKEL_EXT}", s.sample_id)), s.fps, &s.frames)?;
        if let Some((l, r)) = &s.hand_volumes {
            write_hpv(&dir.join(format!("{}.{HPV_EXT}", s.sample_id)), l, r)?;
        }
    }
    Ok(())
}
