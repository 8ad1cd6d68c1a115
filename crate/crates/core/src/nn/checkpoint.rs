//! Binary model checkpoints.
//!
//! Layout, all integers little-endian `u32`: magic `SGNM`, version,
//! architecture tag (length + UTF-8), metadata (length + JSON), tensor count,
//! then per tensor: name (length + UTF-8), rank, dims, `f64` data.

use std::path::Path;

use super::params::ParamSet;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAGIC: &[u8; 4] = b"SGNM";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub arch: String,
    pub meta: serde_json::Value,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn from_params<T: Real, M: ParamSet<T>>(arch: &str, meta: serde_json::Value, model: &M) -> Self {
        let mut tensors = Vec::new();
        model.visit("", &mut |name, _, t| {
            tensors.push(NamedTensor {
                name: name.to_string(),
                shape: t.shape().to_vec(),
                data: t.as_slice().iter().map(|v| v.as_f64()).collect(),
            })
        });
        Checkpoint {
            arch: arch.to_string(),
            meta,
            tensors,
        }
    }

    /// Copies stored tensors into a model of matching structure.
    pub fn load_into<T: Real, M: ParamSet<T>>(&self, model: &mut M) -> Result<()> {
        let mut i = 0;
        let mut err = None;
        model.visit_mut("", &mut |name, _, t| {
            if err.is_some() {
                return;
            }
            match self.tensors.get(i) {
                Some(nt) if nt.name == name && nt.shape == t.shape() => {
                    t.as_mut_slice().iter_mut().zip(&nt.data).for_each(|(d, s)| *d = T::lit(*s));
                }
                Some(nt) => err = Some(format!("expected {name} {:?}, found {} {:?}", t.shape(), nt.name, nt.shape)),
                None => err = Some(format!("missing tensor {name}")),
            }
            i += 1;
        });
        if err.is_none() && i != self.tensors.len() {
            err = Some(format!("{} stored tensors, model has {i}", self.tensors.len()));
        }
        match err {
            Some(e) => Err(Error::Shape(format!("checkpoint does not fit model: {e}"))),
            None => Ok(()),
        }
    }

    pub fn tensor(&self, name: &str) -> Option<Tensor<f64>> {
        let nt = self.tensors.iter().find(|t| t.name == name)?;
        Tensor::from_vec(&nt.shape, nt.data.clone()).ok()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        put_str(&mut out, &self.arch);
        put_str(&mut out, &serde_json::to_string(&self.meta).expect("json value serializes"));
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            put_str(&mut out, &t.name);
            out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
            for d in &t.shape {
                out.extend_from_slice(&(*d as u32).to_le_bytes());
            }
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err("not a checkpoint (bad magic)".into());
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(format!("unsupported checkpoint version {version}"));
        }
        let arch = r.string()?;
        let meta = serde_json::from_str(&r.string()?).map_err(|e| format!("metadata: {e}"))?;
        let n = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            let name = r.string()?;
            let rank = r.u32()? as usize;
            let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<std::result::Result<Vec<_>, _>>()?;
            let len: usize = shape.iter().product();
            let raw = r.take(len.checked_mul(8).ok_or("tensor too large")?)?;
            let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
            tensors.push(NamedTensor { name, shape, data });
        }
        if r.pos != bytes.len() {
            return Err("trailing bytes after last tensor".into());
        }
        Ok(Checkpoint { arch, meta, tensors })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|m| Error::format(path, m))
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len()).ok_or("truncated checkpoint")?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn string(&mut self) -> std::result::Result<String, String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| "invalid utf-8 string".to_string())
    }
}
