//! Checkpoint payload: an 8-byte magic, a little-endian `u64` header length,
//! a JSON header (format version plus tensor names, shapes and byte offsets),
//! then every tensor as little-endian `f32` values.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use super::tensor::{ParamTensor, Real};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"RLECKPT\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset into the payload section.
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredTensor {
    pub name: String,
    pub shape: [usize; 2],
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub tensors: Vec<StoredTensor>,
}

impl Checkpoint {
    pub fn push<T: Real>(&mut self, name: impl Into<String>, p: &ParamTensor<T>) {
        let data = p.values.iter().map(|v| v.f64() as f32).collect();
        self.tensors.push(StoredTensor {
            name: name.into(),
            shape: p.shape(),
            data,
        });
    }

    pub fn push_mlp<T: Real>(&mut self, prefix: &str, net: &Mlp<T>) {
        for (name, p) in net.named_params() {
            self.push(format!("{prefix}.{name}"), p);
        }
    }

    pub fn get(&self, name: &str) -> Option<&StoredTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn has_prefix(&self, prefix: &str) -> bool {
        let p = format!("{prefix}.");
        self.tensors.iter().any(|t| t.name.starts_with(&p))
    }

    pub fn load_param<T: Real>(&self, name: &str, p: &mut ParamTensor<T>) -> Result<()> {
        let t = self
            .get(name)
            .ok_or_else(|| Error::Checkpoint(format!("tensor {name} missing from checkpoint")))?;
        if t.shape != p.shape() {
            return Err(Error::Checkpoint(format!(
                "tensor {name}: checkpoint shape {:?} but model expects {:?}",
                t.shape,
                p.shape()
            )));
        }
        let values = Array2::from_shape_vec((t.shape[0], t.shape[1]), t.data.iter().map(|&v| T::of(v as f64)).collect())
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        p.assign(values)
    }

    pub fn load_mlp<T: Real>(&self, prefix: &str, net: &mut Mlp<T>) -> Result<()> {
        let names: Vec<String> = net.named_params().into_iter().map(|(n, _)| n).collect();
        for (name, p) in names.iter().zip(net.params_mut()) {
            self.load_param(&format!("{prefix}.{name}"), p)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut offset = 0u64;
        let entries = self
            .tensors
            .iter()
            .map(|t| {
                let e = TensorEntry {
                    name: t.name.clone(),
                    shape: t.shape.to_vec(),
                    offset,
                };
                offset += 4 * t.data.len() as u64;
                e
            })
            .collect();
        let header = serde_json::to_vec(&Header {
            format_version: FORMAT_VERSION,
            tensors: entries,
        })
        .expect("header serializes");
        let mut out = Vec::with_capacity(16 + header.len() + offset as usize);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for t in &self.tensors {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let hend = 16usize.checked_add(hlen).filter(|&e| e <= bytes.len()).ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(&bytes[16..hend]).map_err(|e| bad(&format!("bad header: {e}")))?;
        if header.format_version != FORMAT_VERSION {
            return Err(bad(&format!("unsupported format version {}", header.format_version)));
        }
        let payload = &bytes[hend..];
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for e in header.tensors {
            if e.shape.len() != 2 {
                return Err(bad(&format!("tensor {} has rank {}", e.name, e.shape.len())));
            }
            let n = e.shape[0] * e.shape[1];
            let start = e.offset as usize;
            let end = start + 4 * n;
            if end > payload.len() {
                return Err(bad(&format!("tensor {} exceeds payload", e.name)));
            }
            let data = payload[start..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            tensors.push(StoredTensor {
                name: e.name,
                shape: [e.shape[0], e.shape[1]],
                data,
            });
        }
        Ok(Self { tensors })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
