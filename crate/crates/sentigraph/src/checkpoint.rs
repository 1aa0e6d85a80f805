//! Parameter checkpoint: a magic string and version byte, a
//! model-config header (validated on load), a manifest of
//! (name, shape, dtype) entries, then raw little-endian f64 data per
//! tensor in manifest order.
//!
//! The frozen word table is stored alongside the trainable registry
//! under the name `embedding.table`, so a checkpoint plus the matching
//! vocabulary file is enough to run inference. The vocabulary itself is
//! tied in by content hash only.

use std::fs;
use std::path::Path;

use crate::model::{ModelConfig, ModelParams};
use crate::numerics::Matrix;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"SGNNCKPT";
const VERSION: u8 = 1;
const DTYPE_F64_LE: u8 = 0;

/// Name given to the frozen word table in the manifest.
pub const EMBEDDING_TENSOR: &str = "embedding.table";

/// Hard ceilings applied before any allocation while decoding.
const MAX_TENSORS: usize = 512;
const MAX_NAME_LEN: usize = 256;

/// A decoded checkpoint.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub embeddings: Matrix,
    pub vocab_hash: u64,
}

/// Serializes parameters, the frozen word table, and the vocabulary hash.
pub fn encode(params: &ModelParams, embeddings: &Matrix, vocab_hash: u64) -> Vec<u8> {
    let c = &params.config;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    for v in [
        c.emb_dim as u32,
        c.pos_dim as u32,
        c.hidden as u32,
        c.gat_dim as u32,
        c.gcn_layers as u32,
        c.d_max as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&c.leaky_slope.to_le_bytes());
    out.push(u8::from(c.mean_aggregation));
    out.extend_from_slice(&vocab_hash.to_le_bytes());

    let ids = params.tensor_ids();
    let manifest: Vec<(String, (usize, usize), &[f64])> = ids
        .iter()
        .map(|&id| (id.name(), params.tensor_shape(id), params.tensor(id)))
        .chain(std::iter::once((
            EMBEDDING_TENSOR.to_string(),
            embeddings.shape(),
            embeddings.data(),
        )))
        .collect();

    out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
    for (name, (rows, cols), _) in &manifest {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(*rows as u32).to_le_bytes());
        out.extend_from_slice(&(*cols as u32).to_le_bytes());
        out.push(DTYPE_F64_LE);
    }
    for (_, _, data) in &manifest {
        for v in *data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Checkpoint(format!(
                "truncated: needed {n} bytes at offset {}",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

/// Decodes and validates a checkpoint. Every registry tensor must be
/// present with the shape the config header implies; unknown or
/// duplicate names are rejected.
pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = cur.u8()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let emb_dim = cur.u32()? as usize;
    let pos_dim = cur.u32()? as usize;
    let hidden = cur.u32()? as usize;
    let gat_dim = cur.u32()? as usize;
    let gcn_layers = cur.u32()? as usize;
    let d_max = cur.u32()? as usize;
    let leaky_slope = cur.f64()?;
    let mean_aggregation = match cur.u8()? {
        0 => false,
        1 => true,
        other => {
            return Err(Error::Checkpoint(format!(
                "bad mean-aggregation flag {other}"
            )))
        }
    };
    let vocab_hash = cur.u64()?;
    let config = ModelConfig {
        emb_dim,
        pos_dim,
        hidden,
        gat_dim,
        gcn_layers,
        d_max,
        leaky_slope,
        mean_aggregation,
    };
    config
        .validate()
        .map_err(|e| Error::Checkpoint(format!("header rejected: {e}")))?;

    let count = cur.u32()? as usize;
    if count > MAX_TENSORS {
        return Err(Error::Checkpoint(format!("manifest of {count} tensors")));
    }
    let mut manifest: Vec<(String, usize, usize)> = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = cur.u16()? as usize;
        if name_len == 0 || name_len > MAX_NAME_LEN {
            return Err(Error::Checkpoint(format!("bad name length {name_len}")));
        }
        let name = std::str::from_utf8(cur.take(name_len)?)
            .map_err(|_| Error::Checkpoint("tensor name is not utf-8".into()))?
            .to_string();
        let rows = cur.u32()? as usize;
        let cols = cur.u32()? as usize;
        let dtype = cur.u8()?;
        if dtype != DTYPE_F64_LE {
            return Err(Error::Checkpoint(format!("unknown dtype tag {dtype}")));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Checkpoint("tensor shape overflows".into()))?;
        if manifest.iter().any(|(n, _, _)| *n == name) {
            return Err(Error::Checkpoint(format!("duplicate tensor {name:?}")));
        }
        manifest.push((name, rows, cols));
        // Data length feasibility before any float is read.
        let _ = len;
    }
    let expected_floats: usize = manifest
        .iter()
        .try_fold(0usize, |acc, (_, r, c)| acc.checked_add(r * c))
        .ok_or_else(|| Error::Checkpoint("total size overflows".into()))?;
    if cur.remaining() != expected_floats * 8 {
        return Err(Error::Checkpoint(format!(
            "payload of {} bytes does not match manifest ({} floats)",
            cur.remaining(),
            expected_floats
        )));
    }

    let mut tensors: Vec<(String, usize, usize, Vec<f64>)> = Vec::with_capacity(count);
    for (name, rows, cols) in manifest {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let v = cur.f64()?;
            if !v.is_finite() {
                return Err(Error::Checkpoint(format!(
                    "non-finite value in tensor {name:?}"
                )));
            }
            data.push(v);
        }
        tensors.push((name, rows, cols, data));
    }

    let mut params = ModelParams::zeros(&config);
    let mut used = vec![false; tensors.len()];
    for id in params.tensor_ids() {
        let name = id.name();
        let shape = params.tensor_shape(id);
        let idx = tensors
            .iter()
            .position(|(n, _, _, _)| *n == name)
            .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name:?}")))?;
        let (_, rows, cols, data) = &tensors[idx];
        if (*rows, *cols) != shape {
            return Err(Error::Checkpoint(format!(
                "tensor {name:?} has shape {rows}x{cols}, expected {}x{}",
                shape.0, shape.1
            )));
        }
        params.tensor_mut(id).copy_from_slice(data);
        used[idx] = true;
    }
    let emb_idx = tensors
        .iter()
        .position(|(n, _, _, _)| n == EMBEDDING_TENSOR)
        .ok_or_else(|| Error::Checkpoint(format!("missing tensor {EMBEDDING_TENSOR:?}")))?;
    let (_, rows, cols, data) = &tensors[emb_idx];
    if *cols != config.emb_dim || *rows < 2 {
        return Err(Error::Checkpoint(format!(
            "word table shape {rows}x{cols} disagrees with emb_dim {}",
            config.emb_dim
        )));
    }
    let embeddings = Matrix::from_vec(*rows, *cols, data.clone())
        .map_err(|e| Error::Checkpoint(format!("word table rejected: {e}")))?;
    used[emb_idx] = true;

    if let Some(idx) = used.iter().position(|u| !u) {
        return Err(Error::Checkpoint(format!(
            "unexpected tensor {:?}",
            tensors[idx].0
        )));
    }
    Ok(Checkpoint {
        params,
        embeddings,
        vocab_hash,
    })
}

pub fn save(path: &Path, params: &ModelParams, embeddings: &Matrix, vocab_hash: u64) -> Result<()> {
    fs::write(path, encode(params, embeddings, vocab_hash))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    decode(&fs::read(path)?)
}
