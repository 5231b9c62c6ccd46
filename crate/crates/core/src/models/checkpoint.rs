//! Binary checkpoint:
//!
//! ```text
//! "CGCK"  u32 version  [32] sha256(header json)
//! u32 len, header json            {"arch": ..., "mode": ...}
//! u32 count, count x (u32 len, name, u32 rows, u32 cols, u64 offset)
//! u64 floats, little-endian f32 payload
//! u32 crc32 of everything above
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::{Architecture, Model, TrainMode};
use super::params::Params;
use crate::tensor::Tensor;
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"CGCK";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    arch: Architecture,
    mode: TrainMode,
}

/// SHA-256 of the architecture descriptor as stored in checkpoints.
pub fn config_hash(arch: &Architecture, mode: TrainMode) -> [u8; 32] {
    let json = serde_json::to_vec(&Header {
        arch: arch.clone(),
        mode,
    })
    .expect("architecture serializes");
    Sha256::digest(&json).into()
}

pub fn encode_checkpoint(model: &Model) -> Vec<u8> {
    let header = serde_json::to_vec(&Header {
        arch: model.arch().clone(),
        mode: model.mode(),
    })
    .expect("architecture serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&Sha256::digest(&header));
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);

    let entries: Vec<(String, &Tensor<f32>)> = model
        .heads()
        .iter()
        .enumerate()
        .flat_map(|(h, p)| p.iter().map(move |(n, t)| (format!("head{h}/{n}"), t)))
        .collect();
    out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    let mut offset = 0u64;
    for (name, t) in &entries {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(t.cols() as u32).to_le_bytes());
        out.extend_from_slice(&offset.to_le_bytes());
        offset += t.len() as u64;
    }
    out.extend_from_slice(&offset.to_le_bytes());
    for (_, t) in &entries {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format(self.path, "checkpoint is truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_checkpoint(path: &Path, bytes: &[u8]) -> Result<Model> {
    if bytes.len() < 4 + 4 + 32 + 4 {
        return Err(Error::format(path, "checkpoint is truncated"));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
        return Err(Error::Checksum {
            path: path.to_path_buf(),
        });
    }
    let mut r = Reader {
        path,
        bytes: body,
        pos: 0,
    };
    if r.take(4)? != MAGIC {
        return Err(Error::format(path, "missing CGCK magic"));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Version {
            path: path.to_path_buf(),
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let hash: [u8; 32] = r.take(32)?.try_into().unwrap();
    let len = r.u32()? as usize;
    let json = r.take(len)?;
    if <[u8; 32]>::from(Sha256::digest(json)) != hash {
        return Err(Error::format(
            path,
            "config hash does not match the stored architecture",
        ));
    }
    let header: Header =
        serde_json::from_slice(json).map_err(|e| Error::format(path, e.to_string()))?;

    let count = r.u32()? as usize;
    let mut manifest = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let n = r.u32()? as usize;
        let name = String::from_utf8(r.take(n)?.to_vec())
            .map_err(|_| Error::format(path, "parameter name is not UTF-8"))?;
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let offset = r.u64()? as usize;
        manifest.push((name, rows, cols, offset));
    }
    let floats = r.u64()? as usize;
    let payload = r.take(
        floats
            .checked_mul(4)
            .ok_or_else(|| Error::format(path, "payload overflow"))?,
    )?;
    if r.pos != body.len() {
        return Err(Error::format(path, "trailing bytes after payload"));
    }

    // the stored tensors must be exactly what this architecture declares
    let reference = Model::new(header.arch.clone(), header.mode, 0);
    let expected: Vec<(String, (usize, usize))> = reference
        .heads()
        .iter()
        .enumerate()
        .flat_map(|(h, p)| {
            p.iter()
                .map(move |(n, t)| (format!("head{h}/{n}"), t.shape()))
        })
        .collect();
    let got: Vec<(String, (usize, usize))> = manifest
        .iter()
        .map(|(n, r, c, _)| (n.clone(), (*r, *c)))
        .collect();
    if got != expected {
        return Err(Error::format(
            path,
            "parameter manifest does not match the architecture",
        ));
    }

    let mut heads = Vec::new();
    let mut current: Vec<(String, Tensor<f32>)> = Vec::new();
    let mut current_head = 0;
    for (name, rows, cols, offset) in manifest {
        let (head, short) = name.split_once('/').unwrap();
        let head: usize = head[4..].parse().unwrap();
        if head != current_head {
            heads.push(Params::from_entries(std::mem::take(&mut current)));
            current_head = head;
        }
        let n = rows * cols;
        if offset + n > floats {
            return Err(Error::format(
                path,
                format!("tensor {name} runs past the payload"),
            ));
        }
        let data = payload[offset * 4..(offset + n) * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        current.push((short.to_string(), Tensor::from_vec(rows, cols, data)?));
    }
    heads.push(Params::from_entries(current));
    Ok(Model::from_heads(header.arch, header.mode, heads))
}

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_checkpoint(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(path, &bytes)
}

/// Loads and refuses checkpoints built for a different architecture.
pub fn load_checkpoint_for(
    path: impl AsRef<Path>,
    arch: &Architecture,
    mode: TrainMode,
) -> Result<Model> {
    let path = path.as_ref();
    let model = load_checkpoint(path)?;
    if config_hash(model.arch(), model.mode()) != config_hash(arch, mode) {
        return Err(Error::format(
            path,
            format!(
                "checkpoint architecture {:?}/{:?} differs from the requested {:?}/{:?}",
                model.arch().kind(),
                model.mode(),
                arch.kind(),
                mode
            ),
        ));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelKind, TabularArch};

    fn small() -> Model {
        let arch = Architecture::Tabular(TabularArch {
            d_seller: 2,
            d_product: 1,
            d_offer: 1,
            hidden: 3,
        });
        Model::new(arch, TrainMode::NineBinary, 5)
    }

    #[test]
    fn round_trip_is_exact() {
        let m = small();
        let bytes = encode_checkpoint(&m);
        let back = decode_checkpoint(Path::new("m"), &bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.kind(), ModelKind::Tabular);
    }

    #[test]
    fn any_flipped_byte_is_rejected() {
        let bytes = encode_checkpoint(&small());
        for i in (0..bytes.len()).step_by(7) {
            let mut bad = bytes.clone();
            bad[i] ^= 0x40;
            assert!(decode_checkpoint(Path::new("m"), &bad).is_err(), "byte {i}");
        }
        assert!(decode_checkpoint(Path::new("m"), &bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn other_architecture_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let m = small();
        save_checkpoint(&m, &path).unwrap();
        assert!(load_checkpoint_for(&path, m.arch(), TrainMode::NineBinary).is_ok());
        assert!(load_checkpoint_for(&path, m.arch(), TrainMode::MultiTask).is_err());
        let mut other = m.arch().clone();
        if let Architecture::Tabular(a) = &mut other {
            a.hidden = 4;
        }
        assert!(load_checkpoint_for(&path, &other, TrainMode::NineBinary).is_err());
    }
}
