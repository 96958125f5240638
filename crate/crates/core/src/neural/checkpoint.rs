//! Binary model container: an 8-byte magic, the header length as a
//! little-endian `u64`, a JSON header, then every parameter block as
//! little-endian `f64` values in the order the header lists them.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::params::BlockRef;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"NLUBOOT\x01";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl BlockSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Serialize, Deserialize)]
struct Header<M> {
    format: String,
    version: u32,
    blocks: Vec<BlockSpec>,
    meta: M,
}

/// A decoded container.
#[derive(Clone, Debug)]
pub struct Container<M> {
    pub format: String,
    pub meta: M,
    pub blocks: Vec<(BlockSpec, Vec<f64>)>,
}

impl<M> Container<M> {
    /// Values of the block called `name`, checked against `shape`.
    pub fn take(&mut self, name: &str, shape: &[usize]) -> Result<Vec<f64>> {
        let pos = self
            .blocks
            .iter()
            .position(|(s, _)| s.name == name)
            .ok_or_else(|| Error::Checkpoint(format!("missing block `{name}`")))?;
        let (spec, data) = self.blocks.remove(pos);
        if spec.shape != shape {
            return Err(Error::Checkpoint(format!(
                "block `{name}` has shape {:?}, expected {shape:?}",
                spec.shape
            )));
        }
        Ok(data)
    }
}

pub fn encode<M: Serialize>(format: &str, meta: &M, blocks: &[BlockRef<'_>]) -> Result<Vec<u8>> {
    let header = Header {
        format: format.to_string(),
        version: FORMAT_VERSION,
        blocks: blocks
            .iter()
            .map(|b| BlockSpec {
                name: b.name.clone(),
                shape: b.shape.clone(),
            })
            .collect(),
        meta,
    };
    let json = serde_json::to_vec(&header)?;
    let total: usize = blocks.iter().map(|b| b.data.len()).sum();
    let mut out = Vec::with_capacity(16 + json.len() + 8 * total);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for b in blocks {
        for v in b.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Format tag of an encoded container, without decoding its blocks.
pub fn peek_format(bytes: &[u8]) -> Result<String> {
    #[derive(Deserialize)]
    struct Tag {
        format: String,
    }
    let (json, _) = split(bytes)?;
    Ok(serde_json::from_slice::<Tag>(json)?.format)
}

fn split(bytes: &[u8]) -> Result<(&[u8], &[u8])> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(Error::Checkpoint("not a model container (bad magic)".into()));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if bytes.len() < 16 + len {
        return Err(Error::Checkpoint("truncated header".into()));
    }
    Ok((&bytes[16..16 + len], &bytes[16 + len..]))
}

pub fn decode<M: DeserializeOwned>(bytes: &[u8], expected_format: &str) -> Result<Container<M>> {
    #[derive(Deserialize)]
    struct Probe {
        format: String,
        version: u32,
    }
    let (json, mut body) = split(bytes)?;
    let probe: Probe = serde_json::from_slice(json)?;
    if probe.version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: probe.version,
            expected: FORMAT_VERSION,
        });
    }
    if probe.format != expected_format {
        return Err(Error::Checkpoint(format!(
            "expected a `{expected_format}` container, found `{}`",
            probe.format
        )));
    }
    let header: Header<M> = serde_json::from_slice(json)?;
    let mut blocks = Vec::with_capacity(header.blocks.len());
    for spec in header.blocks {
        let n = spec.len();
        if body.len() < 8 * n {
            return Err(Error::Checkpoint(format!("truncated block `{}`", spec.name)));
        }
        let data = body[..8 * n]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        body = &body[8 * n..];
        blocks.push((spec, data));
    }
    if !body.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", body.len())));
    }
    Ok(Container {
        format: header.format,
        meta: header.meta,
        blocks,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_file(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::BlockKind;
    use ndarray::array;

    #[test]
    fn layout_and_roundtrip() {
        let w = array![[1.0, 2.0], [3.0, 4.0]];
        let b = array![0.5];
        let blocks = vec![
            BlockRef::matrix("w".into(), BlockKind::Weight, &w),
            BlockRef::vector("b".into(), BlockKind::Bias, &b),
        ];
        let bytes = encode("toy", &serde_json::json!({"k": 1}), &blocks).unwrap();
        assert_eq!(&bytes[..8], MAGIC);
        let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        assert_eq!(bytes.len(), 16 + hlen + 5 * 8);
        assert_eq!(&bytes[16 + hlen..16 + hlen + 8], &1.0f64.to_le_bytes());
        assert_eq!(peek_format(&bytes).unwrap(), "toy");

        let mut c: Container<serde_json::Value> = decode(&bytes, "toy").unwrap();
        assert_eq!(c.meta["k"], 1);
        assert_eq!(c.take("b", &[1]).unwrap(), vec![0.5]);
        assert!(c.take("w", &[4]).is_err());
        assert!(decode::<serde_json::Value>(&bytes, "other").is_err());
    }

    #[test]
    fn rejects_other_versions() {
        let bytes = encode("toy", &(), &[]).unwrap();
        let text = String::from_utf8_lossy(&bytes[16..]).replace("\"version\":1", "\"version\":9");
        let mut forged = bytes[..8].to_vec();
        forged.extend_from_slice(&(text.len() as u64).to_le_bytes());
        forged.extend_from_slice(text.as_bytes());
        assert!(matches!(
            decode::<()>(&forged, "toy"),
            Err(Error::VersionMismatch { found: 9, .. })
        ));
        assert!(decode::<()>(b"garbage", "toy").is_err());
    }
}
