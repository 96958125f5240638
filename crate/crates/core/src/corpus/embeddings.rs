//! Frozen pre-trained word vectors.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Where the frozen vectors come from. Stored in checkpoint headers so a
/// loaded model can rebuild the same table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PretrainedSource {
    /// Seeded random unit-norm vector per word, used when no embedding file is
    /// configured.
    Stub { seed: u64, dim: usize },
    /// Word2vec-style text file.
    File { path: PathBuf, dim: usize },
}

impl PretrainedSource {
    pub fn dim(&self) -> usize {
        match self {
            PretrainedSource::Stub { dim, .. } | PretrainedSource::File { dim, .. } => *dim,
        }
    }

    pub fn load(&self) -> Result<PretrainedEmbeddings> {
        match self {
            PretrainedSource::Stub { seed, dim } => Ok(PretrainedEmbeddings::stub(*seed, *dim)),
            PretrainedSource::File { path, dim } => load_pretrained_embeddings(path, *dim),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PretrainedEmbeddings {
    source: PretrainedSource,
    vectors: HashMap<String, Vec<f64>>,
}

impl PretrainedEmbeddings {
    pub fn stub(seed: u64, dim: usize) -> Self {
        PretrainedEmbeddings {
            source: PretrainedSource::Stub { seed, dim },
            vectors: HashMap::new(),
        }
    }

    pub fn source(&self) -> &PretrainedSource {
        &self.source
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Vector for `word`. Absent words get zeros for file-backed tables.
    pub fn lookup(&self, word: &str) -> Vec<f64> {
        match &self.source {
            PretrainedSource::Stub { seed, dim } => stub_vector(*seed, *dim, word),
            PretrainedSource::File { dim, .. } => {
                self.vectors.get(word).cloned().unwrap_or_else(|| vec![0.0; *dim])
            }
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn stub_vector(seed: u64, dim: usize, word: &str) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(word.as_bytes()) ^ seed.rotate_left(17));
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Reads `word v1 ... vD` lines. An optional leading `count dim` header is
/// accepted and checked against `dim`.
pub fn load_pretrained_embeddings(path: impl AsRef<Path>, dim: usize) -> Result<PretrainedEmbeddings> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut vectors = HashMap::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if n == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
            let declared: usize = fields[1].parse().unwrap();
            if declared != dim {
                return Err(Error::DimensionMismatch(format!(
                    "embedding file declares dimension {declared}, expected {dim}"
                )));
            }
            continue;
        }
        let values = &fields[1..];
        if values.len() != dim {
            return Err(Error::MalformedLine {
                line: n + 1,
                reason: format!("expected {dim} values, found {}", values.len()),
            });
        }
        let v = values
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::MalformedLine {
                line: n + 1,
                reason: e.to_string(),
            })?;
        vectors.insert(fields[0].to_string(), v);
    }
    Ok(PretrainedEmbeddings {
        source: PretrainedSource::File {
            path: path.to_path_buf(),
            dim,
        },
        vectors,
    })
}
