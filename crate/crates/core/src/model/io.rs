use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{EmbeddingBundle, Lineage, ModelDims, MultitaskParams, Weights};
use crate::corpus::{GazetteerFeaturizer, LabelSpace, PretrainedSource, Vocabulary};
use crate::neural::checkpoint::{self, sha256_hex};
use crate::neural::{BiLstmLayer, LstmCellParams, Parameters, SoftmaxHead};
use crate::{Error, Result};

/// Container format tag of multitask checkpoints.
pub const MODEL_FORMAT: &str = "multitask";

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    dims: ModelDims,
    gazetteer_input_dim: usize,
    labels: LabelSpace,
    vocab: Vocabulary,
    pretrained: PretrainedSource,
    gazetteers: Option<GazetteerFeaturizer>,
    lineage: Lineage,
}

fn take_matrix<M>(c: &mut checkpoint::Container<M>, name: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
    let data = c.take(name, &[rows, cols])?;
    Ok(Array2::from_shape_vec((rows, cols), data).expect("shape checked"))
}

fn take_vector<M>(c: &mut checkpoint::Container<M>, name: &str, len: usize) -> Result<Array1<f64>> {
    Ok(Array1::from(c.take(name, &[len])?))
}

fn take_cell<M>(c: &mut checkpoint::Container<M>, name: &str, d: usize, h: usize) -> Result<LstmCellParams> {
    Ok(LstmCellParams {
        w_input: take_matrix(c, &format!("{name}.w_input"), 4 * h, d)?,
        w_hidden: take_matrix(c, &format!("{name}.w_hidden"), 4 * h, h)?,
        bias: take_vector(c, &format!("{name}.bias"), 4 * h)?,
    })
}

fn take_layer<M>(c: &mut checkpoint::Container<M>, name: &str, d: usize, h: usize) -> Result<BiLstmLayer> {
    Ok(BiLstmLayer {
        forward: take_cell(c, &format!("{name}.fwd"), d, h)?,
        backward: take_cell(c, &format!("{name}.bwd"), d, h)?,
    })
}

fn take_head<M>(c: &mut checkpoint::Container<M>, name: &str, out: usize, inp: usize) -> Result<SoftmaxHead> {
    Ok(SoftmaxHead {
        weight: take_matrix(c, &format!("{name}.weight"), out, inp)?,
        bias: take_vector(c, &format!("{name}.bias"), out)?,
    })
}

impl MultitaskParams {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let header = ModelHeader {
            dims: self.dims,
            gazetteer_input_dim: self.gazetteer_input_dim(),
            labels: self.labels.clone(),
            vocab: self.embeddings.vocab.clone(),
            pretrained: self.embeddings.pretrained().source().clone(),
            gazetteers: self.gazetteers.clone(),
            lineage: self.lineage.clone(),
        };
        checkpoint::encode(MODEL_FORMAT, &header, &self.weights.blocks())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut c = checkpoint::decode::<ModelHeader>(bytes, MODEL_FORMAT)?;
        let dims = c.meta.dims;
        let g = c.meta.gazetteer_input_dim;
        let h = dims.hidden_dim;
        let v = c.meta.vocab.len();
        let (n_tags, n_intents) = (c.meta.labels.num_tags(), c.meta.labels.num_intents());
        let weights = Weights {
            embeddings: take_matrix(&mut c, "embeddings", v, dims.trained_embed_dim)?,
            common: take_layer(&mut c, "common", dims.trained_embed_dim + dims.pretrained_embed_dim, h)?,
            slot_tower: take_layer(&mut c, "slot_tower", 2 * h + g, h)?,
            intent_tower: take_layer(&mut c, "intent_tower", 2 * h + g, h)?,
            slot_head: take_head(&mut c, "slot_head", n_tags, 2 * h)?,
            intent_head: take_head(&mut c, "intent_head", n_intents, 2 * h)?,
        };
        if let Some((spec, _)) = c.blocks.first() {
            return Err(Error::Checkpoint(format!("unexpected block `{}`", spec.name)));
        }
        let meta = c.meta;
        let params = MultitaskParams {
            weights,
            embeddings: EmbeddingBundle::new(meta.vocab, meta.pretrained.load()?),
            labels: meta.labels,
            gazetteers: meta.gazetteers,
            dims,
            lineage: meta.lineage,
        };
        params.validate()?;
        Ok(params)
    }

    /// SHA-256 of the encoded checkpoint.
    pub fn checkpoint_hash(&self) -> Result<String> {
        Ok(sha256_hex(&self.to_bytes()?))
    }

    /// Writes the checkpoint and a label manifest next to it
    /// (`<path>.labels.json`).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        checkpoint::write_file(path, &self.to_bytes()?)?;
        let manifest = serde_json::to_vec_pretty(&self.labels.manifest())?;
        let m = manifest_path(path);
        std::fs::write(&m, manifest).map_err(|e| Error::io(&m, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        MultitaskParams::from_bytes(&checkpoint::read_file(path)?)
    }
}

pub(crate) fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".labels.json");
    PathBuf::from(s)
}
