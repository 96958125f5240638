//! The multitask network: a shared bottom bi-LSTM over word embeddings feeding
//! two separate bi-LSTM towers, one for per-token slot tags and one for the
//! sentence intent.
//!
//! ```text
//!   tokens -> [trained emb ; pretrained emb] -> common bi-LSTM -> r^c_t
//!   r^c_t (+ gazetteer bits) -> slot tower   -> r^slot_t = f_t ++ b_t   -> softmax per token
//!   r^c_t (+ gazetteer bits) -> intent tower -> r^intent = f_T ++ b_1   -> softmax
//! ```

mod forward;
mod io;
mod train;

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use forward::{compute_gradients, joint_loss, Encoded, ForwardTrace, Gold, LossParts, Prediction, TaskWeights};
pub use io::MODEL_FORMAT;
pub use train::{evaluate, predict_corpus, train, EpochRecord, Phase, TrainConfig, TrainLog};

use crate::corpus::{
    AnnotatedUtterance, GazetteerFeaturizer, LabelSpace, PretrainedEmbeddings, PretrainedSource, Vocabulary,
};
use crate::neural::checkpoint::sha256_hex;
use crate::neural::{BiLstmLayer, BlockMut, BlockRef, BlockKind, Parameters, SoftmaxHead, INIT_RANGE};
use crate::{Error, Result};

/// Layer widths. All three bi-LSTM layers share `hidden_dim` per direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelDims {
    pub trained_embed_dim: usize,
    pub pretrained_embed_dim: usize,
    pub hidden_dim: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims {
            trained_embed_dim: 300,
            pretrained_embed_dim: 300,
            hidden_dim: 128,
        }
    }
}

/// Every trainable array, in checkpoint order.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    /// `|V| x trained_embed_dim`
    pub embeddings: Array2<f64>,
    pub common: BiLstmLayer,
    pub slot_tower: BiLstmLayer,
    pub intent_tower: BiLstmLayer,
    pub slot_head: SoftmaxHead,
    pub intent_head: SoftmaxHead,
}

impl Weights {
    pub fn zeros_like(&self) -> Weights {
        let zero_layer = |l: &BiLstmLayer| BiLstmLayer::zeros(l.input_dim(), l.hidden_dim());
        Weights {
            embeddings: Array2::zeros(self.embeddings.raw_dim()),
            common: zero_layer(&self.common),
            slot_tower: zero_layer(&self.slot_tower),
            intent_tower: zero_layer(&self.intent_tower),
            slot_head: SoftmaxHead::zeros(self.slot_head.out_dim(), self.slot_head.in_dim()),
            intent_head: SoftmaxHead::zeros(self.intent_head.out_dim(), self.intent_head.in_dim()),
        }
    }

    /// Sum of `other` scaled by `k` into `self`.
    pub fn add_scaled(&mut self, other: &Weights, k: f64) {
        for (dst, src) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (d, s) in dst.data.iter_mut().zip(src.data) {
                *d += k * s;
            }
        }
    }
}

/// Block-name prefixes of the parts `bottom_only` transfer keeps.
pub const BOTTOM_BLOCKS: [&str; 2] = ["embeddings", "common."];

impl Parameters for Weights {
    fn blocks(&self) -> Vec<BlockRef<'_>> {
        let mut out = vec![BlockRef::matrix("embeddings".into(), BlockKind::Weight, &self.embeddings)];
        self.common.blocks("common", &mut out);
        self.slot_tower.blocks("slot_tower", &mut out);
        self.intent_tower.blocks("intent_tower", &mut out);
        self.slot_head.blocks("slot_head", &mut out);
        self.intent_head.blocks("intent_head", &mut out);
        out
    }

    fn blocks_mut(&mut self) -> Vec<BlockMut<'_>> {
        let mut out = vec![BlockMut::matrix("embeddings".into(), BlockKind::Weight, &mut self.embeddings)];
        self.common.blocks_mut("common", &mut out);
        self.slot_tower.blocks_mut("slot_tower", &mut out);
        self.intent_tower.blocks_mut("intent_tower", &mut out);
        self.slot_head.blocks_mut("slot_head", &mut out);
        self.intent_head.blocks_mut("intent_head", &mut out);
        out
    }
}

/// Vocabulary plus the frozen pre-trained vectors of its words. The trained
/// table lives in [`Weights::embeddings`].
#[derive(Clone, Debug)]
pub struct EmbeddingBundle {
    pub vocab: Vocabulary,
    pretrained: PretrainedEmbeddings,
    /// Pre-trained vector of each vocabulary word, `|V| x pretrained_dim`.
    pretrained_rows: Array2<f64>,
}

impl EmbeddingBundle {
    pub fn new(vocab: Vocabulary, pretrained: PretrainedEmbeddings) -> Self {
        let mut rows = Array2::zeros((vocab.len(), pretrained.dim()));
        for (i, tok) in vocab.tokens().iter().enumerate().skip(2) {
            rows.row_mut(i).assign(&ndarray::Array1::from(pretrained.lookup(tok)));
        }
        EmbeddingBundle {
            vocab,
            pretrained,
            pretrained_rows: rows,
        }
    }

    pub fn pretrained(&self) -> &PretrainedEmbeddings {
        &self.pretrained
    }

    pub fn pretrained_dim(&self) -> usize {
        self.pretrained.dim()
    }

    /// Frozen vector for any word, in or out of the vocabulary.
    pub fn pretrained_vector(&self, token: &str) -> Vec<f64> {
        if self.vocab.contains(token) {
            self.pretrained_rows.row(self.vocab.lookup(token)).to_vec()
        } else {
            self.pretrained.lookup(token)
        }
    }

    /// Adds unseen tokens; returns the number added.
    fn extend<'a>(&mut self, tokens: impl IntoIterator<Item = &'a String>) -> usize {
        let before = self.vocab.len();
        let added = self.vocab.extend(tokens);
        if added > 0 {
            let mut rows = Array2::zeros((self.vocab.len(), self.pretrained.dim()));
            rows.slice_mut(ndarray::s![..before, ..]).assign(&self.pretrained_rows);
            for i in before..self.vocab.len() {
                let v = self.pretrained.lookup(self.vocab.token(i));
                rows.row_mut(i).assign(&ndarray::Array1::from(v));
            }
            self.pretrained_rows = rows;
        }
        added
    }
}

/// How the slot and intent towers got their initial values. Stored in the
/// checkpoint so transfer mode can be audited.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "origin", rename_all = "snake_case")]
pub enum TowerInit {
    Fresh { seed: u64, fingerprint: String },
    Transferred { fingerprint: String },
}

impl TowerInit {
    pub fn fingerprint(&self) -> &str {
        match self {
            TowerInit::Fresh { fingerprint, .. } | TowerInit::Transferred { fingerprint } => fingerprint,
        }
    }

    pub fn is_fresh(&self) -> bool {
        matches!(self, TowerInit::Fresh { .. })
    }
}

/// SHA-256 over the raw bytes of both towers.
pub fn tower_fingerprint(weights: &Weights) -> String {
    let mut bytes = Vec::new();
    for b in weights.blocks() {
        if b.name.starts_with("slot_tower.") || b.name.starts_with("intent_tower.") {
            for v in b.data {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    sha256_hex(&bytes)
}

/// Where a pre-trained model's data came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRecord {
    pub name: String,
    pub sha256: String,
    pub utterances: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub sources: Vec<SourceRecord>,
    pub data_size: usize,
    pub config_hash: String,
}

/// Non-numeric checkpoint metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lineage {
    pub tower_init: TowerInit,
    /// Set on pre-trained models.
    pub provenance: Option<Provenance>,
    /// Checkpoint hash of the pre-trained parent, set on fine-tuned models.
    pub parent_checkpoint: Option<String>,
}

#[derive(Clone, Debug)]
pub struct MultitaskParams {
    pub weights: Weights,
    pub embeddings: EmbeddingBundle,
    pub labels: LabelSpace,
    pub gazetteers: Option<GazetteerFeaturizer>,
    pub dims: ModelDims,
    pub lineage: Lineage,
}

impl MultitaskParams {
    /// Fresh parameters: uniform weights, zero biases, forget-gate bias 1.
    pub fn new(
        vocab: Vocabulary,
        labels: LabelSpace,
        dims: ModelDims,
        pretrained: PretrainedEmbeddings,
        gazetteers: Option<GazetteerFeaturizer>,
        seed: u64,
    ) -> Result<Self> {
        if pretrained.dim() != dims.pretrained_embed_dim {
            return Err(Error::DimensionMismatch(format!(
                "pre-trained vectors are {}-dimensional, model expects {}",
                pretrained.dim(),
                dims.pretrained_embed_dim
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = dims.hidden_dim;
        let g = gazetteers.as_ref().map_or(0, GazetteerFeaturizer::len);
        let embeddings = crate::neural::uniform_matrix(vocab.len(), dims.trained_embed_dim, &mut rng);
        let common = BiLstmLayer::init(dims.trained_embed_dim + dims.pretrained_embed_dim, h, &mut rng);
        let slot_tower = BiLstmLayer::init(2 * h + g, h, &mut rng);
        let intent_tower = BiLstmLayer::init(2 * h + g, h, &mut rng);
        let slot_head = SoftmaxHead::init(labels.num_tags(), 2 * h, &mut rng);
        let intent_head = SoftmaxHead::init(labels.num_intents(), 2 * h, &mut rng);
        let weights = Weights {
            embeddings,
            common,
            slot_tower,
            intent_tower,
            slot_head,
            intent_head,
        };
        let tower_init = TowerInit::Fresh {
            seed,
            fingerprint: tower_fingerprint(&weights),
        };
        Ok(MultitaskParams {
            weights,
            embeddings: EmbeddingBundle::new(vocab, pretrained),
            labels,
            gazetteers,
            dims,
            lineage: Lineage {
                tower_init,
                provenance: None,
                parent_checkpoint: None,
            },
        })
    }

    /// Fresh parameters sized for a corpus: vocabulary and label space are
    /// taken from it.
    pub fn for_corpus(
        corpus: &[AnnotatedUtterance],
        dims: ModelDims,
        min_count: usize,
        pretrained: &PretrainedSource,
        gazetteers: Option<GazetteerFeaturizer>,
        seed: u64,
    ) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus("no utterances".into()));
        }
        let vocab = Vocabulary::build(corpus.iter().map(|u| &u.tokens), min_count);
        let labels = LabelSpace::from_corpus(corpus)?;
        MultitaskParams::new(vocab, labels, dims, pretrained.load()?, gazetteers, seed)
    }

    pub fn hidden_dim(&self) -> usize {
        self.dims.hidden_dim
    }

    pub fn gazetteer_input_dim(&self) -> usize {
        self.weights.slot_tower.input_dim() - 2 * self.weights.common.hidden_dim()
    }

    /// Checks the shape relations between layers.
    pub fn validate(&self) -> Result<()> {
        let w = &self.weights;
        let h = w.common.hidden_dim();
        let g = self.gazetteers.as_ref().map_or(0, GazetteerFeaturizer::len);
        let checks = [
            (w.embeddings.nrows(), self.embeddings.vocab.len(), "embedding rows vs vocabulary"),
            (w.embeddings.ncols(), self.dims.trained_embed_dim, "trained embedding width"),
            (w.common.input_dim(), self.dims.trained_embed_dim + self.embeddings.pretrained_dim(), "common input"),
            (w.slot_tower.input_dim(), 2 * h + g, "slot tower input"),
            (w.intent_tower.input_dim(), 2 * h + g, "intent tower input"),
            (w.slot_head.in_dim(), 2 * w.slot_tower.hidden_dim(), "slot head input"),
            (w.intent_head.in_dim(), 2 * w.intent_tower.hidden_dim(), "intent head input"),
            (w.slot_head.out_dim(), self.labels.num_tags(), "slot head output"),
            (w.intent_head.out_dim(), self.labels.num_intents(), "intent head output"),
        ];
        for (have, want, what) in checks {
            if have != want {
                return Err(Error::DimensionMismatch(format!("{what}: {have} != {want}")));
            }
        }
        Ok(())
    }

    /// Appends rows for unseen tokens, initialized like fresh embeddings.
    /// Existing rows are untouched.
    pub fn extend_vocab<'a>(&mut self, tokens: impl IntoIterator<Item = &'a String>, seed: u64) -> usize {
        let before = self.embeddings.vocab.len();
        let added = self.embeddings.extend(tokens);
        if added > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fresh = crate::neural::uniform_matrix(added, self.dims.trained_embed_dim, &mut rng);
            self.weights.embeddings.append(Axis(0), fresh.view()).expect("same width");
            debug_assert_eq!(self.weights.embeddings.nrows(), before + added);
        }
        added
    }

    pub fn featurize(&self, tokens: &[String]) -> Option<Array2<f64>> {
        self.gazetteers.as_ref().map(|g| g.featurize(tokens))
    }
}

/// Largest absolute initial weight value; useful in tests.
pub const WEIGHT_INIT_RANGE: f64 = INIT_RANGE;

#[cfg(test)]
mod tests;
