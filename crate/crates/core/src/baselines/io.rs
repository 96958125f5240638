use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{CrfModel, CrfWeights, MaxEntModel, MaxEntWeights};
use crate::config::BaselineConfig;
use crate::corpus::{GazetteerFeaturizer, Span, Tag};
use crate::neural::checkpoint;
use crate::neural::{BlockRef, Parameters};
use crate::{Error, Result};

/// Container format tag of baseline model files.
pub const BASELINE_FORMAT: &str = "baseline";

#[derive(Serialize, Deserialize)]
struct MaxEntHeader {
    intents: Vec<String>,
    features: Vec<String>,
    gazetteers: Option<GazetteerFeaturizer>,
    config: BaselineConfig,
}

#[derive(Serialize, Deserialize)]
struct CrfHeader {
    tags: Vec<Tag>,
    features: Vec<String>,
    gazetteers: Option<GazetteerFeaturizer>,
    config: BaselineConfig,
}

#[derive(Serialize, Deserialize)]
struct BaselineHeader {
    maxent: Option<MaxEntHeader>,
    crf: Option<CrfHeader>,
}

/// The baseline engine: MaxEnt for intents, CRF for slots. Either part may be
/// missing from a single file; [`BaselineModel::merge`] combines files.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BaselineModel {
    pub maxent: Option<MaxEntModel>,
    pub crf: Option<CrfModel>,
}

impl BaselineModel {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = BaselineHeader {
            maxent: self.maxent.as_ref().map(|m| MaxEntHeader {
                intents: m.intents.clone(),
                features: m.features.clone(),
                gazetteers: m.gazetteers.clone(),
                config: m.config.clone(),
            }),
            crf: self.crf.as_ref().map(|m| CrfHeader {
                tags: m.tags.clone(),
                features: m.features.clone(),
                gazetteers: m.gazetteers.clone(),
                config: m.config.clone(),
            }),
        };
        let mut blocks: Vec<BlockRef<'_>> = Vec::new();
        if let Some(m) = &self.maxent {
            blocks.extend(m.weights.blocks());
        }
        if let Some(m) = &self.crf {
            blocks.extend(m.weights.blocks());
        }
        checkpoint::encode(BASELINE_FORMAT, &header, &blocks)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut c = checkpoint::decode::<BaselineHeader>(bytes, BASELINE_FORMAT)?;
        let matrix = |data: Vec<f64>, r: usize, k: usize| Array2::from_shape_vec((r, k), data).expect("shape checked");
        let mut out = BaselineModel::default();
        if let Some(h) = c.meta.maxent.take() {
            let (r, k) = (h.intents.len(), h.features.len());
            let w = matrix(c.take("maxent.weights", &[r, k])?, r, k);
            let mut m = MaxEntModel::new(h.intents, h.features, h.gazetteers, h.config);
            m.weights = MaxEntWeights(w);
            out.maxent = Some(m);
        }
        if let Some(h) = c.meta.crf.take() {
            let (r, k) = (h.tags.len(), h.features.len());
            let emissions = matrix(c.take("crf.emissions", &[r, k])?, r, k);
            let transitions = matrix(c.take("crf.transitions", &[r, r])?, r, r);
            let mut m = CrfModel::new(h.tags, h.features, h.gazetteers, h.config);
            m.weights = CrfWeights { emissions, transitions };
            out.crf = Some(m);
        }
        if let Some((spec, _)) = c.blocks.first() {
            return Err(Error::Checkpoint(format!("unexpected block `{}`", spec.name)));
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        checkpoint::write_file(path, &self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        BaselineModel::from_bytes(&checkpoint::read_file(path)?)
    }

    /// Takes each part from whichever model has it.
    pub fn merge(self, other: BaselineModel) -> Result<Self> {
        if (self.maxent.is_some() && other.maxent.is_some()) || (self.crf.is_some() && other.crf.is_some()) {
            return Err(Error::ConfigViolation("two baseline files provide the same component".into()));
        }
        Ok(BaselineModel {
            maxent: self.maxent.or(other.maxent),
            crf: self.crf.or(other.crf),
        })
    }

    /// Intent from MaxEnt and spans from the CRF.
    pub fn predict(&self, tokens: &[String]) -> Result<(String, Vec<Span>)> {
        let (Some(me), Some(crf)) = (&self.maxent, &self.crf) else {
            return Err(Error::ConfigViolation("baseline prediction needs both a MaxEnt and a CRF model".into()));
        };
        Ok((me.predict(tokens).0, crf.predict_spans(tokens)))
    }
}
