//! Any trained model that produces intents and slot spans, loaded from a
//! model file whatever its format.

use std::path::Path;

use crate::baselines::{BaselineModel, BASELINE_FORMAT};
use crate::corpus::{AnnotatedUtterance, Span};
use crate::eval::{domain_metrics, DomainMetrics, UtterancePrediction};
use crate::model::{MultitaskParams, MODEL_FORMAT};
use crate::neural::checkpoint;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub enum Engine {
    Neural(Box<MultitaskParams>),
    Baseline(BaselineModel),
}

impl Engine {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        match checkpoint::peek_format(bytes)?.as_str() {
            MODEL_FORMAT => Ok(Engine::Neural(Box::new(MultitaskParams::from_bytes(bytes)?))),
            BASELINE_FORMAT => Ok(Engine::Baseline(BaselineModel::from_bytes(bytes)?)),
            other => Err(Error::Checkpoint(format!("unknown model format `{other}`"))),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Engine::from_bytes(&checkpoint::read_file(path)?)
    }

    pub fn predict(&self, tokens: &[String]) -> Result<(String, Vec<Span>)> {
        match self {
            Engine::Neural(p) => {
                let pred = p.predict(tokens)?;
                Ok((pred.intent, pred.spans))
            }
            Engine::Baseline(b) => b.predict(tokens),
        }
    }

    pub fn predict_corpus(&self, corpus: &[AnnotatedUtterance]) -> Result<Vec<UtterancePrediction>> {
        corpus
            .iter()
            .map(|u| {
                let (intent, spans) = self.predict(&u.tokens)?;
                Ok(UtterancePrediction {
                    intent,
                    spans,
                    reference: u.clone(),
                })
            })
            .collect()
    }

    pub fn evaluate(&self, corpus: &[AnnotatedUtterance]) -> Result<DomainMetrics> {
        domain_metrics(&self.predict_corpus(corpus)?)
    }
}

impl From<MultitaskParams> for Engine {
    fn from(p: MultitaskParams) -> Self {
        Engine::Neural(Box::new(p))
    }
}

impl From<BaselineModel> for Engine {
    fn from(b: BaselineModel) -> Self {
        Engine::Baseline(b)
    }
}
