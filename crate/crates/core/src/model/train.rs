use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forward::{compute_gradients, Encoded, Gold, TaskWeights};
use super::{MultitaskParams, BOTTOM_BLOCKS};
use crate::corpus::AnnotatedUtterance;
use crate::eval::{domain_metrics, DomainMetrics, UtterancePrediction};
use crate::neural::{AdamConfig, AdamState, RegularizationConfig};
use crate::{Error, Result};

/// Smallest corpus `train` accepts.
pub const MIN_TRAIN_UTTERANCES: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Upper bound on epochs; early stopping may end sooner.
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs without a dev-SER improvement before stopping.
    pub patience: usize,
    /// Share of the shuffled corpus held out for early stopping, taken from
    /// the end. With 0 the training set doubles as dev set.
    pub dev_fraction: f64,
    pub seed: u64,
    pub regularization: RegularizationConfig,
    pub optimizer: AdamConfig,
    /// Keep the embeddings and the common layer fixed.
    pub freeze_common: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 16,
            patience: 3,
            dev_fraction: 0.1,
            seed: 0,
            regularization: RegularizationConfig::default(),
            optimizer: AdamConfig::default(),
            freeze_common: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.dev_fraction) {
            return Err(Error::ConfigViolation("dev_fraction must be in [0, 0.5]".into()));
        }
        if self.patience == 0 {
            return Err(Error::ConfigViolation("patience must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::ConfigViolation("batch_size must be at least 1".into()));
        }
        self.regularization.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Train,
    Pretrain,
    FineTune,
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_f1_intent: f64,
    pub dev_f1_slot: f64,
    pub dev_ser: f64,
    pub phase: Phase,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parent_checkpoint: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (0 = the initial parameters).
    pub best_epoch: usize,
}

impl TrainLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes()).map_err(|e| Error::io(path, e))
    }

    /// First epoch whose dev SER is at or below `threshold`.
    pub fn epochs_to_reach(&self, threshold: f64) -> Option<usize> {
        self.records.iter().find(|r| r.dev_ser <= threshold).map(|r| r.epoch)
    }

    pub fn set_phase(&mut self, phase: Phase) {
        for r in &mut self.records {
            r.phase = phase;
        }
    }
}

pub fn predict_corpus(params: &MultitaskParams, corpus: &[AnnotatedUtterance]) -> Result<Vec<UtterancePrediction>> {
    corpus
        .iter()
        .map(|u| {
            let p = params.predict(&u.tokens)?;
            Ok(UtterancePrediction {
                intent: p.intent,
                spans: p.spans,
                reference: u.clone(),
            })
        })
        .collect()
}

pub fn evaluate(params: &MultitaskParams, corpus: &[AnnotatedUtterance]) -> Result<DomainMetrics> {
    domain_metrics(&predict_corpus(params, corpus)?)
}

/// Shuffled minibatch Adam with dev-SER early stopping. The returned
/// parameters are the best ones seen on the dev split.
pub fn train(
    mut params: MultitaskParams,
    corpus: &[AnnotatedUtterance],
    cfg: &TrainConfig,
) -> Result<(MultitaskParams, TrainLog)> {
    cfg.validate()?;
    if corpus.len() < MIN_TRAIN_UTTERANCES {
        return Err(Error::EmptyCorpus(format!(
            "training needs at least {MIN_TRAIN_UTTERANCES} utterances, got {}",
            corpus.len()
        )));
    }
    params.labels.check_covers(corpus)?;
    let phase = if params.lineage.parent_checkpoint.is_some() {
        Phase::FineTune
    } else {
        Phase::Train
    };
    let mut log = TrainLog {
        records: Vec::new(),
        best_epoch: 0,
    };
    if cfg.epochs == 0 {
        return Ok((params, log));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut rng);
    let n_dev = (cfg.dev_fraction * corpus.len() as f64).round() as usize;
    let (train_idx, dev_idx) = order.split_at(corpus.len() - n_dev);
    let dev: Vec<AnnotatedUtterance> = if dev_idx.is_empty() {
        train_idx.iter().map(|&i| corpus[i].clone()).collect()
    } else {
        dev_idx.iter().map(|&i| corpus[i].clone()).collect()
    };
    let examples: Vec<(Encoded, Gold)> = train_idx
        .iter()
        .map(|&i| Ok((params.encode(&corpus[i].tokens)?, params.gold(&corpus[i])?)))
        .collect::<Result<_>>()?;

    let mut adam = AdamState::new(cfg.optimizer);
    let frozen = |name: &str| cfg.freeze_common && BOTTOM_BLOCKS.iter().any(|p| name.starts_with(p));
    let mut best = (f64::INFINITY, params.weights.clone());
    let mut since_best = 0;
    let mut batch_order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 1..=cfg.epochs {
        batch_order.shuffle(&mut rng);
        let mut train_loss = 0.0;
        for chunk in batch_order.chunks(cfg.batch_size) {
            let batch: Vec<(Encoded, Gold)> = chunk.iter().map(|&i| examples[i].clone()).collect();
            let (loss, grads) =
                compute_gradients(&params, &batch, &cfg.regularization, TaskWeights::JOINT, Some(&mut rng))?;
            train_loss += loss.total();
            adam.update(&mut params.weights, &grads, frozen)?;
        }
        let m = evaluate(&params, &dev)?;
        log::debug!("epoch {epoch}: loss {train_loss:.4} dev SER {:.4}", m.ser);
        log.records.push(EpochRecord {
            epoch,
            train_loss,
            dev_f1_intent: m.f1_intent,
            dev_f1_slot: m.f1_slot,
            dev_ser: m.ser,
            phase,
            parent_checkpoint: params.lineage.parent_checkpoint.clone(),
        });
        if m.ser < best.0 {
            best = (m.ser, params.weights.clone());
            log.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    params.weights = best.1;
    Ok((params, log))
}
