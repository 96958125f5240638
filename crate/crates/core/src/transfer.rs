//! Pre-training on source domains, head replacement, and fine-tuning on a
//! target domain.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ModelConfig, TransferConfig, TransferMode};
use crate::corpus::{AnnotatedUtterance, GazetteerFeaturizer, LabelSpace, Tag};
use crate::model::{
    self, tower_fingerprint, Lineage, MultitaskParams, Phase, Provenance, SourceRecord, TowerInit, TrainConfig,
    TrainLog,
};
use crate::neural::checkpoint::sha256_hex;
use crate::neural::{BiLstmLayer, SoftmaxHead};
use crate::{Error, Result};

/// Separator between a source domain name and its own label names.
pub const NAMESPACE_SEP: &str = "::";

/// A named corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedCorpus {
    pub name: String,
    pub utterances: Vec<AnnotatedUtterance>,
}

impl NamedCorpus {
    pub fn new(name: impl Into<String>, utterances: Vec<AnnotatedUtterance>) -> Self {
        NamedCorpus {
            name: name.into(),
            utterances,
        }
    }

    /// SHA-256 of the JSON-lines serialization.
    pub fn sha256(&self) -> String {
        let mut bytes = Vec::new();
        for u in &self.utterances {
            bytes.extend(serde_json::to_vec(u).expect("utterances serialize"));
            bytes.push(b'\n');
        }
        sha256_hex(&bytes)
    }
}

/// Prefixes intent and slot names with the domain name.
pub fn namespace_labels(domain: &str, corpus: &[AnnotatedUtterance]) -> Vec<AnnotatedUtterance> {
    let ns = |s: &str| format!("{domain}{NAMESPACE_SEP}{s}");
    corpus
        .iter()
        .map(|u| AnnotatedUtterance {
            tokens: u.tokens.clone(),
            intent: ns(&u.intent),
            tags: u
                .tags
                .iter()
                .map(|t| match t {
                    Tag::O => Tag::O,
                    Tag::B(s) => Tag::B(ns(s)),
                    Tag::I(s) => Tag::I(ns(s)),
                })
                .collect(),
        })
        .collect()
}

/// A multitask model trained on source domains. It never has gazetteer
/// inputs.
#[derive(Clone, Debug)]
pub struct PretrainedModel {
    pub params: MultitaskParams,
}

impl PretrainedModel {
    pub fn new(params: MultitaskParams) -> Result<Self> {
        if params.gazetteer_input_dim() != 0 {
            return Err(Error::ConfigViolation("a pre-trained model cannot take gazetteer inputs".into()));
        }
        Ok(PretrainedModel { params })
    }

    pub fn source_labels(&self) -> &LabelSpace {
        &self.params.labels
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.params.lineage.provenance.as_ref()
    }

    pub fn checkpoint_hash(&self) -> Result<String> {
        self.params.checkpoint_hash()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.params.save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        PretrainedModel::new(MultitaskParams::load(path)?)
    }
}

/// Trains one model on the union of the (namespaced) source corpora.
pub fn pretrain(sources: &[NamedCorpus], model_cfg: &ModelConfig, cfg: &TrainConfig) -> Result<(PretrainedModel, TrainLog)> {
    model_cfg.validate()?;
    if sources.is_empty() {
        return Err(Error::EmptyCorpus("pre-training needs at least one source corpus".into()));
    }
    let mut names = BTreeSet::new();
    for s in sources {
        if s.name.contains(NAMESPACE_SEP) {
            return Err(Error::LabelCollision(format!("domain name `{}` contains `{NAMESPACE_SEP}`", s.name)));
        }
        if !names.insert(s.name.as_str()) {
            return Err(Error::LabelCollision(format!("two source corpora are named `{}`", s.name)));
        }
        if s.utterances.is_empty() {
            return Err(Error::EmptyCorpus(format!("source `{}` is empty", s.name)));
        }
    }
    let all: Vec<AnnotatedUtterance> = sources.iter().flat_map(|s| namespace_labels(&s.name, &s.utterances)).collect();
    let mut params = MultitaskParams::for_corpus(
        &all,
        model_cfg.dims,
        model_cfg.min_count,
        &model_cfg.pretrained_embeddings,
        None,
        model_cfg.init_seed,
    )?;
    let config_hash = sha256_hex(&serde_json::to_vec(&(model_cfg, cfg))?);
    params.lineage.provenance = Some(Provenance {
        sources: sources
            .iter()
            .map(|s| SourceRecord {
                name: s.name.clone(),
                sha256: s.sha256(),
                utterances: s.utterances.len(),
            })
            .collect(),
        data_size: all.len(),
        config_hash,
    });
    let (params, mut log) = model::train(params, &all, cfg)?;
    log.set_phase(Phase::Pretrain);
    Ok((PretrainedModel::new(params)?, log))
}

/// Copies the transferable layers of `pm` and attaches fresh heads sized for
/// `target`. In `bottom_only` mode the towers are fresh too and take
/// `gazetteers` as extra inputs.
pub fn replace_heads(
    pm: &PretrainedModel,
    target: &LabelSpace,
    mode: TransferMode,
    gazetteers: Option<GazetteerFeaturizer>,
    seed: u64,
) -> Result<MultitaskParams> {
    let g = gazetteers.as_ref().map_or(0, GazetteerFeaturizer::len);
    if g > 0 && mode == TransferMode::FullStack {
        return Err(Error::ConfigViolation(
            "gazetteer features change the tower inputs and require bottom_only transfer".into(),
        ));
    }
    let gazetteers = gazetteers.filter(|f| !f.is_empty());
    let src = &pm.params;
    let h = src.weights.common.hidden_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = src.weights.clone();
    let tower_init = match mode {
        TransferMode::FullStack => TowerInit::Transferred {
            fingerprint: tower_fingerprint(&weights),
        },
        TransferMode::BottomOnly => {
            let hs = src.weights.slot_tower.hidden_dim();
            let hi = src.weights.intent_tower.hidden_dim();
            weights.slot_tower = BiLstmLayer::init(2 * h + g, hs, &mut rng);
            weights.intent_tower = BiLstmLayer::init(2 * h + g, hi, &mut rng);
            TowerInit::Fresh {
                seed,
                fingerprint: tower_fingerprint(&weights),
            }
        }
    };
    weights.slot_head = SoftmaxHead::init(target.num_tags(), 2 * weights.slot_tower.hidden_dim(), &mut rng);
    weights.intent_head = SoftmaxHead::init(target.num_intents(), 2 * weights.intent_tower.hidden_dim(), &mut rng);
    let params = MultitaskParams {
        weights,
        embeddings: src.embeddings.clone(),
        labels: target.clone(),
        gazetteers,
        dims: src.dims,
        lineage: Lineage {
            tower_init,
            provenance: src.lineage.provenance.clone(),
            parent_checkpoint: Some(pm.checkpoint_hash()?),
        },
    };
    params.validate()?;
    Ok(params)
}

/// Trains every parameter (transferred and fresh) on the target corpus.
pub fn fine_tune(params: MultitaskParams, corpus: &[AnnotatedUtterance], cfg: &TrainConfig) -> Result<(MultitaskParams, TrainLog)> {
    let (params, mut log) = model::train(params, corpus, cfg)?;
    log.set_phase(Phase::FineTune);
    Ok((params, log))
}

/// Head replacement, optional vocabulary extension, and fine-tuning.
pub fn transfer(
    pm: &PretrainedModel,
    corpus: &[AnnotatedUtterance],
    gazetteers: Option<GazetteerFeaturizer>,
    cfg: &TransferConfig,
) -> Result<(MultitaskParams, TrainLog)> {
    cfg.validate()?;
    let labels = LabelSpace::from_corpus(corpus)?;
    let gaz = if cfg.enable_gazetteer_features { gazetteers } else { None };
    if cfg.enable_gazetteer_features && gaz.is_none() {
        return Err(Error::ConfigViolation("gazetteer features enabled but no gazetteers given".into()));
    }
    let mut params = replace_heads(pm, &labels, cfg.mode, gaz, cfg.init_seed)?;
    if cfg.extend_vocab {
        params.extend_vocab(corpus.iter().flat_map(|u| &u.tokens), cfg.init_seed ^ 0x5eed);
    }
    fine_tune(params, corpus, &cfg.finetune)
}

/// Fails if any target utterance's token sequence also occurs in a source.
pub fn check_disjoint(sources: &[NamedCorpus], targets: &[NamedCorpus]) -> Result<()> {
    let seen: HashSet<&[String]> = sources.iter().flat_map(|s| s.utterances.iter().map(|u| u.tokens.as_slice())).collect();
    for t in targets {
        if let Some(u) = t.utterances.iter().find(|u| seen.contains(u.tokens.as_slice())) {
            return Err(Error::ConfigViolation(format!(
                "target `{}` utterance \"{}\" also occurs in the source data",
                t.name,
                u.text()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Span;
    use crate::model::ModelDims;
    use crate::neural::Parameters;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn utt(text: &str, intent: &str, spans: &[Span]) -> AnnotatedUtterance {
        AnnotatedUtterance::from_spans(toks(text), intent, spans).unwrap()
    }

    fn small_cfg() -> ModelConfig {
        ModelConfig::default().with_dims(ModelDims {
            trained_embed_dim: 4,
            pretrained_embed_dim: 4,
            hidden_dim: 3,
        })
    }

    fn sources() -> Vec<NamedCorpus> {
        let a: Vec<_> = (0..6)
            .map(|i| match i % 3 {
                0 => utt("play jazz", "Play", &[Span::new("Genre", 1, 1)]),
                1 => utt("stop now", "Stop", &[]),
                _ => utt("pause it", "Pause", &[]),
            })
            .collect();
        let b: Vec<_> = (0..6)
            .map(|i| match i % 2 {
                0 => utt("weather in rome", "Weather", &[Span::new("City", 2, 2)]),
                _ => utt("play the forecast", "Play", &[]),
            })
            .collect();
        vec![NamedCorpus::new("music", a), NamedCorpus::new("weather", b)]
    }

    fn quick_pretrain() -> PretrainedModel {
        let cfg = TrainConfig {
            epochs: 1,
            dev_fraction: 0.0,
            ..Default::default()
        };
        pretrain(&sources(), &small_cfg(), &cfg).unwrap().0
    }

    #[test]
    fn source_labels_are_namespaced() {
        let pm = quick_pretrain();
        let labels = pm.source_labels();
        // 3 + 2 intents; "Play" exists in both domains and stays separate
        assert_eq!(labels.num_intents(), 5);
        assert!(labels.intent_index("music::Play").is_ok());
        assert!(labels.intent_index("weather::Play").is_ok());
        assert!(labels.tag_index(&Tag::B("weather::City".into())).is_ok());
        let prov = pm.provenance().unwrap();
        assert_eq!(prov.data_size, 12);
        assert_eq!(prov.sources[0].name, "music");
    }

    #[test]
    fn duplicate_domain_names_collide() {
        let mut s = sources();
        s[1].name = "music".into();
        let cfg = TrainConfig::default();
        assert!(matches!(pretrain(&s, &small_cfg(), &cfg), Err(Error::LabelCollision(_))));
        assert!(matches!(pretrain(&[], &small_cfg(), &cfg), Err(Error::EmptyCorpus(_))));
    }

    #[test]
    fn full_stack_copies_everything_below_the_heads() {
        let pm = quick_pretrain();
        let target = LabelSpace::new(["A", "B", "C", "D"], ["X", "Y", "Z"]).unwrap();
        let p = replace_heads(&pm, &target, TransferMode::FullStack, None, 1).unwrap();
        assert_eq!(p.weights.intent_head.weight.dim(), (4, 6));
        assert_eq!(p.weights.slot_head.weight.dim(), (7, 6));
        assert_eq!(p.weights.common, pm.params.weights.common);
        assert_eq!(p.weights.slot_tower, pm.params.weights.slot_tower);
        assert_eq!(p.weights.intent_tower, pm.params.weights.intent_tower);
        assert_eq!(p.weights.embeddings, pm.params.weights.embeddings);
        assert!(!p.lineage.tower_init.is_fresh());
        assert_eq!(p.lineage.parent_checkpoint.as_deref(), Some(pm.checkpoint_hash().unwrap().as_str()));
    }

    #[test]
    fn bottom_only_with_gazetteers_has_fresh_towers() {
        let pm = quick_pretrain();
        let target = LabelSpace::new(["A"], ["X"]).unwrap();
        let gaz = GazetteerFeaturizer::new([("X".to_string(), vec!["jazz"]), ("Y".to_string(), vec!["rome"])], 3);
        let p = replace_heads(&pm, &target, TransferMode::BottomOnly, Some(gaz.clone()), 1).unwrap();
        assert_eq!(p.weights.slot_tower.input_dim(), 2 * 3 + 2);
        assert_eq!(p.weights.common, pm.params.weights.common);
        assert_eq!(p.weights.embeddings, pm.params.weights.embeddings);
        assert!(p.lineage.tower_init.is_fresh());
        assert_eq!(p.lineage.tower_init.fingerprint(), tower_fingerprint(&p.weights));
        assert_ne!(p.lineage.tower_init.fingerprint(), tower_fingerprint(&pm.params.weights));
        // survives a checkpoint round trip
        let q = MultitaskParams::from_bytes(&p.to_bytes().unwrap()).unwrap();
        assert_eq!(q.lineage, p.lineage);
        let err = replace_heads(&pm, &target, TransferMode::FullStack, Some(gaz), 1);
        assert!(matches!(err, Err(Error::ConfigViolation(_))));
    }

    #[test]
    fn same_label_space_differs_only_in_heads() {
        let pm = quick_pretrain();
        let p = replace_heads(&pm, pm.source_labels(), TransferMode::FullStack, None, 9).unwrap();
        for (a, b) in p.weights.blocks().iter().zip(pm.params.weights.blocks()) {
            if !a.name.contains("_head.") {
                assert_eq!(a.data, b.data, "{}", a.name);
            } else if a.name.ends_with(".bias") {
                assert!(a.data.iter().all(|&v| v == 0.0));
            } else {
                assert_ne!(a.data, b.data, "{}", a.name);
            }
        }
    }

    #[test]
    fn zero_epoch_fine_tune_is_identity() {
        let pm = quick_pretrain();
        let corpus: Vec<_> = (0..10).map(|_| utt("play jazz", "Play", &[Span::new("Genre", 1, 1)])).collect();
        let labels = LabelSpace::from_corpus(&corpus).unwrap();
        let p = replace_heads(&pm, &labels, TransferMode::FullStack, None, 2).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        let (q, _) = fine_tune(p.clone(), &corpus, &cfg).unwrap();
        assert_eq!(q.weights, p.weights);
    }

    #[test]
    fn overlap_check_finds_shared_utterances() {
        let s = sources();
        let t = vec![NamedCorpus::new("t", vec![utt("stop now", "Halt", &[])])];
        assert!(check_disjoint(&s, &t).is_err());
        let t = vec![NamedCorpus::new("t", vec![utt("halt now", "Halt", &[])])];
        check_disjoint(&s, &t).unwrap();
    }

    #[test]
    fn transfer_runs_end_to_end() {
        let pm = quick_pretrain();
        let corpus: Vec<_> = (0..12)
            .map(|i| {
                if i % 2 == 0 {
                    utt("find jazz records", "Find", &[Span::new("Genre", 1, 1)])
                } else {
                    utt("buy it", "Buy", &[])
                }
            })
            .collect();
        let gaz = GazetteerFeaturizer::new([("Genre".to_string(), vec!["jazz"])], 3);
        let cfg = TransferConfig {
            finetune: TrainConfig {
                epochs: 2,
                ..Default::default()
            },
            ..Default::default()
        };
        let (p, log) = transfer(&pm, &corpus, Some(gaz), &cfg).unwrap();
        assert!(p.embeddings.vocab.contains("records"));
        assert!(log.records.iter().all(|r| r.phase == Phase::FineTune && r.parent_checkpoint.is_some()));
    }
}
