//! Synthetic transfer benchmark: several source domains are pooled for
//! pre-training, then small target domains are learned with a pre-trained
//! network, a network trained from scratch, and the CRF/MaxEnt baseline.
//! Half of the targets reuse the lexicon of one source domain.

use std::collections::HashSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{BaselineModel, CrfModel, MaxEntModel};
use crate::config::{BaselineConfig, ModelConfig, TransferConfig, TransferMode};
use crate::corpus::{AnnotatedUtterance, GazetteerFeaturizer};
use crate::eval::{
    aggregate, domain_metrics, mean, median, semantic_similarity, DomainMetrics, DomainRow, EvalReport,
    SimilarityReport, UtterancePrediction,
};
use crate::grammar::{sample_corpus, DomainBlueprint, DomainStats, SynthConfig};
use crate::model::{self, ModelDims, MultitaskParams, TrainConfig, TrainLog};
use crate::neural::AdamConfig;
use crate::transfer::{self, check_disjoint, NamedCorpus, PretrainedModel};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    /// Base seed of the domain grammars and sampled corpora.
    pub domain_seed: u64,
    pub num_sources: usize,
    pub source_stats: DomainStats,
    pub source_utterances: usize,
    pub num_targets: usize,
    /// How many of the targets reuse a source lexicon.
    pub sharing_targets: usize,
    pub target_stats: DomainStats,
    pub target_train: usize,
    pub target_test: usize,
    /// Carrier phrases of the held-out grammar the test sets are drawn from.
    pub held_out_phrases: usize,
    /// One fine-tuning / scratch / baseline run per seed and target.
    pub seeds: Vec<u64>,
    pub model: ModelConfig,
    pub pretrain: TrainConfig,
    /// Used for both fine-tuning and training from scratch.
    pub target_training: TrainConfig,
    pub transfer_mode: TransferMode,
    pub gazetteer_features: bool,
    pub baselines: BaselineConfig,
    /// Dev SER that counts as "trained" when measuring speed.
    pub ser_threshold: f64,
    /// Lexicon-sharing targets generated only for the similarity ranking.
    pub similarity_targets: usize,
    /// Utterances per corpus used for similarity centroids.
    pub similarity_sample: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let dims = ModelDims {
            trained_embed_dim: 24,
            pretrained_embed_dim: 24,
            hidden_dim: 24,
        };
        let optimizer = AdamConfig {
            learning_rate: 5e-3,
            ..AdamConfig::default()
        };
        BenchConfig {
            domain_seed: 1,
            num_sources: 8,
            source_stats: DomainStats {
                num_intents: 4,
                num_slots: 2,
                gazetteer_size: 20,
                num_example_phrases: 60,
            },
            source_utterances: 5000,
            num_targets: 10,
            sharing_targets: 5,
            target_stats: DomainStats::CUSTOM_MEDIAN,
            target_train: 200,
            target_test: 500,
            held_out_phrases: 42,
            seeds: (0..5).collect(),
            model: ModelConfig::default().with_dims(dims),
            pretrain: TrainConfig {
                epochs: 2,
                batch_size: 32,
                optimizer,
                dev_fraction: 0.02,
                ..TrainConfig::default()
            },
            target_training: TrainConfig {
                epochs: 30,
                batch_size: 16,
                optimizer,
                ..TrainConfig::default()
            },
            transfer_mode: TransferMode::BottomOnly,
            gazetteer_features: true,
            baselines: BaselineConfig::default(),
            ser_threshold: 0.1,
            similarity_targets: 10,
            similarity_sample: 300,
        }
    }
}

impl BenchConfig {
    /// A few-second configuration for smoke tests and examples.
    pub fn tiny() -> Self {
        let dims = ModelDims {
            trained_embed_dim: 6,
            pretrained_embed_dim: 6,
            hidden_dim: 6,
        };
        BenchConfig {
            num_sources: 2,
            source_utterances: 150,
            num_targets: 2,
            sharing_targets: 1,
            target_train: 40,
            target_test: 40,
            seeds: vec![0, 1],
            model: ModelConfig::default().with_dims(dims),
            pretrain: TrainConfig {
                epochs: 1,
                ..BenchConfig::default().pretrain
            },
            target_training: TrainConfig {
                epochs: 3,
                ..BenchConfig::default().target_training
            },
            baselines: BaselineConfig {
                max_iterations: 30,
                ..BaselineConfig::default()
            },
            similarity_targets: 2,
            similarity_sample: 30,
            ..BenchConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_sources == 0 || self.num_targets == 0 || self.seeds.is_empty() {
            return Err(Error::ConfigViolation("benchmark needs sources, targets and seeds".into()));
        }
        if self.sharing_targets > self.num_targets {
            return Err(Error::ConfigViolation("more sharing targets than targets".into()));
        }
        self.model.validate()?;
        self.pretrain.validate()?;
        self.target_training.validate()?;
        self.baselines.validate()
    }

    fn transfer_config(&self, seed: u64) -> TransferConfig {
        TransferConfig {
            mode: self.transfer_mode,
            enable_gazetteer_features: self.gazetteer_features,
            init_seed: seed,
            extend_vocab: true,
            finetune: TrainConfig {
                seed,
                ..self.target_training.clone()
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct SourceDomain {
    pub blueprint: DomainBlueprint,
    pub corpus: NamedCorpus,
}

#[derive(Clone, Debug)]
pub struct TargetDomain {
    pub blueprint: DomainBlueprint,
    /// Source domain whose lexicon this target reuses.
    pub shares_lexicon_with: Option<String>,
    pub test: Vec<AnnotatedUtterance>,
}

impl TargetDomain {
    pub fn name(&self) -> &str {
        &self.blueprint.name
    }

    pub fn gazetteers(&self) -> GazetteerFeaturizer {
        self.blueprint.spec().gazetteer_featurizer()
    }
}

/// Generated domains and corpora.
#[derive(Clone, Debug)]
pub struct BenchData {
    pub sources: Vec<SourceDomain>,
    pub targets: Vec<TargetDomain>,
    pub similarity_targets: Vec<TargetDomain>,
    source_texts: HashSet<Vec<String>>,
    target_train: usize,
}

fn mix(a: u64, b: u64) -> u64 {
    a.wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(29) ^ b.wrapping_mul(0xbf58_476d_1ce4_e5b9)
}

impl BenchData {
    pub fn build(cfg: &BenchConfig) -> Result<Self> {
        cfg.validate()?;
        let mut sources = Vec::new();
        for i in 0..cfg.num_sources as u64 {
            let bp = DomainBlueprint::generate(cfg.source_stats, cfg.domain_seed * 1000 + i)?;
            let corpus = sample_corpus(bp.spec(), &SynthConfig::new(cfg.source_utterances, mix(cfg.domain_seed, i)))?;
            sources.push(SourceDomain {
                corpus: NamedCorpus::new(bp.name.clone(), corpus),
                blueprint: bp,
            });
        }
        let source_texts: HashSet<Vec<String>> =
            sources.iter().flat_map(|s| s.corpus.utterances.iter().map(|u| u.tokens.clone())).collect();
        let mut data = BenchData {
            sources,
            targets: Vec::new(),
            similarity_targets: Vec::new(),
            source_texts,
            target_train: cfg.target_train,
        };
        for i in 0..cfg.num_targets {
            let parent = (i < cfg.sharing_targets).then_some(i % cfg.num_sources);
            let t = data.make_target(cfg, parent, cfg.domain_seed * 1000 + 100 + i as u64)?;
            data.targets.push(t);
        }
        for i in 0..cfg.similarity_targets {
            let t = data.make_target(cfg, Some(i % cfg.num_sources), cfg.domain_seed * 1000 + 500 + i as u64)?;
            data.similarity_targets.push(t);
        }
        let check: Vec<NamedCorpus> =
            data.targets.iter().map(|t| NamedCorpus::new(t.name(), t.test.clone())).collect();
        let sources: Vec<NamedCorpus> = data.sources.iter().map(|s| s.corpus.clone()).collect();
        check_disjoint(&sources, &check)?;
        Ok(data)
    }

    fn make_target(&self, cfg: &BenchConfig, parent: Option<usize>, seed: u64) -> Result<TargetDomain> {
        let blueprint = match parent {
            Some(p) => DomainBlueprint::sharing_lexicon(&self.sources[p].blueprint, cfg.target_stats, seed)?,
            None => DomainBlueprint::generate(cfg.target_stats, seed)?,
        };
        let held_out = blueprint.held_out_spec(cfg.held_out_phrases, seed);
        let test = self.sample_unseen(&held_out, cfg.target_test, mix(seed, 7))?;
        Ok(TargetDomain {
            shares_lexicon_with: parent.map(|p| self.sources[p].blueprint.name.clone()),
            blueprint,
            test,
        })
    }

    /// Samples `n` utterances whose token sequences never occur in the
    /// source corpora.
    fn sample_unseen(&self, spec: &crate::grammar::DomainSpec, n: usize, seed: u64) -> Result<Vec<AnnotatedUtterance>> {
        let mut out = Vec::with_capacity(n);
        for round in 0..50u64 {
            let pool = sample_corpus(spec, &SynthConfig::new(2 * n, mix(seed, round)))?;
            out.extend(pool.into_iter().filter(|u| !self.source_texts.contains(&u.tokens)));
            if out.len() >= n {
                out.truncate(n);
                return Ok(out);
            }
        }
        Err(Error::InvalidSpec(format!(
            "domain `{}` cannot produce {n} utterances absent from the source data",
            spec.name
        )))
    }

    /// Training utterances of a target for one seed.
    pub fn target_train(&self, target: &TargetDomain, seed: u64) -> Result<Vec<AnnotatedUtterance>> {
        let base = target.blueprint.name.bytes().fold(0u64, |h, b| mix(h, b as u64));
        self.sample_unseen(target.blueprint.spec(), self.target_train, mix(base, seed))
    }

    pub fn source_corpora(&self) -> Vec<NamedCorpus> {
        self.sources.iter().map(|s| s.corpus.clone()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    PretrainedDnn,
    ScratchDnn,
    CrfMaxEnt,
}

impl Approach {
    pub const ALL: [Approach; 3] = [Approach::PretrainedDnn, Approach::ScratchDnn, Approach::CrfMaxEnt];

    pub fn name(self) -> &'static str {
        match self {
            Approach::PretrainedDnn => "pretrained_dnn",
            Approach::ScratchDnn => "scratch_dnn",
            Approach::CrfMaxEnt => "crf_maxent",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub target: String,
    pub sharing: bool,
    pub approach: Approach,
    pub metrics: DomainMetrics,
    /// First epoch with dev SER at or below the threshold (neural runs).
    pub epochs_to_threshold: Option<usize>,
    pub epochs_run: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityCheck {
    pub target: String,
    pub parent: String,
    pub top_source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub records: Vec<RunRecord>,
    pub pretrain_log: TrainLog,
    pub similarity: SimilarityReport,
    pub similarity_checks: Vec<SimilarityCheck>,
    pub seconds: f64,
    pub max_epochs: usize,
    pub ser_threshold: f64,
}

/// Test metrics of a baseline engine.
pub fn evaluate_baseline(model: &BaselineModel, test: &[AnnotatedUtterance]) -> Result<DomainMetrics> {
    let preds = test
        .iter()
        .map(|u| {
            let (intent, spans) = model.predict(&u.tokens)?;
            Ok(UtterancePrediction {
                intent,
                spans,
                reference: u.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    domain_metrics(&preds)
}

/// Runs the whole benchmark.
pub fn run(cfg: &BenchConfig) -> Result<BenchReport> {
    let start = Instant::now();
    let data = BenchData::build(cfg)?;
    log::info!("benchmark data built in {:.1}s", start.elapsed().as_secs_f64());
    let (pm, pretrain_log) = transfer::pretrain(&data.source_corpora(), &cfg.model, &cfg.pretrain)?;
    log::info!("pre-training done after {:.1}s", start.elapsed().as_secs_f64());

    let mut records = Vec::new();
    for &seed in &cfg.seeds {
        for target in &data.targets {
            let train = data.target_train(target, seed)?;
            let gaz = cfg.gazetteer_features.then(|| target.gazetteers());
            let sharing = target.shares_lexicon_with.is_some();
            let mut push = |approach, metrics, log: Option<&TrainLog>| {
                records.push(RunRecord {
                    seed,
                    target: target.name().to_string(),
                    sharing,
                    approach,
                    metrics,
                    epochs_to_threshold: log.and_then(|l| l.epochs_to_reach(cfg.ser_threshold)),
                    epochs_run: log.map_or(0, |l| l.records.len()),
                });
            };

            let (p, log) = transfer::transfer(&pm, &train, gaz.clone(), &cfg.transfer_config(seed))?;
            push(Approach::PretrainedDnn, model::evaluate(&p, &target.test)?, Some(&log));

            let scratch = MultitaskParams::for_corpus(
                &train,
                cfg.model.dims,
                cfg.model.min_count,
                &cfg.model.pretrained_embeddings,
                gaz.clone(),
                seed,
            )?;
            let tc = TrainConfig {
                seed,
                ..cfg.target_training.clone()
            };
            let (s, log) = model::train(scratch, &train, &tc)?;
            push(Approach::ScratchDnn, model::evaluate(&s, &target.test)?, Some(&log));

            let baseline = BaselineModel {
                maxent: Some(MaxEntModel::train(&train, gaz.clone(), &cfg.baselines)?.0),
                crf: Some(CrfModel::train(&train, gaz, &cfg.baselines)?.0),
            };
            push(Approach::CrfMaxEnt, evaluate_baseline(&baseline, &target.test)?, None);
            log::info!(
                "seed {seed} target {} done after {:.1}s",
                target.name(),
                start.elapsed().as_secs_f64()
            );
        }
    }

    let (similarity, similarity_checks) = similarity_ranking(&pm, &data, cfg)?;
    Ok(BenchReport {
        records,
        pretrain_log,
        similarity,
        similarity_checks,
        seconds: start.elapsed().as_secs_f64(),
        max_epochs: cfg.target_training.epochs,
        ser_threshold: cfg.ser_threshold,
    })
}

/// Similarity of every lexicon-sharing similarity target to every source.
pub fn similarity_ranking(
    pm: &PretrainedModel,
    data: &BenchData,
    cfg: &BenchConfig,
) -> Result<(SimilarityReport, Vec<SimilarityCheck>)> {
    let take = |c: &[AnnotatedUtterance]| c[..c.len().min(cfg.similarity_sample)].to_vec();
    let sources: Vec<(String, Vec<AnnotatedUtterance>)> =
        data.sources.iter().map(|s| (s.corpus.name.clone(), take(&s.corpus.utterances))).collect();
    let mut targets = Vec::new();
    for t in &data.similarity_targets {
        targets.push((t.name().to_string(), take(&data.target_train(t, 0)?)));
    }
    let report = semantic_similarity(&pm.params, &sources, &targets)?;
    let checks = data
        .similarity_targets
        .iter()
        .map(|t| SimilarityCheck {
            target: t.name().to_string(),
            parent: t.shares_lexicon_with.clone().unwrap_or_default(),
            top_source: report.target(t.name()).map(|s| s.source_ranking[0].clone()).unwrap_or_default(),
        })
        .collect();
    Ok((report, checks))
}

impl BenchReport {
    fn runs(&self, approach: Approach) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(move |r| r.approach == approach)
    }

    fn targets(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for r in &self.records {
            if !seen.contains(&r.target) {
                seen.push(r.target.clone());
            }
        }
        seen
    }

    /// Per-target metrics averaged over seeds.
    pub fn domain_rows(&self, approach: Approach) -> Vec<(DomainRow, bool)> {
        self.targets()
            .into_iter()
            .map(|t| {
                let runs: Vec<&RunRecord> = self.runs(approach).filter(|r| r.target == t).collect();
                let avg = |f: fn(&DomainMetrics) -> f64| mean(&runs.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>()).unwrap_or(0.0);
                let m = DomainMetrics {
                    f1_intent: avg(|m| m.f1_intent),
                    f1_slot: avg(|m| m.f1_slot),
                    ser: avg(|m| m.ser),
                };
                let sharing = runs.first().is_some_and(|r| r.sharing);
                (DomainRow::new(t, m, 0), sharing)
            })
            .collect()
    }

    pub fn eval_report(&self, approach: Approach) -> Result<EvalReport> {
        aggregate(approach.name(), self.domain_rows(approach).into_iter().map(|(r, _)| r).collect())
    }

    /// Median over targets of the seed-averaged test SER.
    pub fn median_ser(&self, approach: Approach) -> f64 {
        median(&self.domain_rows(approach).iter().map(|(r, _)| r.ser).collect::<Vec<_>>()).unwrap_or(f64::NAN)
    }

    /// Mean over targets of epochs needed to reach the dev-SER threshold;
    /// runs that never reach it count as `max_epochs + 1`.
    pub fn mean_epochs_to_threshold(&self, seed: u64, approach: Approach) -> f64 {
        let v: Vec<f64> = self
            .runs(approach)
            .filter(|r| r.seed == seed)
            .map(|r| r.epochs_to_threshold.unwrap_or(self.max_epochs + 1) as f64)
            .collect();
        mean(&v).unwrap_or(f64::NAN)
    }

    pub fn seeds(&self) -> Vec<u64> {
        let mut s: Vec<u64> = self.records.iter().map(|r| r.seed).collect();
        s.dedup();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Seeds where the pre-trained network reached the threshold in strictly
    /// fewer epochs (on average over targets) than the scratch network.
    pub fn faster_seeds(&self) -> usize {
        self.seeds()
            .into_iter()
            .filter(|&s| self.mean_epochs_to_threshold(s, Approach::PretrainedDnn) < self.mean_epochs_to_threshold(s, Approach::ScratchDnn))
            .count()
    }

    /// Mean over a target group of (scratch SER - pre-trained SER).
    pub fn transfer_gain(&self, sharing: bool) -> f64 {
        let pre = self.domain_rows(Approach::PretrainedDnn);
        let scratch = self.domain_rows(Approach::ScratchDnn);
        let gains: Vec<f64> = pre
            .iter()
            .zip(&scratch)
            .filter(|((_, s), _)| *s == sharing)
            .map(|((p, _), (q, _))| q.ser - p.ser)
            .collect();
        mean(&gains).unwrap_or(f64::NAN)
    }

    /// Similarity targets whose lexicon parent ranks first.
    pub fn similarity_hits(&self) -> usize {
        self.similarity_checks.iter().filter(|c| c.parent == c.top_source).count()
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for a in Approach::ALL {
            let r = self.eval_report(a).expect("non-empty");
            out.push_str(&format!(
                "{:<15} median SER {:5.1}%  mean SER {:5.1}%  median F1 intent {:5.1}%  median F1 slot {:5.1}%\n",
                a.name(),
                100.0 * r.median.ser,
                100.0 * r.mean.ser,
                100.0 * r.median.f1_intent,
                100.0 * r.median.f1_slot
            ));
        }
        for s in self.seeds() {
            out.push_str(&format!(
                "seed {s}: mean epochs to dev SER <= {:.2}: pretrained {:.2}, scratch {:.2}\n",
                self.ser_threshold,
                self.mean_epochs_to_threshold(s, Approach::PretrainedDnn),
                self.mean_epochs_to_threshold(s, Approach::ScratchDnn)
            ));
        }
        out.push_str(&format!(
            "transfer gain (scratch SER - pretrained SER): sharing {:.4}, non-sharing {:.4}\n",
            self.transfer_gain(true),
            self.transfer_gain(false)
        ));
        out.push_str(&format!(
            "similarity: parent ranked first for {} of {} targets\n",
            self.similarity_hits(),
            self.similarity_checks.len()
        ));
        out.push_str(&format!("wall time {:.1}s\n", self.seconds));
        out
    }
}
