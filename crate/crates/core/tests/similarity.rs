//! Semantic similarity between corpora under a pre-trained model.

use nlu_bootstrap::config::ModelConfig;
use nlu_bootstrap::corpus::AnnotatedUtterance;
use nlu_bootstrap::eval::{corpus_centroid, cosine, semantic_similarity};
use nlu_bootstrap::grammar::{sample_corpus, DomainBlueprint, DomainStats, SynthConfig};
use nlu_bootstrap::model::{ModelDims, TrainConfig};
use nlu_bootstrap::neural::AdamConfig;
use nlu_bootstrap::transfer::{self, NamedCorpus, PretrainedModel};
use nlu_bootstrap::Error;

fn setup() -> (PretrainedModel, Vec<DomainBlueprint>, Vec<(String, Vec<AnnotatedUtterance>)>) {
    let stats = DomainStats {
        num_intents: 4,
        num_slots: 2,
        gazetteer_size: 20,
        num_example_phrases: 60,
    };
    let blueprints: Vec<DomainBlueprint> = (0..3).map(|s| DomainBlueprint::generate(stats, 60 + s).unwrap()).collect();
    let sources: Vec<NamedCorpus> = blueprints
        .iter()
        .map(|bp| NamedCorpus::new(bp.name.clone(), sample_corpus(bp.spec(), &SynthConfig::new(1500, 1)).unwrap()))
        .collect();
    let cfg = ModelConfig::default().with_dims(ModelDims {
        trained_embed_dim: 16,
        pretrained_embed_dim: 16,
        hidden_dim: 16,
    });
    let tc = TrainConfig {
        epochs: 2,
        batch_size: 32,
        optimizer: AdamConfig {
            learning_rate: 5e-3,
            ..AdamConfig::default()
        },
        ..TrainConfig::default()
    };
    let (pm, _) = transfer::pretrain(&sources, &cfg, &tc).unwrap();
    let pairs = sources.into_iter().map(|c| (c.name, c.utterances)).collect();
    (pm, blueprints, pairs)
}

#[test]
fn identical_corpus_scores_one_and_lexicon_sibling_ranks_its_parent_first() {
    let (pm, blueprints, sources) = setup();
    let copy = vec![("copy".to_string(), sources[1].1.clone())];
    let r = semantic_similarity(&pm.params, &sources, &copy).unwrap();
    assert!((r.score(&sources[1].0, "copy").unwrap() - 1.0).abs() < 1e-12);

    let sibling = DomainBlueprint::sharing_lexicon(&blueprints[0], DomainStats::CUSTOM_MEDIAN, 90).unwrap();
    let target = vec![("sib".to_string(), sample_corpus(sibling.spec(), &SynthConfig::new(200, 4)).unwrap())];
    let r = semantic_similarity(&pm.params, &sources, &target).unwrap();
    let summary = r.target("sib").unwrap();
    assert_eq!(summary.source_ranking[0], blueprints[0].name);
    assert_eq!(summary.max_score, r.score(&blueprints[0].name, "sib").unwrap());
    for s in &sources {
        assert_eq!(r.target_rankings[&s.0], vec!["sib".to_string()]);
    }

    let centroid = corpus_centroid(&pm.params, &target[0].1).unwrap();
    assert_eq!(centroid.len(), 2 * pm.params.hidden_dim());
}

#[test]
fn orthogonal_and_degenerate_vectors() {
    let a = ndarray::arr1(&[1.0, 0.0, 2.0]);
    let b = ndarray::arr1(&[0.0, 3.0, 0.0]);
    assert_eq!(cosine(&a, &b), 0.0);
    assert_eq!(cosine(&a, &ndarray::Array1::zeros(3)), 0.0);
}

#[test]
fn empty_corpora_are_rejected() {
    let (pm, _, sources) = setup();
    let empty = vec![("none".to_string(), Vec::new())];
    assert!(matches!(semantic_similarity(&pm.params, &sources, &empty), Err(Error::EmptyCorpus(_))));
}
