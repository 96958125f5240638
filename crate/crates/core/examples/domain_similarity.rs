//! Rank source domains by how close a target looks to them under the
//! pre-trained shared layer.

use nlu_bootstrap::config::ModelConfig;
use nlu_bootstrap::eval::semantic_similarity;
use nlu_bootstrap::grammar::{sample_corpus, DomainBlueprint, DomainStats, SynthConfig};
use nlu_bootstrap::model::{ModelDims, TrainConfig};
use nlu_bootstrap::neural::AdamConfig;
use nlu_bootstrap::transfer::{self, NamedCorpus};

fn main() -> nlu_bootstrap::Result<()> {
    let stats = DomainStats {
        num_intents: 4,
        num_slots: 2,
        gazetteer_size: 20,
        num_example_phrases: 60,
    };
    let blueprints = (0..3).map(|s| DomainBlueprint::generate(stats, s)).collect::<Result<Vec<_>, _>>()?;
    let sources: Vec<NamedCorpus> = blueprints
        .iter()
        .map(|bp| Ok(NamedCorpus::new(bp.name.clone(), sample_corpus(bp.spec(), &SynthConfig::new(3000, 1))?)))
        .collect::<nlu_bootstrap::Result<_>>()?;

    let model_cfg = ModelConfig::default().with_dims(ModelDims {
        trained_embed_dim: 24,
        pretrained_embed_dim: 24,
        hidden_dim: 24,
    });
    let (pm, _) = transfer::pretrain(
        &sources,
        &model_cfg,
        &TrainConfig {
            epochs: 2,
            batch_size: 32,
            optimizer: AdamConfig {
                learning_rate: 5e-3,
                ..AdamConfig::default()
            },
            ..TrainConfig::default()
        },
    )?;

    let mut targets = Vec::new();
    for (i, parent) in blueprints.iter().enumerate() {
        let t = DomainBlueprint::sharing_lexicon(parent, DomainStats::CUSTOM_MEDIAN, 100 + i as u64)?;
        targets.push((format!("{} (from {})", t.name, parent.name), sample_corpus(t.spec(), &SynthConfig::new(200, 2))?));
    }
    let sources: Vec<_> = sources.into_iter().map(|c| (c.name, c.utterances)).collect();
    let report = semantic_similarity(&pm.params, &sources, &targets)?;
    for t in &report.targets {
        println!("{:<16} ranking {:?}  max score {:.4}", t.target, t.source_ranking, t.max_score);
    }
    Ok(())
}
