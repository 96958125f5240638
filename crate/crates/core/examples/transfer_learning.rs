//! Pre-train on pooled source domains, then fine-tune on a small target and
//! compare with a network trained on the target alone.

use nlu_bootstrap::config::{ModelConfig, TransferConfig};
use nlu_bootstrap::grammar::{sample_corpus, DomainBlueprint, DomainStats, SynthConfig};
use nlu_bootstrap::model::{self, ModelDims, MultitaskParams, TrainConfig};
use nlu_bootstrap::neural::AdamConfig;
use nlu_bootstrap::transfer::{self, NamedCorpus};

fn main() -> nlu_bootstrap::Result<()> {
    let source_stats = DomainStats {
        num_intents: 4,
        num_slots: 2,
        gazetteer_size: 20,
        num_example_phrases: 60,
    };
    let mut sources = Vec::new();
    let mut blueprints = Vec::new();
    for seed in 0..3 {
        let bp = DomainBlueprint::generate(source_stats, seed)?;
        sources.push(NamedCorpus::new(bp.name.clone(), sample_corpus(bp.spec(), &SynthConfig::new(3000, seed))?));
        blueprints.push(bp);
    }

    let target = DomainBlueprint::sharing_lexicon(&blueprints[0], DomainStats::CUSTOM_MEDIAN, 50)?;
    let train = sample_corpus(target.spec(), &SynthConfig::new(200, 1))?;
    let test = sample_corpus(&target.held_out_spec(20, 2), &SynthConfig::new(300, 3))?;
    let gaz = target.spec().gazetteer_featurizer();

    let model_cfg = ModelConfig::default().with_dims(ModelDims {
        trained_embed_dim: 24,
        pretrained_embed_dim: 24,
        hidden_dim: 24,
    });
    let optimizer = AdamConfig {
        learning_rate: 5e-3,
        ..AdamConfig::default()
    };
    let pretrain_cfg = TrainConfig {
        epochs: 2,
        batch_size: 32,
        optimizer,
        ..TrainConfig::default()
    };
    let (pm, _) = transfer::pretrain(&sources, &model_cfg, &pretrain_cfg)?;
    println!("pre-trained on {} source intents", pm.source_labels().num_intents());

    let finetune = TrainConfig {
        epochs: 30,
        optimizer,
        ..TrainConfig::default()
    };
    let cfg = TransferConfig {
        finetune: finetune.clone(),
        ..TransferConfig::default()
    };
    let (tuned, tuned_log) = transfer::transfer(&pm, &train, Some(gaz.clone()), &cfg)?;
    println!("lineage: {}", serde_json::to_string(&tuned.lineage).unwrap_or_default());

    let scratch = MultitaskParams::for_corpus(&train, model_cfg.dims, 1, &model_cfg.pretrained_embeddings, Some(gaz), 0)?;
    let (scratch, scratch_log) = model::train(scratch, &train, &finetune)?;

    for (name, params, log) in [("pre-trained", &tuned, &tuned_log), ("scratch", &scratch, &scratch_log)] {
        let m = model::evaluate(params, &test)?;
        println!(
            "{name:<12} test SER {:.3}  epochs to dev SER <= 0.1: {:?}",
            m.ser,
            log.epochs_to_reach(0.1)
        );
    }
    Ok(())
}
