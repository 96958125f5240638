//! Train the multitask intent/slot network from scratch on one synthetic
//! domain, evaluate it, and round-trip it through a checkpoint file.

use nlu_bootstrap::config::ModelConfig;
use nlu_bootstrap::grammar::{sample_corpus, DomainBlueprint, DomainStats, SynthConfig};
use nlu_bootstrap::model::{self, ModelDims, MultitaskParams, TrainConfig};
use nlu_bootstrap::neural::AdamConfig;

fn main() -> nlu_bootstrap::Result<()> {
    let domain = DomainBlueprint::generate(DomainStats::CUSTOM_MEDIAN, 3)?;
    let spec = domain.spec();
    let train = sample_corpus(spec, &SynthConfig::new(200, 1))?;
    let test = sample_corpus(&domain.held_out_spec(20, 5), &SynthConfig::new(200, 2))?;

    let cfg = ModelConfig::default().with_dims(ModelDims {
        trained_embed_dim: 16,
        pretrained_embed_dim: 16,
        hidden_dim: 16,
    });
    let params = MultitaskParams::for_corpus(
        &train,
        cfg.dims,
        cfg.min_count,
        &cfg.pretrained_embeddings,
        Some(spec.gazetteer_featurizer()),
        0,
    )?;
    let tc = TrainConfig {
        epochs: 15,
        optimizer: AdamConfig {
            learning_rate: 5e-3,
            ..AdamConfig::default()
        },
        ..TrainConfig::default()
    };
    let (params, log) = model::train(params, &train, &tc)?;
    for r in &log.records {
        println!(
            "epoch {:>2}  loss {:>9.3}  dev SER {:.3}",
            r.epoch, r.train_loss, r.dev_ser
        );
    }
    println!("kept epoch {}", log.best_epoch);

    let m = model::evaluate(&params, &test)?;
    println!("test: F1 intent {:.3}  F1 slot {:.3}  SER {:.3}", m.f1_intent, m.f1_slot, m.ser);

    let u = &test[0];
    let p = params.predict(&u.tokens)?;
    println!("\n\"{}\" -> {} {:?}", u.text(), p.intent, p.spans);

    let path = std::env::temp_dir().join("nlu-bootstrap-example.ckpt");
    params.save(&path)?;
    let loaded = MultitaskParams::load(&path)?;
    assert_eq!(loaded.checkpoint_hash()?, params.checkpoint_hash()?);
    println!("checkpoint round trip ok ({})", path.display());
    Ok(())
}
