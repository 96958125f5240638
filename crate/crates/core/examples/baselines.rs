//! Train the MaxEnt intent classifier and the linear-chain CRF slot tagger,
//! save them in one model file and evaluate the pair.

use nlu_bootstrap::baselines::{BaselineModel, CrfModel, MaxEntModel};
use nlu_bootstrap::config::BaselineConfig;
use nlu_bootstrap::engine::Engine;
use nlu_bootstrap::grammar::{sample_corpus, DomainBlueprint, DomainStats, SynthConfig};

fn main() -> nlu_bootstrap::Result<()> {
    let domain = DomainBlueprint::generate(DomainStats::CUSTOM_MEDIAN, 11)?;
    let train = sample_corpus(domain.spec(), &SynthConfig::new(200, 1))?;
    let test = sample_corpus(&domain.held_out_spec(20, 4), &SynthConfig::new(300, 2))?;
    let gaz = domain.spec().gazetteer_featurizer();
    let cfg = BaselineConfig::default();

    let (maxent, trajectory) = MaxEntModel::train(&train, Some(gaz.clone()), &cfg)?;
    println!("MaxEnt: {} features, {} iterations", maxent.features.len(), trajectory.len());
    let (crf, trajectory) = CrfModel::train(&train, Some(gaz), &cfg)?;
    println!("CRF: {} features, {} iterations", crf.features.len(), trajectory.len());

    let u = &test[0];
    let (intent, dist) = maxent.predict(&u.tokens);
    println!("\n\"{}\"\n  intent {intent} (p = {:.3})", u.text(), dist.iter().cloned().fold(0.0, f64::max));
    println!("  tags {:?}", crf.viterbi(&u.tokens).iter().map(|t| t.to_string()).collect::<Vec<_>>());

    let model = BaselineModel {
        maxent: Some(maxent),
        crf: Some(crf),
    };
    let path = std::env::temp_dir().join("nlu-bootstrap-baseline.bin");
    model.save(&path)?;
    let m = Engine::load(&path)?.evaluate(&test)?;
    println!("\ntest: F1 intent {:.3}  F1 slot {:.3}  SER {:.3}", m.f1_intent, m.f1_slot, m.ser);
    Ok(())
}
