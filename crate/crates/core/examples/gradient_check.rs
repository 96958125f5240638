//! Compare the hand-written back-propagation of the multitask network with
//! central finite differences.

use nlu_bootstrap::corpus::{tokenize, AnnotatedUtterance, LabelSpace, PretrainedEmbeddings, Span, Vocabulary};
use nlu_bootstrap::model::{compute_gradients, joint_loss, ModelDims, MultitaskParams, TaskWeights};
use nlu_bootstrap::neural::{gradient_check, regularization_penalty, RegularizationConfig};

fn main() -> nlu_bootstrap::Result<()> {
    let corpus = vec![
        AnnotatedUtterance::from_spans(tokenize("play some jazz")?, "Play", &[Span::new("Genre", 2, 2)])?,
        AnnotatedUtterance::from_spans(tokenize("weather in rome")?, "Weather", &[Span::new("City", 2, 2)])?,
    ];
    let dims = ModelDims {
        trained_embed_dim: 3,
        pretrained_embed_dim: 2,
        hidden_dim: 4,
    };
    let params = MultitaskParams::new(
        Vocabulary::build(corpus.iter().map(|u| &u.tokens), 1),
        LabelSpace::from_corpus(&corpus)?,
        dims,
        PretrainedEmbeddings::stub(0, dims.pretrained_embed_dim),
        None,
        5,
    )?;
    let batch = corpus
        .iter()
        .map(|u| Ok((params.encode(&u.tokens)?, params.gold(u)?)))
        .collect::<nlu_bootstrap::Result<Vec<_>>>()?;
    let reg = RegularizationConfig {
        l1: 0.0,
        l2: 1e-3,
        dropout: 0.0,
    };

    let (loss, grads) = compute_gradients(&params, &batch, &reg, TaskWeights::JOINT, None)?;
    println!("loss {:.6} (slot {:.6}, intent {:.6})", loss.total(), loss.slot, loss.intent);

    let report = gradient_check(&params.weights, &grads, 1e-5, |w| {
        let mut p = params.clone();
        p.weights = w.clone();
        let data: f64 = batch
            .iter()
            .map(|(e, g)| {
                let l = joint_loss(&p.forward(e).expect("forward"), g, &RegularizationConfig::NONE, &p).expect("loss");
                l.slot + l.intent
            })
            .sum();
        data + regularization_penalty(w, &reg)
    });
    println!(
        "checked {} parameters, max relative error {:.2e} at {}[{}]",
        report.checked, report.max_rel_error, report.worst.0, report.worst.1
    );
    println!("  analytic {:e} numeric {:e}", report.analytic, report.numeric
    );
    Ok(())
}
