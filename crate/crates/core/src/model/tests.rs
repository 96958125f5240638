use ndarray::{array, Array1, Array2};

use super::*;
use crate::corpus::{Span, Tag};
use crate::neural::{gradient_check, lstm_step, softmax, RegularizationConfig};

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn toy_params(gaz: bool, seed: u64) -> MultitaskParams {
    let vocab = Vocabulary::build([toks("play some jazz now please")].iter(), 1);
    let labels = LabelSpace::new(["A", "B", "C"], ["X", "Y", "Z"]).unwrap();
    let dims = ModelDims {
        trained_embed_dim: 3,
        pretrained_embed_dim: 2,
        hidden_dim: 4,
    };
    let gazetteers = gaz.then(|| {
        GazetteerFeaturizer::new(
            [("X".to_string(), vec!["jazz"]), ("Y".to_string(), vec!["some jazz", "now"])],
            3,
        )
    });
    MultitaskParams::new(vocab, labels, dims, PretrainedEmbeddings::stub(7, 2), gazetteers, seed).unwrap()
}

fn gold_for(p: &MultitaskParams, tokens: &str, intent: &str, tags: &str) -> (Encoded, Gold) {
    let tags: Vec<Tag> = tags.split_whitespace().map(|t| t.parse().unwrap()).collect();
    let utt = AnnotatedUtterance::new(toks(tokens), intent, tags).unwrap();
    (p.encode(&utt.tokens).unwrap(), p.gold(&utt).unwrap())
}

#[test]
fn zero_heads_give_uniform_outputs() {
    let mut p = toy_params(false, 1);
    p.weights.slot_head = SoftmaxHead::zeros(7, 8);
    p.weights.intent_head = SoftmaxHead::zeros(3, 8);
    let trace = p.forward(&p.encode(&toks("play some jazz now please")).unwrap()).unwrap();
    assert_eq!(trace.slot_probs().dim(), (5, 7));
    assert_eq!(trace.intent_probs().len(), 3);
    for v in trace.slot_probs() {
        assert!((v - 1.0 / 7.0).abs() < 1e-15);
    }
    for v in trace.intent_probs() {
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
    // uniform model predicts the first intent and all-O tags
    let pred = p.predict(&toks("play jazz")).unwrap();
    assert_eq!(pred.intent, "A");
    assert!(pred.spans.is_empty());
}

#[test]
fn uniform_loss_value() {
    let mut p = toy_params(false, 1);
    p.weights.slot_head = SoftmaxHead::zeros(7, 8);
    p.weights.intent_head = SoftmaxHead::zeros(3, 8);
    let (enc, gold) = gold_for(&p, "play jazz", "B", "O B-X");
    let trace = p.forward(&enc).unwrap();
    let loss = joint_loss(&trace, &gold, &RegularizationConfig::NONE, &p).unwrap();
    assert!((loss.total() - (2.0 * 7f64.ln() + 3f64.ln())).abs() < 1e-12);
}

#[test]
fn representations_follow_the_concatenation_rules() {
    let p = toy_params(true, 3);
    let trace = p.forward(&p.encode(&toks("play some jazz")).unwrap()).unwrap();
    let h = 4;
    for t in 0..3 {
        let row = trace.r_slot.row(t);
        assert_eq!(row.slice(ndarray::s![..h]), trace.slot.forward_states().row(t));
        assert_eq!(row.slice(ndarray::s![h..]), trace.slot.backward_states().row(t));
    }
    assert_eq!(trace.r_intent.slice(ndarray::s![..h]), trace.intent.forward_states().row(2));
    assert_eq!(trace.r_intent.slice(ndarray::s![h..]), trace.intent.backward_states().row(0));
}

/// Recomputes the intent distribution of a two-token input from single LSTM
/// steps and a plain softmax.
#[test]
fn intent_distribution_matches_composed_steps() {
    let p = toy_params(false, 1);
    let tokens = toks("play jazz");
    let enc = p.encode(&tokens).unwrap();
    let w = &p.weights;
    let x: Vec<Array1<f64>> = (0..2)
        .map(|t| {
            let mut v = w.embeddings.row(enc.ids[t]).to_vec();
            v.extend(enc.pretrained.row(t).iter());
            Array1::from(v)
        })
        .collect();
    let run = |cell: &crate::neural::LstmCellParams, xs: &[Array1<f64>]| -> Vec<Array1<f64>> {
        let h = cell.hidden_dim();
        let (mut hs, mut hp, mut cp) = (Vec::new(), Array1::zeros(h), Array1::zeros(h));
        for xt in xs {
            let (hn, cn) = lstm_step(xt.view(), hp.view(), cp.view(), cell).unwrap();
            hs.push(hn.clone());
            hp = hn;
            cp = cn;
        }
        hs
    };
    let cat = |a: &Array1<f64>, b: &Array1<f64>| Array1::from([a.to_vec(), b.to_vec()].concat());
    let cf = run(&w.common.forward, &x);
    let rev: Vec<_> = x.iter().rev().cloned().collect();
    let mut cb = run(&w.common.backward, &rev);
    cb.reverse();
    let rc: Vec<_> = (0..2).map(|t| cat(&cf[t], &cb[t])).collect();
    let f = run(&w.intent_tower.forward, &rc);
    let rev: Vec<_> = rc.iter().rev().cloned().collect();
    let b = run(&w.intent_tower.backward, &rev);
    let r = cat(&f[1], &b[1]);
    let expected = softmax((w.intent_head.weight.dot(&r) + &w.intent_head.bias).view()).unwrap();
    let got = p.forward(&enc).unwrap().intent_probs();
    for (a, e) in got.iter().zip(&expected) {
        assert!((a - e).abs() < 1e-13, "{a} vs {e}");
    }
}

#[test]
fn missing_or_misshaped_gazetteer_features_are_rejected() {
    let p = toy_params(true, 1);
    assert!(matches!(p.encode_tokens(&toks("a b"), None), Err(Error::MissingGazFeatures(2))));
    assert!(matches!(
        p.encode_tokens(&toks("a b"), Some(Array2::zeros((2, 3)))),
        Err(Error::DimensionMismatch(_))
    ));
}

fn check_gradients(gaz: bool, reg: RegularizationConfig) {
    let p = toy_params(gaz, 11);
    let batch = vec![
        gold_for(&p, "play some jazz", "B", "O B-X I-X"),
        gold_for(&p, "now please", "C", "B-Z O"),
    ];
    let (_, grads) = compute_gradients(&p, &batch, &reg, TaskWeights::JOINT, None).unwrap();
    let report = gradient_check(&p.weights, &grads, 1e-5, |w| {
        let mut q = p.clone();
        q.weights = w.clone();
        let data: f64 = batch
            .iter()
            .map(|(e, g)| {
                let l = joint_loss(&q.forward(e).unwrap(), g, &RegularizationConfig::NONE, &q).unwrap();
                l.slot + l.intent
            })
            .sum();
        data + crate::neural::regularization_penalty(w, &reg)
    });
    assert!(report.max_rel_error < 1e-4, "{report:?}");
}

#[test]
fn gradients_match_finite_differences() {
    let reg = RegularizationConfig {
        l1: 1e-3,
        l2: 1e-2,
        dropout: 0.0,
    };
    check_gradients(false, reg);
    check_gradients(true, reg);
}

#[test]
fn slot_loss_does_not_reach_the_intent_tower() {
    let p = toy_params(true, 5);
    let batch = vec![gold_for(&p, "play some jazz", "B", "O B-X I-X")];
    let none = RegularizationConfig::NONE;
    let (_, g_slot) = compute_gradients(&p, &batch, &none, TaskWeights::SLOT_ONLY, None).unwrap();
    let (_, g_int) = compute_gradients(&p, &batch, &none, TaskWeights::INTENT_ONLY, None).unwrap();
    let (joint, g_joint) = compute_gradients(&p, &batch, &none, TaskWeights::JOINT, None).unwrap();
    for b in g_slot.blocks() {
        if b.name.starts_with("intent_") {
            assert!(b.data.iter().all(|&v| v == 0.0), "{}", b.name);
        }
    }
    for b in g_int.blocks() {
        if b.name.starts_with("slot_") {
            assert!(b.data.iter().all(|&v| v == 0.0), "{}", b.name);
        }
    }
    let mut sum = g_slot.clone();
    sum.add_scaled(&g_int, 1.0);
    for (a, b) in sum.blocks().iter().zip(g_joint.blocks()) {
        for (x, y) in a.data.iter().zip(b.data) {
            assert!((x - y).abs() < 1e-12);
        }
    }
    let trace = p.forward(&batch[0].0).unwrap();
    let parts = joint_loss(&trace, &batch[0].1, &none, &p).unwrap();
    assert_eq!(joint.total(), parts.slot + parts.intent);
}

#[test]
fn intent_depends_on_every_token() {
    let p = toy_params(false, 2);
    let base = p.forward(&p.encode(&toks("play some jazz now")).unwrap()).unwrap().intent_probs();
    for t in 0..4 {
        let mut tokens = toks("play some jazz now");
        tokens[t] = "please".into();
        let other = p.forward(&p.encode(&tokens).unwrap()).unwrap().intent_probs();
        assert!(base.iter().zip(&other).any(|(a, b)| a != b), "token {t}");
    }
}

#[test]
fn decode_repairs_orphan_inside_tags() {
    let p = toy_params(false, 1);
    let mut trace = p.forward(&p.encode(&toks("a b c")).unwrap()).unwrap();
    // argmaxes O I-X O
    trace.slot_log_probs = array![
        [0.0, -9.0, -9.0, -9.0, -9.0, -9.0, -9.0],
        [-9.0, -9.0, 0.0, -9.0, -9.0, -9.0, -9.0],
        [0.0, -9.0, -9.0, -9.0, -9.0, -9.0, -9.0]
    ];
    let pred = p.decode(&trace);
    assert_eq!(pred.spans, vec![Span::new("X", 1, 1)]);
    trace.slot_log_probs.row_mut(2).assign(&array![-9.0, -9.0, 0.0, -9.0, -9.0, -9.0, -9.0]);
    trace.slot_log_probs.row_mut(1).assign(&array![-9.0, 0.0, -9.0, -9.0, -9.0, -9.0, -9.0]);
    assert_eq!(p.decode(&trace).spans, vec![Span::new("X", 1, 2)]);
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let p = toy_params(true, 9);
    let bytes = p.to_bytes().unwrap();
    let q = MultitaskParams::from_bytes(&bytes).unwrap();
    assert_eq!(p.weights, q.weights);
    assert_eq!(q.to_bytes().unwrap(), bytes);
    assert_eq!(q.lineage, p.lineage);
    let mut bad = bytes.clone();
    // corrupt the version field inside the JSON header
    let pos = bad.windows(11).position(|w| w == b"\"version\":1").unwrap();
    bad[pos + 10] = b'2';
    assert!(matches!(MultitaskParams::from_bytes(&bad), Err(Error::VersionMismatch { found: 2, .. })));
}

#[test]
fn vocab_extension_keeps_existing_rows() {
    let mut p = toy_params(false, 1);
    let before = p.weights.embeddings.clone();
    let added = p.extend_vocab(toks("jazz blues rock").iter(), 4);
    assert_eq!(added, 2);
    assert_eq!(p.weights.embeddings.slice(ndarray::s![..before.nrows(), ..]), before);
    p.validate().unwrap();
    let bluesv = p.embeddings.pretrained_vector("blues");
    assert_eq!(bluesv, p.embeddings.pretrained().lookup("blues"));
}

fn toy_corpus() -> Vec<AnnotatedUtterance> {
    let mut out = Vec::new();
    let songs = ["jazz", "blues", "rock", "soul", "funk"];
    let cities = ["paris", "rome", "oslo", "lima", "kiev"];
    for i in 0..25 {
        let s = songs[i % 5];
        let c = cities[(i / 5) % 5];
        let t = toks(&format!("play some {s} please"));
        out.push(AnnotatedUtterance::from_spans(t, "Play", &[Span::new("Genre", 2, 2)]).unwrap());
        let t = if i % 2 == 0 { toks(&format!("weather in {c}")) } else { toks(&format!("is it cold in {c} today")) };
        let pos = t.iter().position(|w| w == c).unwrap();
        out.push(AnnotatedUtterance::from_spans(t, "Weather", &[Span::new("City", pos, pos)]).unwrap());
    }
    out
}

#[test]
fn training_memorizes_a_toy_corpus() {
    let corpus = toy_corpus();
    assert_eq!(corpus.len(), 50);
    let dims = ModelDims {
        trained_embed_dim: 8,
        pretrained_embed_dim: 8,
        hidden_dim: 8,
    };
    let p = MultitaskParams::for_corpus(&corpus, dims, 1, &PretrainedSource::Stub { seed: 1, dim: 8 }, None, 3).unwrap();
    let cfg = TrainConfig {
        epochs: 50,
        batch_size: 8,
        patience: 50,
        dev_fraction: 0.0,
        seed: 3,
        optimizer: crate::neural::AdamConfig {
            learning_rate: 1e-2,
            ..Default::default()
        },
        regularization: RegularizationConfig {
            dropout: 0.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let (trained, log) = train(p.clone(), &corpus, &cfg).unwrap();
    assert_eq!(evaluate(&trained, &corpus).unwrap().ser, 0.0);
    let losses: Vec<f64> = log.records.iter().map(|r| r.train_loss).collect();
    let down = losses.windows(2).filter(|w| w[1] <= w[0]).count();
    assert!(down as f64 >= 0.8 * (losses.len() - 1) as f64, "{losses:?}");
    let (again, _) = train(p, &corpus, &cfg).unwrap();
    assert_eq!(again.to_bytes().unwrap(), trained.to_bytes().unwrap());
}

#[test]
fn zero_epochs_leave_parameters_unchanged() {
    let corpus = toy_corpus();
    let p = MultitaskParams::for_corpus(
        &corpus,
        ModelDims {
            trained_embed_dim: 4,
            pretrained_embed_dim: 4,
            hidden_dim: 4,
        },
        1,
        &PretrainedSource::Stub { seed: 1, dim: 4 },
        None,
        3,
    )
    .unwrap();
    let cfg = TrainConfig {
        epochs: 0,
        ..Default::default()
    };
    let (q, log) = train(p.clone(), &corpus, &cfg).unwrap();
    assert!(log.records.is_empty());
    assert_eq!(q.weights, p.weights);
    assert!(matches!(train(p, &corpus[..5], &cfg), Err(Error::EmptyCorpus(_))));
}
