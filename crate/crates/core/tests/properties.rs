//! Property tests over IOB conversion, metrics, aggregation and the t-test.

use proptest::prelude::*;

use nlu_bootstrap::corpus::{decode_iob, encode_iob, is_valid_iob, repair_iob, AnnotatedUtterance, DecodeMode, Span, Tag};
use nlu_bootstrap::eval::{
    aggregate, intent_f1, paired_ttest, ser, slot_span_f1, DomainMetrics, DomainRow, UtterancePrediction,
};

fn tag_strategy() -> impl Strategy<Value = Tag> {
    prop_oneof![
        Just(Tag::O),
        Just(Tag::B("A".into())),
        Just(Tag::I("A".into())),
        Just(Tag::B("B".into())),
        Just(Tag::I("B".into())),
    ]
}

/// Disjoint spans over `len` tokens, from a random segmentation.
fn spans_strategy(len: usize) -> impl Strategy<Value = Vec<Span>> {
    proptest::collection::vec((0usize..3, 1usize..4), len).prop_map(move |choices| {
        let mut spans = Vec::new();
        let mut t = 0;
        for (kind, width) in choices {
            if t >= len {
                break;
            }
            let end = (t + width - 1).min(len - 1);
            match kind {
                0 => {
                    t += 1;
                    continue;
                }
                1 => spans.push(Span::new("A", t, end)),
                _ => spans.push(Span::new("B", t, end)),
            }
            t = end + 1;
        }
        spans
    })
}

fn utterance_strategy() -> impl Strategy<Value = UtterancePrediction> {
    (1usize..6)
        .prop_flat_map(|len| (Just(len), spans_strategy(len), spans_strategy(len), 0usize..3, 0usize..3))
        .prop_map(|(len, gold, pred, gi, pi)| {
            let intents = ["X", "Y", "Z"];
            let tokens = (0..len).map(|i| format!("w{i}")).collect();
            UtterancePrediction {
                intent: intents[pi].into(),
                spans: pred,
                reference: AnnotatedUtterance::from_spans(tokens, intents[gi], &gold).unwrap(),
            }
        })
}

fn swap(p: &UtterancePrediction) -> UtterancePrediction {
    UtterancePrediction {
        intent: p.reference.intent.clone(),
        spans: p.reference.spans(),
        reference: AnnotatedUtterance::from_spans(p.reference.tokens.clone(), p.intent.clone(), &p.spans).unwrap(),
    }
}

proptest! {
    #[test]
    fn repair_is_valid_and_keeps_lenient_reading(tags in proptest::collection::vec(tag_strategy(), 0..8)) {
        let fixed = repair_iob(&tags);
        prop_assert!(is_valid_iob(&fixed));
        prop_assert_eq!(
            decode_iob(&fixed, DecodeMode::Strict).unwrap(),
            decode_iob(&tags, DecodeMode::Lenient).unwrap()
        );
        if is_valid_iob(&tags) {
            prop_assert_eq!(fixed, tags);
        }
    }

    #[test]
    fn spans_round_trip((len, spans) in (1usize..10).prop_flat_map(|n| (Just(n), spans_strategy(n)))) {
        let tags = encode_iob(len, &spans).unwrap();
        prop_assert_eq!(decode_iob(&tags, DecodeMode::Strict).unwrap(), spans);
    }

    #[test]
    fn ser_is_bounded_by_each_error_source(preds in proptest::collection::vec(utterance_strategy(), 1..12)) {
        let s = ser(&preds).unwrap();
        let n = preds.len() as f64;
        let intent_acc = preds.iter().filter(|p| p.intent_correct()).count() as f64 / n;
        let span_acc = preds.iter().filter(|p| p.spans_correct()).count() as f64 / n;
        prop_assert!(s >= 1.0 - intent_acc - 1e-12);
        prop_assert!(s >= 1.0 - span_acc - 1e-12);
        prop_assert!((intent_f1(&preds).unwrap().micro - intent_acc).abs() < 1e-12);
    }

    #[test]
    fn span_f1_ignores_order_and_swaps_precision_recall(
        preds in proptest::collection::vec(utterance_strategy(), 1..8),
    ) {
        let base = slot_span_f1(&preds);
        let reversed: Vec<_> = preds
            .iter()
            .map(|p| UtterancePrediction { spans: p.spans.iter().rev().cloned().collect(), ..p.clone() })
            .collect();
        prop_assert_eq!(slot_span_f1(&reversed), base);
        let swapped = slot_span_f1(&preds.iter().map(swap).collect::<Vec<_>>());
        prop_assert_eq!(swapped.precision, base.recall);
        prop_assert_eq!(swapped.recall, base.precision);
        prop_assert!((swapped.f1 - base.f1).abs() < 1e-12);
    }

    #[test]
    fn aggregate_mean_is_linear_and_median_ignores_domain_order(
        sers in proptest::collection::vec(0.0f64..1.0, 1..8),
        k in 0.0f64..1.0,
        c in 0.0f64..0.5,
    ) {
        let rows = |xs: &[f64]| -> Vec<DomainRow> {
            xs.iter()
                .enumerate()
                .map(|(i, &s)| DomainRow::new(format!("d{i}"), DomainMetrics { f1_intent: s, f1_slot: s, ser: s }, 10))
                .collect()
        };
        let a = aggregate("a", rows(&sers)).unwrap();
        let scaled: Vec<f64> = sers.iter().map(|s| k * s + c).collect();
        let b = aggregate("b", rows(&scaled)).unwrap();
        prop_assert!((b.mean.ser - (k * a.mean.ser + c)).abs() < 1e-12);
        let mut rev = rows(&sers);
        rev.reverse();
        for (i, r) in rev.iter_mut().enumerate() {
            r.domain = format!("renamed{i}");
        }
        prop_assert_eq!(aggregate("c", rev).unwrap().median.ser, a.median.ser);
    }

    #[test]
    fn negating_differences_flips_t(
        a in proptest::collection::vec(-5.0f64..5.0, 2..10),
        shift in proptest::collection::vec(-1.0f64..1.0, 10),
    ) {
        let b: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| x + s).collect();
        let fwd = paired_ttest(&a, &b).unwrap();
        let back = paired_ttest(&b, &a).unwrap();
        prop_assert_eq!(fwd.t, -back.t);
        prop_assert!((fwd.p_value - back.p_value).abs() < 1e-12);
    }
}
