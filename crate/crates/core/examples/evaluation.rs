//! Score predictions, aggregate per-domain results into a report table and
//! test whether two approaches differ.

use nlu_bootstrap::corpus::{tokenize, AnnotatedUtterance, Span};
use nlu_bootstrap::eval::{
    aggregate, compare_reports, domain_metrics, intent_f1, slot_span_f1, to_csv, DomainMetrics, DomainRow,
    UtterancePrediction,
};

fn utt(text: &str, intent: &str, spans: &[Span]) -> nlu_bootstrap::Result<AnnotatedUtterance> {
    AnnotatedUtterance::from_spans(tokenize(text)?, intent, spans)
}

fn main() -> nlu_bootstrap::Result<()> {
    let gold = utt("play jazz in the kitchen", "Play", &[Span::new("Genre", 1, 1), Span::new("Room", 4, 4)])?;
    let preds = vec![
        UtterancePrediction {
            intent: "Play".into(),
            spans: gold.spans(),
            reference: gold.clone(),
        },
        UtterancePrediction {
            intent: "Stop".into(),
            spans: gold.spans(),
            reference: gold.clone(),
        },
        UtterancePrediction {
            intent: "Play".into(),
            spans: vec![Span::new("Genre", 1, 1), Span::new("Room", 3, 4)],
            reference: gold.clone(),
        },
        UtterancePrediction {
            intent: "Pause".into(),
            spans: vec![],
            reference: gold,
        },
    ];
    let f = intent_f1(&preds)?;
    let s = slot_span_f1(&preds);
    println!("intent micro F1 {:.3}, macro F1 {:.3}", f.micro, f.macro_f1);
    println!("span P {:.3} R {:.3} F1 {:.3}", s.precision, s.recall, s.f1);
    println!("{:?}", domain_metrics(&preds)?);

    let row = |d: &str, ser: f64| {
        DomainRow::new(
            d,
            DomainMetrics {
                f1_intent: 1.0 - ser / 2.0,
                f1_slot: 1.0 - ser / 3.0,
                ser,
            },
            500,
        )
    };
    let a = aggregate("pretrained", vec![row("music", 0.08), row("recipes", 0.11), row("weather", 0.05)])?;
    let b = aggregate("scratch", vec![row("music", 0.10), row("recipes", 0.14), row("weather", 0.09)])?;
    print!("\n{}", to_csv([&a, &b]));
    let c = compare_reports(&a, &b)?;
    println!("\nSER paired t-test: t = {:.3}, p = {:.4}", c.ser.t, c.ser.p_value);
    Ok(())
}
