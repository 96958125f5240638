use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedUtterance, Span};
use crate::{Error, Result};

/// A model's output for one reference utterance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtterancePrediction {
    pub intent: String,
    pub spans: Vec<Span>,
    pub reference: AnnotatedUtterance,
}

impl UtterancePrediction {
    pub fn intent_correct(&self) -> bool {
        self.intent == self.reference.intent
    }

    pub fn spans_correct(&self) -> bool {
        let mut pred = self.spans.clone();
        let mut gold = self.reference.spans();
        pred.sort();
        gold.sort();
        pred == gold
    }

    pub fn is_error(&self) -> bool {
        !(self.intent_correct() && self.spans_correct())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntentF1 {
    /// Equals accuracy for single-label classification.
    pub micro: f64,
    /// Mean per-intent F1 over intents that occur in gold or predictions.
    pub macro_f1: f64,
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn intent_f1(preds: &[UtterancePrediction]) -> Result<IntentF1> {
    if preds.is_empty() {
        return Err(Error::EmptyInput);
    }
    let correct = preds.iter().filter(|p| p.intent_correct()).count();
    let labels: BTreeSet<&str> = preds
        .iter()
        .flat_map(|p| [p.intent.as_str(), p.reference.intent.as_str()])
        .collect();
    let mut total = 0.0;
    for label in &labels {
        let tp = preds.iter().filter(|p| p.intent == *label && p.reference.intent == *label).count() as f64;
        let predicted = preds.iter().filter(|p| p.intent == *label).count() as f64;
        let gold = preds.iter().filter(|p| p.reference.intent == *label).count() as f64;
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if gold > 0.0 { tp / gold } else { 0.0 };
        total += f1(precision, recall);
    }
    Ok(IntentF1 {
        micro: correct as f64 / preds.len() as f64,
        macro_f1: total / labels.len() as f64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanF1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl SpanF1 {
    fn from_counts(tp: usize, predicted: usize, gold: usize) -> Self {
        let (precision, recall) = if predicted == 0 && gold == 0 {
            (1.0, 1.0)
        } else {
            (
                if predicted > 0 { tp as f64 / predicted as f64 } else { 0.0 },
                if gold > 0 { tp as f64 / gold as f64 } else { 0.0 },
            )
        };
        SpanF1 {
            precision,
            recall,
            f1: f1(precision, recall),
            true_positives: tp,
            predicted,
            gold,
        }
    }
}

fn matched(pred: &[Span], gold: &[Span]) -> usize {
    let mut remaining: BTreeMap<&Span, usize> = BTreeMap::new();
    for g in gold {
        *remaining.entry(g).or_insert(0) += 1;
    }
    pred.iter()
        .filter(|p| match remaining.get_mut(p) {
            Some(n) if *n > 0 => {
                *n -= 1;
                true
            }
            _ => false,
        })
        .count()
}

/// Exact-match span precision, recall and F1, micro-averaged over all
/// utterances. With no spans on either side everything is 1.
pub fn slot_span_f1(preds: &[UtterancePrediction]) -> SpanF1 {
    let (mut tp, mut predicted, mut gold) = (0, 0, 0);
    for p in preds {
        let g = p.reference.spans();
        tp += matched(&p.spans, &g);
        predicted += p.spans.len();
        gold += g.len();
    }
    SpanF1::from_counts(tp, predicted, gold)
}

/// Token-level diagnostic: F1 over non-`O` tokens, a token counting as
/// correct when its slot type and span position (begin/inside) match.
pub fn token_slot_f1(preds: &[UtterancePrediction]) -> SpanF1 {
    let (mut tp, mut predicted, mut gold) = (0, 0, 0);
    for p in preds {
        let n = p.reference.len();
        let pred_tags = crate::corpus::encode_iob(n, &p.spans).unwrap_or_else(|_| vec![crate::corpus::Tag::O; n]);
        for (pt, gt) in pred_tags.iter().zip(&p.reference.tags) {
            let (ps, gs) = (pt.slot().is_some(), gt.slot().is_some());
            predicted += ps as usize;
            gold += gs as usize;
            tp += (ps && pt == gt) as usize;
        }
    }
    SpanF1::from_counts(tp, predicted, gold)
}

/// Fraction of utterances with a wrong intent or a span set that differs
/// from the reference.
pub fn ser(preds: &[UtterancePrediction]) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(preds.iter().filter(|p| p.is_error()).count() as f64 / preds.len() as f64)
}

/// The three headline numbers for one domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainMetrics {
    pub f1_intent: f64,
    pub f1_slot: f64,
    pub ser: f64,
}

pub fn domain_metrics(preds: &[UtterancePrediction]) -> Result<DomainMetrics> {
    Ok(DomainMetrics {
        f1_intent: intent_f1(preds)?.micro,
        f1_slot: slot_span_f1(preds).f1,
        ser: ser(preds)?,
    })
}
