//! Evaluation: intent F1, exact-match span F1, sentence error rate,
//! cross-domain aggregation, paired t-tests and semantic similarity.

mod metrics;
mod report;
mod similarity;
mod stats;

pub use metrics::{
    domain_metrics, intent_f1, ser, slot_span_f1, token_slot_f1, DomainMetrics, IntentF1, SpanF1, UtterancePrediction,
};
pub use report::{aggregate, compare_reports, to_csv, Comparison, DomainRow, EvalReport, TableRow, CSV_HEADER};
pub use similarity::{corpus_centroid, cosine, semantic_similarity, PairScore, SimilarityReport, TargetSummary};
pub use stats::{mean, median, paired_ttest, ttest_differences, TTestResult};
