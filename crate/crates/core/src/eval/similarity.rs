use std::collections::BTreeMap;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::corpus::AnnotatedUtterance;
use crate::model::MultitaskParams;
use crate::{Error, Result};

/// Cosine of two vectors; 0 when either has zero norm.
pub fn cosine(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let (na, nb) = (a.dot(a).sqrt(), b.dot(b).sqrt());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (a.dot(b) / (na * nb)).clamp(-1.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub source: String,
    pub target: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub target: String,
    /// Sources from most to least similar.
    pub source_ranking: Vec<String>,
    /// Highest score over all sources.
    pub max_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub pairs: Vec<PairScore>,
    /// Per source, targets from most to least similar.
    pub target_rankings: BTreeMap<String, Vec<String>>,
    pub targets: Vec<TargetSummary>,
}

impl SimilarityReport {
    pub fn score(&self, source: &str, target: &str) -> Option<f64> {
        self.pairs
            .iter()
            .find(|p| p.source == source && p.target == target)
            .map(|p| p.score)
    }

    pub fn target(&self, target: &str) -> Option<&TargetSummary> {
        self.targets.iter().find(|t| t.target == target)
    }
}

/// Centroid of the mean-pooled common-layer sentence representations.
pub fn corpus_centroid(model: &MultitaskParams, corpus: &[AnnotatedUtterance]) -> Result<Array1<f64>> {
    let mut sum = Array1::zeros(2 * model.weights.common.hidden_dim());
    for u in corpus {
        sum += &model.sentence_representation(&u.tokens)?;
    }
    Ok(sum / corpus.len() as f64)
}

fn ranked(mut scored: Vec<(String, f64)>) -> Vec<String> {
    // stable sort keeps input order among ties
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    scored.into_iter().map(|(n, _)| n).collect()
}

/// Scores every (source, target) pair by the cosine between corpus centroids.
pub fn semantic_similarity(
    model: &MultitaskParams,
    sources: &[(String, Vec<AnnotatedUtterance>)],
    targets: &[(String, Vec<AnnotatedUtterance>)],
) -> Result<SimilarityReport> {
    if sources.is_empty() || targets.is_empty() {
        return Err(Error::EmptyCorpus("similarity needs at least one source and one target".into()));
    }
    let centroids = |set: &[(String, Vec<AnnotatedUtterance>)]| -> Result<Vec<Array1<f64>>> {
        set.iter()
            .map(|(name, c)| {
                if c.is_empty() {
                    return Err(Error::EmptyCorpus(format!("corpus `{name}` is empty")));
                }
                corpus_centroid(model, c)
            })
            .collect()
    };
    let src = centroids(sources)?;
    let tgt = centroids(targets)?;
    let mut pairs = Vec::new();
    for ((s_name, _), s) in sources.iter().zip(&src) {
        for ((t_name, _), t) in targets.iter().zip(&tgt) {
            pairs.push(PairScore {
                source: s_name.clone(),
                target: t_name.clone(),
                score: cosine(s, t),
            });
        }
    }
    let target_rankings = sources
        .iter()
        .map(|(s, _)| {
            let scored = pairs.iter().filter(|p| &p.source == s).map(|p| (p.target.clone(), p.score)).collect();
            (s.clone(), ranked(scored))
        })
        .collect();
    let summaries = targets
        .iter()
        .map(|(t, _)| {
            let scored: Vec<(String, f64)> =
                pairs.iter().filter(|p| &p.target == t).map(|p| (p.source.clone(), p.score)).collect();
            let max_score = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
            TargetSummary {
                target: t.clone(),
                source_ranking: ranked(scored),
                max_score,
            }
        })
        .collect();
    Ok(SimilarityReport {
        pairs,
        target_rankings,
        targets: summaries,
    })
}
