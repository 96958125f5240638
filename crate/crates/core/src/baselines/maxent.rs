use std::collections::{BTreeSet, HashMap};

use ndarray::{Array1, Array2};

use super::{log_sum_exp, minimize};
use crate::config::BaselineConfig;
use crate::corpus::{AnnotatedUtterance, GazetteerFeaturizer};
use crate::neural::{BlockKind, BlockMut, BlockRef, Parameters};
use crate::{Error, Result};

/// Sorted binary features: `unigram:w`, `bigram:a_b`, and `gaz:Name` when any
/// token of the utterance lies inside a match of that gazetteer.
pub fn maxent_featurize(tokens: &[String], gazetteers: Option<&GazetteerFeaturizer>) -> Vec<String> {
    let mut out = BTreeSet::new();
    for t in tokens {
        out.insert(format!("unigram:{t}"));
    }
    for w in tokens.windows(2) {
        out.insert(format!("bigram:{}_{}", w[0], w[1]));
    }
    if let Some(g) = gazetteers {
        for (name, hit) in g.names().iter().zip(g.any_match(tokens)) {
            if hit {
                out.insert(format!("gaz:{name}"));
            }
        }
    }
    out.into_iter().collect()
}

/// `|intents| x |features|` weight matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxEntWeights(pub Array2<f64>);

impl Parameters for MaxEntWeights {
    fn blocks(&self) -> Vec<BlockRef<'_>> {
        vec![BlockRef::matrix("maxent.weights".into(), BlockKind::Weight, &self.0)]
    }

    fn blocks_mut(&mut self) -> Vec<BlockMut<'_>> {
        vec![BlockMut::matrix("maxent.weights".into(), BlockKind::Weight, &mut self.0)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxEntModel {
    pub intents: Vec<String>,
    pub features: Vec<String>,
    index: HashMap<String, usize>,
    pub weights: MaxEntWeights,
    pub gazetteers: Option<GazetteerFeaturizer>,
    pub config: BaselineConfig,
}

impl MaxEntModel {
    /// All-zero model over the given label and feature sets.
    pub fn new(
        intents: Vec<String>,
        features: Vec<String>,
        gazetteers: Option<GazetteerFeaturizer>,
        config: BaselineConfig,
    ) -> Self {
        let index = features.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        let weights = MaxEntWeights(Array2::zeros((intents.len(), features.len())));
        MaxEntModel {
            intents,
            features,
            index,
            weights,
            gazetteers,
            config,
        }
    }

    /// Indices of the known features of an utterance; unseen ones are dropped.
    pub fn feature_ids(&self, tokens: &[String]) -> Vec<usize> {
        maxent_featurize(tokens, self.gazetteers.as_ref())
            .iter()
            .filter_map(|f| self.index.get(f).copied())
            .collect()
    }

    fn scores(w: &Array2<f64>, ids: &[usize]) -> Array1<f64> {
        Array1::from_shape_fn(w.nrows(), |k| ids.iter().map(|&f| w[[k, f]]).sum())
    }

    pub fn distribution(&self, tokens: &[String]) -> Array1<f64> {
        let s = Self::scores(&self.weights.0, &self.feature_ids(tokens));
        let lse = log_sum_exp(s.iter().copied());
        s.mapv(|v| (v - lse).exp())
    }

    /// Most probable intent (lowest index on ties) and the distribution.
    pub fn predict(&self, tokens: &[String]) -> (String, Array1<f64>) {
        let p = self.distribution(tokens);
        let mut best = 0;
        for k in 1..p.len() {
            if p[k] > p[best] {
                best = k;
            }
        }
        (self.intents[best].clone(), p)
    }

    /// Negative log-likelihood of `data` (feature ids, intent index) and its
    /// gradient, without the penalty.
    pub fn nll_and_grad(weights: &MaxEntWeights, data: &[(Vec<usize>, usize)]) -> (f64, MaxEntWeights) {
        let w = &weights.0;
        let mut grad = Array2::zeros(w.raw_dim());
        let mut nll = 0.0;
        for (ids, y) in data {
            let s = Self::scores(w, ids);
            let lse = log_sum_exp(s.iter().copied());
            nll += lse - s[*y];
            for k in 0..w.nrows() {
                let p = (s[k] - lse).exp() - if k == *y { 1.0 } else { 0.0 };
                for &f in ids {
                    grad[[k, f]] += p;
                }
            }
        }
        (nll, MaxEntWeights(grad))
    }

    pub fn encode(&self, corpus: &[AnnotatedUtterance]) -> Result<Vec<(Vec<usize>, usize)>> {
        corpus
            .iter()
            .map(|u| {
                let y = self
                    .intents
                    .iter()
                    .position(|i| *i == u.intent)
                    .ok_or_else(|| Error::UnknownLabel(u.intent.clone()))?;
                Ok((self.feature_ids(&u.tokens), y))
            })
            .collect()
    }

    /// Fits a model; intents are sorted, features ordered by first
    /// appearance. Returns the model and the objective trajectory.
    pub fn train(
        corpus: &[AnnotatedUtterance],
        gazetteers: Option<GazetteerFeaturizer>,
        config: &BaselineConfig,
    ) -> Result<(MaxEntModel, Vec<f64>)> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus("MaxEnt training data is empty".into()));
        }
        let intents: Vec<String> = corpus.iter().map(|u| u.intent.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let mut features = Vec::new();
        let mut seen = HashMap::new();
        for u in corpus {
            for f in maxent_featurize(&u.tokens, gazetteers.as_ref()) {
                if !seen.contains_key(&f) {
                    seen.insert(f.clone(), features.len());
                    features.push(f);
                }
            }
        }
        let mut model = MaxEntModel::new(intents, features, gazetteers, config.clone());
        let data = model.encode(corpus)?;
        let trajectory = minimize(&mut model.weights, config, |w| Self::nll_and_grad(w, &data))?;
        Ok((model, trajectory))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{gradient_check, RegularizationConfig};

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn utt(s: &str, intent: &str) -> AnnotatedUtterance {
        let t = toks(s);
        let n = t.len();
        AnnotatedUtterance::new(t, intent, vec![crate::corpus::Tag::O; n]).unwrap()
    }

    #[test]
    fn featurizer_examples() {
        assert_eq!(maxent_featurize(&toks("hi"), None), vec!["unigram:hi"]);
        assert_eq!(maxent_featurize(&toks("a b"), None), vec!["bigram:a_b", "unigram:a", "unigram:b"]);
        let g = GazetteerFeaturizer::new([("FoodItem".to_string(), vec!["fried chicken"])], 3);
        assert!(maxent_featurize(&toks("fried chicken"), Some(&g)).contains(&"gaz:FoodItem".to_string()));
        assert!(!maxent_featurize(&toks("fried rice"), Some(&g)).contains(&"gaz:FoodItem".to_string()));
    }

    #[test]
    fn zero_weights_are_uniform() {
        let m = MaxEntModel::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["unigram:x".into()],
            None,
            BaselineConfig::default(),
        );
        let (intent, p) = m.predict(&toks("x"));
        assert_eq!(intent, "a");
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    fn toy() -> Vec<AnnotatedUtterance> {
        vec![
            utt("play some jazz", "Play"),
            utt("play rock music", "Play"),
            utt("weather in rome", "Weather"),
            utt("forecast for oslo", "Weather"),
            utt("play blues", "Play"),
            utt("rain in lima", "Weather"),
        ]
    }

    #[test]
    fn separable_data_is_fit() {
        let cfg = BaselineConfig {
            regularization: RegularizationConfig::NONE,
            ..Default::default()
        };
        let corpus = toy();
        let (m, traj) = MaxEntModel::train(&corpus, None, &cfg).unwrap();
        assert!(corpus.iter().all(|u| m.predict(&u.tokens).0 == u.intent));
        assert!(traj.last().unwrap() < &traj[0]);
    }

    #[test]
    fn stronger_l2_shrinks_weights() {
        let norm = |l2: f64| {
            let cfg = BaselineConfig {
                regularization: RegularizationConfig { l1: 0.0, l2, dropout: 0.0 },
                ..Default::default()
            };
            let (m, _) = MaxEntModel::train(&toy(), None, &cfg).unwrap();
            m.weights.0.iter().map(|w| w * w).sum::<f64>().sqrt()
        };
        assert!(norm(10.0) < norm(0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let corpus = toy();
        let (mut m, _) = MaxEntModel::train(&corpus, None, &BaselineConfig::default()).unwrap();
        m.weights.0.mapv_inplace(|w| w + 0.3);
        let data = m.encode(&corpus).unwrap();
        let (_, g) = MaxEntModel::nll_and_grad(&m.weights, &data);
        let r = gradient_check(&m.weights, &g, 1e-5, |w| MaxEntModel::nll_and_grad(w, &data).0);
        assert!(r.max_rel_error < 1e-6, "{r:?}");
    }

    #[test]
    fn small_step_ascent_is_monotone() {
        let corpus = toy();
        let m = MaxEntModel::new(
            vec!["Play".into(), "Weather".into()],
            corpus.iter().flat_map(|u| maxent_featurize(&u.tokens, None)).collect::<BTreeSet<_>>().into_iter().collect(),
            None,
            BaselineConfig::default(),
        );
        let data = m.encode(&corpus).unwrap();
        let mut w = m.weights.clone();
        let mut last = f64::INFINITY;
        for _ in 0..200 {
            let (nll, g) = MaxEntModel::nll_and_grad(&w, &data);
            assert!(nll <= last + 1e-12);
            last = nll;
            w.0.scaled_add(-0.05, &g.0);
        }
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(MaxEntModel::train(&[], None, &BaselineConfig::default()), Err(Error::EmptyCorpus(_))));
    }
}
