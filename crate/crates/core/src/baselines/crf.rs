use std::collections::HashMap;

use ndarray::{Array1, Array2};

use super::{log_sum_exp, minimize};
use crate::config::BaselineConfig;
use crate::corpus::{decode_iob, repair_iob, AnnotatedUtterance, DecodeMode, GazetteerFeaturizer, LabelSpace, Span, Tag};
use crate::neural::{BlockKind, BlockMut, BlockRef, Parameters};
use crate::{Error, Result};

/// Emission features of every position: current, previous and next token
/// identity, sentence-boundary flags, and the gazetteers the token takes part
/// in.
pub fn crf_featurize_sentence(tokens: &[String], gazetteers: Option<&GazetteerFeaturizer>) -> Vec<Vec<String>> {
    let gaz = gazetteers.map(|g| (g.names(), g.featurize(tokens)));
    let n = tokens.len();
    (0..n)
        .map(|t| {
            let mut f = vec![format!("w0:{}", tokens[t])];
            if t == 0 {
                f.push("BOS".into());
            } else {
                f.push(format!("w-1:{}", tokens[t - 1]));
            }
            if t + 1 == n {
                f.push("EOS".into());
            } else {
                f.push(format!("w+1:{}", tokens[t + 1]));
            }
            if let Some((names, m)) = &gaz {
                for (g, name) in names.iter().enumerate() {
                    if m[[t, g]] > 0.0 {
                        f.push(format!("gaz:{name}"));
                    }
                }
            }
            f
        })
        .collect()
}

/// Emission features of one position.
pub fn crf_featurize(tokens: &[String], position: usize, gazetteers: Option<&GazetteerFeaturizer>) -> Vec<String> {
    crf_featurize_sentence(tokens, gazetteers).swap_remove(position)
}

/// Emission (`K x F`) and transition (`K x K`, row = previous tag) weights.
#[derive(Clone, Debug, PartialEq)]
pub struct CrfWeights {
    pub emissions: Array2<f64>,
    pub transitions: Array2<f64>,
}

pub type CrfGrad = CrfWeights;

impl Parameters for CrfWeights {
    fn blocks(&self) -> Vec<BlockRef<'_>> {
        vec![
            BlockRef::matrix("crf.emissions".into(), BlockKind::Weight, &self.emissions),
            BlockRef::matrix("crf.transitions".into(), BlockKind::Weight, &self.transitions),
        ]
    }

    fn blocks_mut(&mut self) -> Vec<BlockMut<'_>> {
        vec![
            BlockMut::matrix("crf.emissions".into(), BlockKind::Weight, &mut self.emissions),
            BlockMut::matrix("crf.transitions".into(), BlockKind::Weight, &mut self.transitions),
        ]
    }
}

impl CrfWeights {
    pub fn zeros(num_tags: usize, num_features: usize) -> Self {
        CrfWeights {
            emissions: Array2::zeros((num_tags, num_features)),
            transitions: Array2::zeros((num_tags, num_tags)),
        }
    }

    pub fn num_tags(&self) -> usize {
        self.transitions.nrows()
    }

    /// `T x K` emission scores for feature-id lists.
    pub fn emission_scores(&self, feats: &[Vec<usize>]) -> Array2<f64> {
        let k = self.num_tags();
        Array2::from_shape_fn((feats.len(), k), |(t, y)| feats[t].iter().map(|&f| self.emissions[[y, f]]).sum())
    }

    /// Unnormalized score of one tag path.
    pub fn path_score(&self, emissions: &Array2<f64>, path: &[usize]) -> f64 {
        let mut s = 0.0;
        for (t, &y) in path.iter().enumerate() {
            s += emissions[[t, y]];
            if t > 0 {
                s += self.transitions[[path[t - 1], y]];
            }
        }
        s
    }

    /// Forward variables `alpha` (`T x K`) and `log Z`.
    pub fn forward(&self, emissions: &Array2<f64>) -> (Array2<f64>, f64) {
        let (n, k) = emissions.dim();
        let mut alpha = Array2::zeros((n, k));
        alpha.row_mut(0).assign(&emissions.row(0));
        for t in 1..n {
            for y in 0..k {
                let lse = log_sum_exp((0..k).map(|j| alpha[[t - 1, j]] + self.transitions[[j, y]]));
                alpha[[t, y]] = emissions[[t, y]] + lse;
            }
        }
        let log_z = log_sum_exp(alpha.row(n - 1).iter().copied());
        (alpha, log_z)
    }

    fn backward(&self, emissions: &Array2<f64>) -> Array2<f64> {
        let (n, k) = emissions.dim();
        let mut beta = Array2::zeros((n, k));
        for t in (0..n - 1).rev() {
            for j in 0..k {
                beta[[t, j]] = log_sum_exp((0..k).map(|y| self.transitions[[j, y]] + emissions[[t + 1, y]] + beta[[t + 1, y]]));
            }
        }
        beta
    }

    /// Best path (ties toward lower tag indices) and its score.
    pub fn viterbi(&self, emissions: &Array2<f64>) -> (Vec<usize>, f64) {
        let (n, k) = emissions.dim();
        let mut delta = emissions.row(0).to_owned();
        let mut back = Array2::<usize>::zeros((n, k));
        for t in 1..n {
            let mut next = Array1::zeros(k);
            for y in 0..k {
                let mut best = (0, delta[0] + self.transitions[[0, y]]);
                for j in 1..k {
                    let s = delta[j] + self.transitions[[j, y]];
                    if s > best.1 {
                        best = (j, s);
                    }
                }
                back[[t, y]] = best.0;
                next[y] = emissions[[t, y]] + best.1;
            }
            delta = next;
        }
        let mut last = 0;
        for y in 1..k {
            if delta[y] > delta[last] {
                last = y;
            }
        }
        let mut path = vec![last; n];
        for t in (1..n).rev() {
            path[t - 1] = back[[t, path[t]]];
        }
        let score = self.path_score(emissions, &path);
        (path, score)
    }
}

/// Log-likelihood of `tags` and its gradient (observed minus expected
/// feature counts).
pub fn crf_loglik(feats: &[Vec<usize>], tags: &[usize], weights: &CrfWeights) -> Result<(f64, CrfGrad)> {
    if feats.len() != tags.len() {
        return Err(Error::DimensionMismatch(format!("{} positions but {} tags", feats.len(), tags.len())));
    }
    if feats.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = weights.num_tags();
    let em = weights.emission_scores(feats);
    let (alpha, log_z) = weights.forward(&em);
    let beta = weights.backward(&em);
    let mut grad = CrfWeights::zeros(k, weights.emissions.ncols());
    for (t, fs) in feats.iter().enumerate() {
        for y in 0..k {
            let observed = if tags[t] == y { 1.0 } else { 0.0 };
            let g = observed - (alpha[[t, y]] + beta[[t, y]] - log_z).exp();
            for &f in fs {
                grad.emissions[[y, f]] += g;
            }
        }
        if t > 0 {
            grad.transitions[[tags[t - 1], tags[t]]] += 1.0;
            for j in 0..k {
                for y in 0..k {
                    let p = (alpha[[t - 1, j]] + weights.transitions[[j, y]] + em[[t, y]] + beta[[t, y]] - log_z).exp();
                    grad.transitions[[j, y]] -= p;
                }
            }
        }
    }
    Ok((weights.path_score(&em, tags) - log_z, grad))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrfModel {
    /// Slot tags in label-space order (`O` first).
    pub tags: Vec<Tag>,
    pub features: Vec<String>,
    index: HashMap<String, usize>,
    pub weights: CrfWeights,
    pub gazetteers: Option<GazetteerFeaturizer>,
    pub config: BaselineConfig,
}

impl CrfModel {
    pub fn new(tags: Vec<Tag>, features: Vec<String>, gazetteers: Option<GazetteerFeaturizer>, config: BaselineConfig) -> Self {
        let index = features.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        let weights = CrfWeights::zeros(tags.len(), features.len());
        CrfModel {
            tags,
            features,
            index,
            weights,
            gazetteers,
            config,
        }
    }

    pub fn feature_ids(&self, tokens: &[String]) -> Vec<Vec<usize>> {
        crf_featurize_sentence(tokens, self.gazetteers.as_ref())
            .into_iter()
            .map(|fs| fs.iter().filter_map(|f| self.index.get(f).copied()).collect())
            .collect()
    }

    /// Viterbi tags after lenient IOB repair.
    pub fn viterbi(&self, tokens: &[String]) -> Vec<Tag> {
        if tokens.is_empty() {
            return Vec::new();
        }
        let em = self.weights.emission_scores(&self.feature_ids(tokens));
        let (path, _) = self.weights.viterbi(&em);
        let raw: Vec<Tag> = path.into_iter().map(|y| self.tags[y].clone()).collect();
        repair_iob(&raw)
    }

    pub fn predict_spans(&self, tokens: &[String]) -> Vec<Span> {
        decode_iob(&self.viterbi(tokens), DecodeMode::Strict).expect("repaired tags are valid")
    }

    pub fn encode(&self, corpus: &[AnnotatedUtterance]) -> Result<Vec<(Vec<Vec<usize>>, Vec<usize>)>> {
        corpus
            .iter()
            .map(|u| {
                let tags = u
                    .tags
                    .iter()
                    .map(|t| self.tags.iter().position(|x| x == t).ok_or_else(|| Error::UnknownLabel(t.to_string())))
                    .collect::<Result<_>>()?;
                Ok((self.feature_ids(&u.tokens), tags))
            })
            .collect()
    }

    /// Summed negative log-likelihood and gradient.
    pub fn nll_and_grad(weights: &CrfWeights, data: &[(Vec<Vec<usize>>, Vec<usize>)]) -> Result<(f64, CrfGrad)> {
        let mut total = 0.0;
        let mut grad = CrfWeights::zeros(weights.num_tags(), weights.emissions.ncols());
        for (feats, tags) in data {
            let (ll, g) = crf_loglik(feats, tags, weights)?;
            total -= ll;
            grad.emissions -= &g.emissions;
            grad.transitions -= &g.transitions;
        }
        Ok((total, grad))
    }

    /// Fits a tagger over the label space of `corpus`.
    pub fn train(
        corpus: &[AnnotatedUtterance],
        gazetteers: Option<GazetteerFeaturizer>,
        config: &BaselineConfig,
    ) -> Result<(CrfModel, Vec<f64>)> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus("CRF training data is empty".into()));
        }
        let labels = LabelSpace::from_corpus(corpus)?;
        let mut features = Vec::new();
        let mut seen = HashMap::new();
        for u in corpus {
            for f in crf_featurize_sentence(&u.tokens, gazetteers.as_ref()).into_iter().flatten() {
                if !seen.contains_key(&f) {
                    seen.insert(f.clone(), features.len());
                    features.push(f);
                }
            }
        }
        let mut model = CrfModel::new(labels.slot_tags().to_vec(), features, gazetteers, config.clone());
        let data = model.encode(corpus)?;
        let trajectory = minimize(&mut model.weights, config, |w| {
            CrfModel::nll_and_grad(w, &data).expect("encoded data is consistent")
        })?;
        Ok((model, trajectory))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{gradient_check, RegularizationConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn random_instance(rng: &mut ChaCha8Rng, k: usize, n: usize, nf: usize) -> (CrfWeights, Vec<Vec<usize>>) {
        let mut w = CrfWeights::zeros(k, nf);
        w.emissions.mapv_inplace(|_| rng.gen_range(-2.0..2.0));
        w.transitions.mapv_inplace(|_| rng.gen_range(-2.0..2.0));
        let feats = (0..n).map(|_| (0..nf).filter(|_| rng.gen_bool(0.5)).collect()).collect();
        (w, feats)
    }

    fn all_paths(k: usize, n: usize) -> Vec<Vec<usize>> {
        (0..k.pow(n as u32))
            .map(|mut code| {
                (0..n)
                    .map(|_| {
                        let y = code % k;
                        code /= k;
                        y
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn featurizer_templates() {
        let t = toks("order fried chicken now");
        let f0 = crf_featurize(&t, 0, None);
        assert!(f0.contains(&"BOS".to_string()));
        assert!(!f0.iter().any(|f| f.starts_with("w-1:")));
        let f1 = crf_featurize(&t, 1, None);
        assert_eq!(f1.iter().filter(|f| f.starts_with('w')).count(), 3);
        assert!(crf_featurize(&t, 3, None).contains(&"EOS".to_string()));
        let g = GazetteerFeaturizer::new([("FoodItem".to_string(), vec!["fried chicken"])], 3);
        assert!(crf_featurize(&t, 2, Some(&g)).contains(&"gaz:FoodItem".to_string()));
        assert!(!crf_featurize(&t, 3, Some(&g)).contains(&"gaz:FoodItem".to_string()));
    }

    #[test]
    fn zero_weights_are_uniform() {
        let w = CrfWeights::zeros(3, 2);
        let feats = vec![vec![0], vec![1], vec![0, 1], vec![]];
        let (ll, _) = crf_loglik(&feats, &[0, 1, 2, 0], &w).unwrap();
        assert!((ll + 4.0 * 3f64.ln()).abs() < 1e-12);
        let (path, _) = w.viterbi(&w.emission_scores(&feats));
        assert_eq!(path, vec![0; 4]);
    }

    #[test]
    fn forward_and_viterbi_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 1..=3 {
            for n in 1..=4 {
                let (w, feats) = random_instance(&mut rng, k, n, 4);
                let em = w.emission_scores(&feats);
                let scores: Vec<f64> = all_paths(k, n).iter().map(|p| w.path_score(&em, p)).collect();
                let brute_z = scores.iter().map(|s| s.exp()).sum::<f64>().ln();
                assert!((w.forward(&em).1 - brute_z).abs() < 1e-10);
                let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(w.viterbi(&em).1, best);
            }
        }
    }

    #[test]
    fn single_token_uses_emissions_only() {
        let mut w = CrfWeights::zeros(3, 2);
        w.emissions[[2, 1]] = 1.0;
        w.transitions.fill(5.0);
        assert_eq!(w.viterbi(&w.emission_scores(&[vec![1]])).0, vec![2]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (w, feats) = random_instance(&mut rng, 3, 3, 4);
        let tags = [1, 2, 0];
        let (_, g) = crf_loglik(&feats, &tags, &w).unwrap();
        let r = gradient_check(&w, &g, 1e-5, |w| crf_loglik(&feats, &tags, w).unwrap().0);
        assert!(r.max_rel_error < 1e-6, "{r:?}");
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let w = CrfWeights::zeros(2, 1);
        assert!(matches!(crf_loglik(&[vec![0]], &[0, 1], &w), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn training_fits_a_toy_tagger() {
        let mk = |s: &str, spans: &[Span]| AnnotatedUtterance::from_spans(toks(s), "I", spans).unwrap();
        let corpus = vec![
            mk("play some jazz", &[Span::new("Genre", 2, 2)]),
            mk("play some rock", &[Span::new("Genre", 2, 2)]),
            mk("weather in new york", &[Span::new("City", 2, 3)]),
            mk("weather in rome", &[Span::new("City", 2, 2)]),
        ];
        let cfg = BaselineConfig {
            regularization: RegularizationConfig::NONE,
            ..Default::default()
        };
        let (m, _) = CrfModel::train(&corpus, None, &cfg).unwrap();
        for u in &corpus {
            assert_eq!(m.predict_spans(&u.tokens), u.spans());
        }
        let (again, _) = CrfModel::train(&corpus, None, &cfg).unwrap();
        assert_eq!(again.weights, m.weights);
    }
}
