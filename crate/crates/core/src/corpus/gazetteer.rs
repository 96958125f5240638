use std::collections::{BTreeSet, HashSet};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Per-token binary gazetteer indicators. Token `t` fires for gazetteer `g`
/// when it lies inside an n-gram (`n <= max_ngram`) that is an entry of `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "GazetteerRecord", into = "GazetteerRecord")]
pub struct GazetteerFeaturizer {
    names: Vec<String>,
    entries: Vec<HashSet<Vec<String>>>,
    max_ngram: usize,
}

#[derive(Serialize, Deserialize)]
struct GazetteerRecord {
    gazetteers: Vec<NamedGazetteer>,
    max_ngram: usize,
}

#[derive(Serialize, Deserialize)]
struct NamedGazetteer {
    name: String,
    values: Vec<String>,
}

impl From<GazetteerRecord> for GazetteerFeaturizer {
    fn from(r: GazetteerRecord) -> Self {
        GazetteerFeaturizer::new(r.gazetteers.into_iter().map(|g| (g.name, g.values)), r.max_ngram)
    }
}

impl From<GazetteerFeaturizer> for GazetteerRecord {
    fn from(f: GazetteerFeaturizer) -> Self {
        let gazetteers = f
            .names
            .iter()
            .zip(&f.entries)
            .map(|(name, set)| NamedGazetteer {
                name: name.clone(),
                values: set
                    .iter()
                    .map(|toks| toks.join(" "))
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect(),
            })
            .collect();
        GazetteerRecord {
            gazetteers,
            max_ngram: f.max_ngram,
        }
    }
}

impl GazetteerFeaturizer {
    pub const DEFAULT_MAX_NGRAM: usize = 3;

    /// Gazetteer values are lowercased and whitespace-tokenized.
    pub fn new<I, V, S>(gazetteers: I, max_ngram: usize) -> Self
    where
        I: IntoIterator<Item = (String, V)>,
        V: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut names = Vec::new();
        let mut entries = Vec::new();
        for (name, values) in gazetteers {
            names.push(name);
            entries.push(
                values
                    .into_iter()
                    .map(|v| v.as_ref().split_whitespace().map(str::to_lowercase).collect::<Vec<_>>())
                    .filter(|v| !v.is_empty())
                    .collect(),
            );
        }
        GazetteerFeaturizer {
            names,
            entries,
            max_ngram,
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Number of gazetteers, i.e. the feature width.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn max_ngram(&self) -> usize {
        self.max_ngram
    }

    /// `T x G` matrix of 0/1 indicators.
    pub fn featurize(&self, tokens: &[String]) -> Array2<f64> {
        let mut out = Array2::zeros((tokens.len(), self.len()));
        for (g, set) in self.entries.iter().enumerate() {
            for n in 1..=self.max_ngram.min(tokens.len()) {
                for start in 0..=tokens.len() - n {
                    if set.contains(&tokens[start..start + n]) {
                        for t in start..start + n {
                            out[[t, g]] = 1.0;
                        }
                    }
                }
            }
        }
        out
    }

    /// Whether each gazetteer matches anywhere in the sentence.
    pub fn any_match(&self, tokens: &[String]) -> Vec<bool> {
        let f = self.featurize(tokens);
        (0..self.len()).map(|g| f.column(g).iter().any(|&x| x > 0.0)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn food() -> GazetteerFeaturizer {
        GazetteerFeaturizer::new([("FoodItem".to_string(), vec!["fried chicken"])], 3)
    }

    #[test]
    fn participating_tokens_fire() {
        let f = food().featurize(&toks("find fried chicken"));
        assert_eq!(f.column(0).to_vec(), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn match_is_order_sensitive() {
        let f = food().featurize(&toks("chicken fried"));
        assert!(f.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn no_gazetteers_gives_zero_width() {
        let g = GazetteerFeaturizer::new(Vec::<(String, Vec<String>)>::new(), 3);
        assert_eq!(g.featurize(&toks("a b")).dim(), (2, 0));
    }

    #[test]
    fn entries_longer_than_max_ngram_never_fire() {
        let g = GazetteerFeaturizer::new([("X".to_string(), vec!["a b c d"])], 3);
        assert!(g.featurize(&toks("a b c d")).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn serde_roundtrip() {
        let g = food();
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<GazetteerFeaturizer>(&json).unwrap(), g);
    }

    proptest! {
        #[test]
        fn binary_and_order_invariant(
            sent in proptest::collection::vec(0u8..4, 1..8),
            entries in proptest::collection::vec(proptest::collection::vec(0u8..4, 1..4), 0..6),
        ) {
            let word = |w: &u8| format!("w{w}");
            let tokens: Vec<String> = sent.iter().map(word).collect();
            let values: Vec<String> = entries
                .iter()
                .map(|e| e.iter().map(word).collect::<Vec<_>>().join(" "))
                .collect();
            let mut reversed = values.clone();
            reversed.reverse();
            let a = GazetteerFeaturizer::new([("G".to_string(), values)], 3).featurize(&tokens);
            let b = GazetteerFeaturizer::new([("G".to_string(), reversed)], 3).featurize(&tokens);
            prop_assert_eq!(&a, &b);
            prop_assert!(a.iter().all(|&x| x == 0.0 || x == 1.0));
        }
    }
}
