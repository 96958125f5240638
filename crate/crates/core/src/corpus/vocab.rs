use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";

/// Dense token index. Index 0 is padding and index 1 is the unknown token.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "VocabRecord", into = "VocabRecord")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    min_count: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabRecord {
    tokens: Vec<String>,
    min_count: usize,
}

impl From<VocabRecord> for Vocabulary {
    fn from(r: VocabRecord) -> Self {
        let index = r.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            tokens: r.tokens,
            index,
            min_count: r.min_count,
        }
    }
}

impl From<Vocabulary> for VocabRecord {
    fn from(v: Vocabulary) -> Self {
        VocabRecord {
            tokens: v.tokens,
            min_count: v.min_count,
        }
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens && self.min_count == other.min_count
    }
}

impl Vocabulary {
    pub const PAD_INDEX: usize = 0;
    pub const UNK_INDEX: usize = 1;

    /// Indexes every token seen at least `min_count` times, in order of first
    /// appearance.
    pub fn build<'a, S, T>(sentences: S, min_count: usize) -> Self
    where
        S: IntoIterator<Item = T>,
        T: IntoIterator<Item = &'a String>,
    {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        let mut order: Vec<&str> = Vec::new();
        for sentence in sentences {
            for tok in sentence {
                let c = counts.entry(tok.as_str()).or_insert(0);
                if *c == 0 {
                    order.push(tok.as_str());
                }
                *c += 1;
            }
        }
        let mut vocab = Vocabulary {
            tokens: Vec::new(),
            index: HashMap::new(),
            min_count,
        };
        vocab.push(PAD);
        vocab.push(UNK);
        for tok in order {
            if counts[tok] >= min_count.max(1) {
                vocab.push(tok);
            }
        }
        vocab
    }

    fn push(&mut self, tok: &str) -> bool {
        if self.index.contains_key(tok) {
            return false;
        }
        self.index.insert(tok.to_string(), self.tokens.len());
        self.tokens.push(tok.to_string());
        true
    }

    /// Appends unseen tokens after the existing ones; existing indices are kept.
    /// Returns how many tokens were added.
    pub fn extend<'a>(&mut self, tokens: impl IntoIterator<Item = &'a String>) -> usize {
        tokens.into_iter().filter(|t| self.push(t)).count()
    }

    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(Self::UNK_INDEX)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }
}
