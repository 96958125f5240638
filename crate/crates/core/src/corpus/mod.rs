//! Annotated utterances and the featurization around them.

mod embeddings;
mod gazetteer;
mod iob;
mod labels;
mod vocab;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use embeddings::{load_pretrained_embeddings, PretrainedEmbeddings, PretrainedSource};
pub use gazetteer::GazetteerFeaturizer;
pub use iob::{decode_iob, encode_iob, is_valid_iob, repair_iob, DecodeMode, Span, Tag};
pub use labels::LabelSpace;
pub use vocab::Vocabulary;

use crate::{Error, Result};

/// Lowercased whitespace tokenization.
pub fn tokenize(text: &str) -> Result<Vec<String>> {
    let tokens: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
    if tokens.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(tokens)
}

/// Tokens with one intent label and one IOB tag per token.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawUtterance")]
pub struct AnnotatedUtterance {
    pub tokens: Vec<String>,
    pub intent: String,
    pub tags: Vec<Tag>,
}

#[derive(Deserialize)]
struct RawUtterance {
    tokens: Vec<String>,
    intent: String,
    tags: Vec<Tag>,
}

impl TryFrom<RawUtterance> for AnnotatedUtterance {
    type Error = Error;

    fn try_from(raw: RawUtterance) -> Result<Self> {
        AnnotatedUtterance::new(raw.tokens, raw.intent, raw.tags)
    }
}

impl AnnotatedUtterance {
    pub fn new(tokens: Vec<String>, intent: impl Into<String>, tags: Vec<Tag>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::EmptyInput);
        }
        if tokens.len() != tags.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} tokens but {} tags",
                tokens.len(),
                tags.len()
            )));
        }
        decode_iob(&tags, DecodeMode::Strict)?;
        Ok(AnnotatedUtterance {
            tokens,
            intent: intent.into(),
            tags,
        })
    }

    pub fn from_spans(tokens: Vec<String>, intent: impl Into<String>, spans: &[Span]) -> Result<Self> {
        let tags = encode_iob(tokens.len(), spans)?;
        AnnotatedUtterance::new(tokens, intent, tags)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn spans(&self) -> Vec<Span> {
        decode_iob(&self.tags, DecodeMode::Strict).expect("tags validated at construction")
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<AnnotatedUtterance>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

pub fn write_jsonl(path: impl AsRef<Path>, corpus: &[AnnotatedUtterance]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for utt in corpus {
        serde_json::to_writer(&mut w, utt)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_lowercases_and_splits() {
        assert_eq!(tokenize("Find a Recipe").unwrap(), ["find", "a", "recipe"]);
        assert_eq!(tokenize("hi").unwrap(), ["hi"]);
        assert!(matches!(tokenize("   "), Err(Error::EmptyInput)));
    }

    #[test]
    fn utterance_validates() {
        let toks = tokenize("play sting").unwrap();
        assert!(AnnotatedUtterance::new(toks.clone(), "Play", vec![Tag::O]).is_err());
        assert!(AnnotatedUtterance::new(toks.clone(), "Play", vec![Tag::O, Tag::I("A".into())]).is_err());
        let u = AnnotatedUtterance::new(toks, "Play", vec![Tag::O, Tag::B("A".into())]).unwrap();
        assert_eq!(u.spans(), vec![Span::new("A", 1, 1)]);
    }

    #[test]
    fn jsonl_line_shape() {
        let u = AnnotatedUtterance::from_spans(tokenize("find pasta").unwrap(), "Find", &[Span::new("Food", 1, 1)])
            .unwrap();
        let line = serde_json::to_string(&u).unwrap();
        assert_eq!(line, r#"{"tokens":["find","pasta"],"intent":"Find","tags":["O","B-Food"]}"#);
        let back: AnnotatedUtterance = serde_json::from_str(&line).unwrap();
        assert_eq!(back, u);
        let bad = r#"{"tokens":["a"],"intent":"X","tags":["I-Food"]}"#;
        assert!(serde_json::from_str::<AnnotatedUtterance>(bad).is_err());
    }
}
