//! IOB slot tags and span conversion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One IOB tag. Serialized as `O`, `B-<slot>` or `I-<slot>`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Tag {
    O,
    B(String),
    I(String),
}

impl Tag {
    pub fn slot(&self) -> Option<&str> {
        match self {
            Tag::O => None,
            Tag::B(s) | Tag::I(s) => Some(s),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::B(s) => write!(f, "B-{s}"),
            Tag::I(s) => write!(f, "I-{s}"),
        }
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(Tag::O);
        }
        match s.split_at_checked(2) {
            Some(("B-", rest)) if !rest.is_empty() => Ok(Tag::B(rest.to_string())),
            Some(("I-", rest)) if !rest.is_empty() => Ok(Tag::I(rest.to_string())),
            _ => Err(Error::InvalidTag(s.to_string())),
        }
    }
}

impl TryFrom<String> for Tag {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Tag> for String {
    fn from(t: Tag) -> String {
        t.to_string()
    }
}

/// A labelled token span, `end` inclusive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub slot: String,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(slot: impl Into<String>, start: usize, end: usize) -> Self {
        Span {
            slot: slot.into(),
            start,
            end,
        }
    }
}

/// How `decode_iob` treats an `I-X` that does not continue a span of type `X`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeMode {
    /// Orphan `I-X` is an error.
    Strict,
    /// Orphan `I-X` opens a new span, as if it were `B-X`.
    Lenient,
}

pub fn encode_iob(len: usize, spans: &[Span]) -> Result<Vec<Tag>> {
    let mut tags = vec![Tag::O; len];
    let mut taken = vec![false; len];
    for span in spans {
        if span.start > span.end || span.end >= len {
            return Err(Error::SpanOutOfBounds {
                start: span.start,
                end: span.end,
                len,
            });
        }
        for t in span.start..=span.end {
            if taken[t] {
                return Err(Error::OverlappingSpans(t));
            }
            taken[t] = true;
            tags[t] = if t == span.start {
                Tag::B(span.slot.clone())
            } else {
                Tag::I(span.slot.clone())
            };
        }
    }
    Ok(tags)
}

pub fn decode_iob(tags: &[Tag], mode: DecodeMode) -> Result<Vec<Span>> {
    let mut spans: Vec<Span> = Vec::new();
    let mut open = false;
    for (t, tag) in tags.iter().enumerate() {
        match tag {
            Tag::O => open = false,
            Tag::B(slot) => {
                spans.push(Span::new(slot.clone(), t, t));
                open = true;
            }
            Tag::I(slot) => {
                let continues = open && spans.last().is_some_and(|s| &s.slot == slot);
                if continues {
                    spans.last_mut().unwrap().end = t;
                } else {
                    if mode == DecodeMode::Strict {
                        return Err(Error::InvalidIob {
                            position: t,
                            reason: format!("I-{slot} does not continue a {slot} span"),
                        });
                    }
                    spans.push(Span::new(slot.clone(), t, t));
                    open = true;
                }
            }
        }
    }
    Ok(spans)
}

pub fn is_valid_iob(tags: &[Tag]) -> bool {
    decode_iob(tags, DecodeMode::Strict).is_ok()
}

/// Rewrites orphan `I-X` tags to `B-X`, producing a valid sequence with the
/// same lenient span reading.
pub fn repair_iob(tags: &[Tag]) -> Vec<Tag> {
    let spans = decode_iob(tags, DecodeMode::Lenient).expect("lenient decode is total");
    encode_iob(tags.len(), &spans).expect("decoded spans are disjoint and in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(s: &str) -> Vec<Tag> {
        s.split_whitespace().map(|t| t.parse().unwrap()).collect()
    }

    #[test]
    fn encode_marks_begin_and_inside() {
        let out = encode_iob(6, &[Span::new("FoodItem", 4, 5)]).unwrap();
        assert_eq!(out, tags("O O O O B-FoodItem I-FoodItem"));
        assert_eq!(encode_iob(3, &[]).unwrap(), tags("O O O"));
    }

    #[test]
    fn encode_rejects_overlap_and_out_of_bounds() {
        let err = encode_iob(4, &[Span::new("A", 0, 1), Span::new("B", 1, 2)]).unwrap_err();
        assert!(matches!(err, Error::OverlappingSpans(1)));
        let err = encode_iob(2, &[Span::new("A", 1, 2)]).unwrap_err();
        assert!(matches!(err, Error::SpanOutOfBounds { .. }));
    }

    #[test]
    fn decode_examples() {
        let strict = DecodeMode::Strict;
        assert_eq!(decode_iob(&tags("O B-X I-X O"), strict).unwrap(), vec![Span::new("X", 1, 2)]);
        assert!(decode_iob(&tags("O O"), strict).unwrap().is_empty());
        assert!(decode_iob(&tags("O I-X O"), strict).is_err());
        assert_eq!(
            decode_iob(&tags("O I-X O"), DecodeMode::Lenient).unwrap(),
            vec![Span::new("X", 1, 1)]
        );
        // adjacent B tags are separate spans
        assert_eq!(
            decode_iob(&tags("B-X B-X"), strict).unwrap(),
            vec![Span::new("X", 0, 0), Span::new("X", 1, 1)]
        );
    }

    #[test]
    fn mismatched_inside_is_orphan() {
        assert!(decode_iob(&tags("B-X I-Y"), DecodeMode::Strict).is_err());
        assert_eq!(repair_iob(&tags("B-X I-Y I-Y")), tags("B-X B-Y I-Y"));
    }

    #[test]
    fn tag_parsing() {
        assert_eq!("B-Food".parse::<Tag>().unwrap(), Tag::B("Food".into()));
        assert!("B-".parse::<Tag>().is_err());
        assert!("X".parse::<Tag>().is_err());
        assert_eq!(serde_json::to_string(&Tag::I("A".into())).unwrap(), "\"I-A\"");
    }
}
