use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{AnnotatedUtterance, Tag};
use crate::{Error, Result};

/// Ordered intent labels and slot tags. `O` is always slot tag 0, followed by
/// `B-X`, `I-X` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "LabelManifest", into = "LabelManifest")]
pub struct LabelSpace {
    intents: Vec<String>,
    slot_tags: Vec<Tag>,
    intent_index: HashMap<String, usize>,
    tag_index: HashMap<Tag, usize>,
}

/// On-disk form of a label space: `{intents[], slot_tags[]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelManifest {
    pub intents: Vec<String>,
    pub slot_tags: Vec<Tag>,
}

impl PartialEq for LabelSpace {
    fn eq(&self, other: &Self) -> bool {
        self.intents == other.intents && self.slot_tags == other.slot_tags
    }
}

impl LabelSpace {
    /// Builds a label space with intents in the given order and slot types in
    /// the given order.
    pub fn new<I, S>(intents: I, slots: S) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<String>,
        S: IntoIterator,
        S::Item: Into<String>,
    {
        let mut slot_tags = vec![Tag::O];
        for s in slots {
            let s = s.into();
            slot_tags.push(Tag::B(s.clone()));
            slot_tags.push(Tag::I(s));
        }
        LabelSpace::from_manifest(LabelManifest {
            intents: intents.into_iter().map(Into::into).collect(),
            slot_tags,
        })
    }

    /// Sorted intents and slot types observed in a corpus.
    pub fn from_corpus<'a>(corpus: impl IntoIterator<Item = &'a AnnotatedUtterance>) -> Result<Self> {
        let mut intents = BTreeSet::new();
        let mut slots = BTreeSet::new();
        for u in corpus {
            intents.insert(u.intent.clone());
            slots.extend(u.tags.iter().filter_map(|t| t.slot().map(str::to_string)));
        }
        LabelSpace::new(intents, slots)
    }

    pub fn from_manifest(m: LabelManifest) -> Result<Self> {
        if m.slot_tags.first() != Some(&Tag::O) {
            return Err(Error::InvalidSpec("slot tag 0 must be O".into()));
        }
        let mut intent_index = HashMap::new();
        for (i, name) in m.intents.iter().enumerate() {
            if intent_index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateIntent(name.clone()));
            }
        }
        let mut tag_index = HashMap::new();
        for (i, tag) in m.slot_tags.iter().enumerate() {
            if tag_index.insert(tag.clone(), i).is_some() {
                return Err(Error::InvalidSpec(format!("duplicate slot tag {tag}")));
            }
        }
        for tag in &m.slot_tags {
            let twin = match tag {
                Tag::O => continue,
                Tag::B(s) => Tag::I(s.clone()),
                Tag::I(s) => Tag::B(s.clone()),
            };
            if !tag_index.contains_key(&twin) {
                return Err(Error::InvalidSpec(format!("{tag} present without {twin}")));
            }
        }
        Ok(LabelSpace {
            intents: m.intents,
            slot_tags: m.slot_tags,
            intent_index,
            tag_index,
        })
    }

    pub fn manifest(&self) -> LabelManifest {
        LabelManifest {
            intents: self.intents.clone(),
            slot_tags: self.slot_tags.clone(),
        }
    }

    pub fn intents(&self) -> &[String] {
        &self.intents
    }

    pub fn slot_tags(&self) -> &[Tag] {
        &self.slot_tags
    }

    pub fn num_intents(&self) -> usize {
        self.intents.len()
    }

    pub fn num_tags(&self) -> usize {
        self.slot_tags.len()
    }

    pub fn intent_index(&self, intent: &str) -> Result<usize> {
        self.intent_index
            .get(intent)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(intent.to_string()))
    }

    pub fn tag_index(&self, tag: &Tag) -> Result<usize> {
        self.tag_index
            .get(tag)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(tag.to_string()))
    }

    pub fn intent(&self, index: usize) -> &str {
        &self.intents[index]
    }

    pub fn tag(&self, index: usize) -> &Tag {
        &self.slot_tags[index]
    }

    /// Intent and tag indices for an utterance.
    pub fn encode(&self, utt: &AnnotatedUtterance) -> Result<(usize, Vec<usize>)> {
        let intent = self.intent_index(&utt.intent)?;
        let tags = utt.tags.iter().map(|t| self.tag_index(t)).collect::<Result<_>>()?;
        Ok((intent, tags))
    }

    /// Fails with `LabelSpaceMismatch` naming the first label the corpus uses
    /// that this space lacks.
    pub fn check_covers(&self, corpus: &[AnnotatedUtterance]) -> Result<()> {
        for u in corpus {
            if let Err(Error::UnknownLabel(l)) = self.encode(u) {
                return Err(Error::LabelSpaceMismatch(l));
            }
        }
        Ok(())
    }
}

impl TryFrom<LabelManifest> for LabelSpace {
    type Error = Error;

    fn try_from(m: LabelManifest) -> Result<Self> {
        LabelSpace::from_manifest(m)
    }
}

impl From<LabelSpace> for LabelManifest {
    fn from(l: LabelSpace) -> Self {
        l.manifest()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn o_first_and_pairs() {
        let l = LabelSpace::new(["Play", "Stop"], ["Artist"]).unwrap();
        assert_eq!(l.num_tags(), 3);
        assert_eq!(l.tag(0), &Tag::O);
        assert_eq!(l.tag_index(&Tag::I("Artist".into())).unwrap(), 2);
        assert_eq!(l.intent_index("Stop").unwrap(), 1);
        assert!(matches!(l.intent_index("Nope"), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn manifest_requires_pairs() {
        let m = LabelManifest {
            intents: vec!["A".into()],
            slot_tags: vec![Tag::O, Tag::B("X".into())],
        };
        assert!(LabelSpace::from_manifest(m).is_err());
        let json = r#"{"intents":["A"],"slot_tags":["O","B-X","I-X"]}"#;
        let l: LabelSpace = serde_json::from_str(json).unwrap();
        assert_eq!(serde_json::to_string(&l).unwrap(), json);
    }
}
