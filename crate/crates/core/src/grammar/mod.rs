//! Domain grammars: intents, slots with gazetteers, and carrier phrases that
//! are sampled into synthetic training corpora.

mod synth;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{decode_iob, AnnotatedUtterance, DecodeMode, Span};
use crate::{Error, Result};

pub use synth::{synth_benchmark_domain, DomainBlueprint, DomainStats, FUNCTION_WORDS, SLOT_MARKERS};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotType {
    pub name: String,
    pub gazetteer: Vec<String>,
}

impl SlotType {
    fn value_tokens(&self, index: usize) -> Vec<String> {
        self.gazetteer[index].split_whitespace().map(str::to_lowercase).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TemplateElement {
    Literal(String),
    Slot(String),
}

/// An utterance skeleton with slot values abstracted into placeholders, e.g.
/// `find a recipe for {FoodItem}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CarrierPhrase {
    pub intent: String,
    pub template: Vec<TemplateElement>,
}

impl CarrierPhrase {
    /// Parses a whitespace-tokenized template where `{Name}` marks a slot.
    pub fn parse(intent: impl Into<String>, template: &str) -> Result<Self> {
        let mut elements = Vec::new();
        for tok in template.split_whitespace() {
            if let Some(name) = tok.strip_prefix('{').and_then(|t| t.strip_suffix('}')) {
                if name.is_empty() || name.contains(['{', '}']) {
                    return Err(Error::InvalidSpec(format!("bad placeholder `{tok}`")));
                }
                elements.push(TemplateElement::Slot(name.to_string()));
            } else if tok.contains(['{', '}']) {
                return Err(Error::InvalidSpec(format!("bad placeholder `{tok}`")));
            } else {
                elements.push(TemplateElement::Literal(tok.to_lowercase()));
            }
        }
        let intent = intent.into();
        if elements.is_empty() {
            return Err(Error::InvalidSpec(format!("empty template for intent `{intent}`")));
        }
        Ok(CarrierPhrase {
            intent,
            template: elements,
        })
    }

    pub fn slots(&self) -> impl Iterator<Item = &str> {
        self.template.iter().filter_map(|e| match e {
            TemplateElement::Slot(s) => Some(s.as_str()),
            TemplateElement::Literal(_) => None,
        })
    }

    /// The template with every placeholder name replaced by `_`, for
    /// comparisons that ignore slot naming.
    pub fn shape(&self) -> String {
        self.template
            .iter()
            .map(|e| match e {
                TemplateElement::Literal(w) => w.as_str(),
                TemplateElement::Slot(_) => "{_}",
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for CarrierPhrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.template.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match e {
                TemplateElement::Literal(w) => f.write_str(w)?,
                TemplateElement::Slot(s) => write!(f, "{{{s}}}")?,
            }
        }
        Ok(())
    }
}

/// A domain grammar. Serialized as
/// `{name, intents[], slots[{name, gazetteer[]}], phrases[{intent, template}]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DomainDocument", into = "DomainDocument")]
pub struct DomainSpec {
    pub name: String,
    pub intents: Vec<String>,
    pub slot_types: Vec<SlotType>,
    pub carrier_phrases: Vec<CarrierPhrase>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainDocument {
    name: String,
    intents: Vec<String>,
    #[serde(default)]
    slots: Vec<SlotType>,
    phrases: Vec<PhraseDocument>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhraseDocument {
    intent: String,
    template: String,
}

impl TryFrom<DomainDocument> for DomainSpec {
    type Error = Error;

    fn try_from(doc: DomainDocument) -> Result<Self> {
        let phrases = doc
            .phrases
            .iter()
            .map(|p| CarrierPhrase::parse(p.intent.clone(), &p.template))
            .collect::<Result<Vec<_>>>()?;
        let spec = DomainSpec {
            name: doc.name,
            intents: doc.intents,
            slot_types: doc.slots,
            carrier_phrases: phrases,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<DomainSpec> for DomainDocument {
    fn from(spec: DomainSpec) -> Self {
        DomainDocument {
            name: spec.name,
            intents: spec.intents,
            slots: spec.slot_types,
            phrases: spec
                .carrier_phrases
                .iter()
                .map(|p| PhraseDocument {
                    intent: p.intent.clone(),
                    template: p.to_string(),
                })
                .collect(),
        }
    }
}

/// Non-fatal findings from parsing a domain spec.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpecWarning {
    EmptyGazetteer(String),
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.intents.is_empty() {
            return Err(Error::InvalidSpec("a domain needs at least one intent".into()));
        }
        if self.carrier_phrases.is_empty() {
            return Err(Error::InvalidSpec("a domain needs at least one carrier phrase".into()));
        }
        let mut intents = HashSet::new();
        for i in &self.intents {
            if !intents.insert(i.as_str()) {
                return Err(Error::DuplicateIntent(i.clone()));
            }
        }
        let mut slots = HashSet::new();
        for s in &self.slot_types {
            if !slots.insert(s.name.as_str()) {
                return Err(Error::DuplicateSlot(s.name.clone()));
            }
            let mut seen = HashSet::new();
            for v in &s.gazetteer {
                let norm: Vec<String> = v.split_whitespace().map(str::to_lowercase).collect();
                if norm.is_empty() {
                    return Err(Error::InvalidSpec(format!("empty value in gazetteer `{}`", s.name)));
                }
                if !seen.insert(norm) {
                    return Err(Error::DuplicateGazetteerValue {
                        slot: s.name.clone(),
                        value: v.clone(),
                    });
                }
            }
        }
        for p in &self.carrier_phrases {
            if !intents.contains(p.intent.as_str()) {
                return Err(Error::UnknownIntent(p.intent.clone()));
            }
            for s in p.slots() {
                if !slots.contains(s) {
                    return Err(Error::UnknownSlotReference {
                        intent: p.intent.clone(),
                        slot: s.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<SpecWarning> {
        self.slot_types
            .iter()
            .filter(|s| s.gazetteer.is_empty())
            .map(|s| SpecWarning::EmptyGazetteer(s.name.clone()))
            .collect()
    }

    /// Featurizer over this domain's gazetteers, one feature per slot type.
    pub fn gazetteer_featurizer(&self) -> crate::corpus::GazetteerFeaturizer {
        crate::corpus::GazetteerFeaturizer::new(
            self.slot_types.iter().map(|s| (s.name.clone(), s.gazetteer.clone())),
            crate::corpus::GazetteerFeaturizer::DEFAULT_MAX_NGRAM,
        )
    }

    pub fn slot(&self, name: &str) -> Option<&SlotType> {
        self.slot_types.iter().find(|s| s.name == name)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(parse_domain_spec(&text)?.0)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Parses and validates a domain-spec JSON document. Empty gazetteers are
/// allowed but reported.
pub fn parse_domain_spec(document: &str) -> Result<(DomainSpec, Vec<SpecWarning>)> {
    let doc: DomainDocument = serde_json::from_str(document)?;
    let spec = DomainSpec::try_from(doc)?;
    let warnings = spec.warnings();
    for w in &warnings {
        log::warn!("domain `{}`: {w:?}", spec.name);
    }
    Ok((spec, warnings))
}

/// Replaces every maximal tagged span with a placeholder for its slot type.
pub fn extract_carrier_phrase(utt: &AnnotatedUtterance, mode: DecodeMode) -> Result<CarrierPhrase> {
    let spans = decode_iob(&utt.tags, mode)?;
    let mut template = Vec::new();
    let mut spans = spans.iter().peekable();
    let mut t = 0;
    while t < utt.tokens.len() {
        match spans.peek() {
            Some(span) if span.start == t => {
                template.push(TemplateElement::Slot(span.slot.clone()));
                t = span.end + 1;
                spans.next();
            }
            _ => {
                template.push(TemplateElement::Literal(utt.tokens[t].clone()));
                t += 1;
            }
        }
    }
    Ok(CarrierPhrase {
        intent: utt.intent.clone(),
        template,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub sample_count: usize,
    pub rng_seed: u64,
    pub allow_repetitions: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sample_count: 50_000,
            rng_seed: 0,
            allow_repetitions: true,
        }
    }
}

impl SynthConfig {
    pub fn new(sample_count: usize, rng_seed: u64) -> Self {
        SynthConfig {
            sample_count,
            rng_seed,
            ..SynthConfig::default()
        }
    }
}

/// Realizes one carrier phrase with the given gazetteer value index per slot
/// placeholder.
fn realize(spec: &DomainSpec, phrase: &CarrierPhrase, mut pick: impl FnMut(&SlotType) -> Result<usize>) -> Result<AnnotatedUtterance> {
    let mut tokens = Vec::new();
    let mut spans = Vec::new();
    for e in &phrase.template {
        match e {
            TemplateElement::Literal(w) => tokens.push(w.clone()),
            TemplateElement::Slot(name) => {
                let slot = spec.slot(name).ok_or_else(|| Error::UnknownSlotReference {
                    intent: phrase.intent.clone(),
                    slot: name.clone(),
                })?;
                let value = slot.value_tokens(pick(slot)?);
                spans.push(Span::new(name.clone(), tokens.len(), tokens.len() + value.len() - 1));
                tokens.extend(value);
            }
        }
    }
    AnnotatedUtterance::from_spans(tokens, phrase.intent.clone(), &spans)
}

/// Samples `cfg.sample_count` utterances: a carrier phrase uniformly, then each
/// placeholder's value uniformly from its gazetteer.
pub fn sample_corpus(spec: &DomainSpec, cfg: &SynthConfig) -> Result<Vec<AnnotatedUtterance>> {
    if cfg.sample_count == 0 {
        return Err(Error::InvalidSpec("sample_count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut out = Vec::with_capacity(cfg.sample_count);
    for _ in 0..cfg.sample_count {
        let phrase = &spec.carrier_phrases[rng.gen_range(0..spec.carrier_phrases.len())];
        let utt = realize(spec, phrase, |slot| {
            if slot.gazetteer.is_empty() {
                return Err(Error::EmptyGazetteerUsed(slot.name.clone()));
            }
            Ok(rng.gen_range(0..slot.gazetteer.len()))
        })?;
        out.push(utt);
    }
    if !cfg.allow_repetitions {
        let mut seen = HashSet::new();
        out.retain(|u| seen.insert(u.clone()));
        if out.len() < cfg.sample_count {
            log::warn!(
                "domain `{}`: only {} distinct utterances of {} requested",
                spec.name,
                out.len(),
                cfg.sample_count
            );
        }
    }
    Ok(out)
}
