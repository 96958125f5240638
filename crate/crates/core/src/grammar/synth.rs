//! Random domain grammars with controlled lexicons, used to build synthetic
//! source/target benchmarks.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CarrierPhrase, DomainSpec, SlotType, TemplateElement};
use crate::{Error, Result};

/// Closed-class words shared by every synthetic domain.
pub const FUNCTION_WORDS: [&str; 200] = [
    "a", "an", "the", "this", "that", "these", "those", "my", "your", "our", "their", "his",
    "her", "its", "some", "any", "every", "each", "all", "both", "either", "no", "i", "you",
    "we", "they", "he", "she", "it", "me", "us", "them", "him", "am", "is", "are", "was",
    "were", "be", "been", "being", "do", "does", "did", "have", "has", "had", "can",
    "could", "will", "would", "should", "may", "might", "must", "to", "for", "from", "with",
    "by", "about", "on", "at", "in", "near", "after", "before", "into", "of", "under",
    "over", "during", "until", "like", "called", "and", "or", "but", "if", "then", "so",
    "because", "while", "when", "where", "what", "which", "who", "whose", "how", "why",
    "not", "just", "also", "only", "very", "too", "really", "please", "now", "today",
    "tonight", "tomorrow", "yesterday", "later", "soon", "again", "still", "already", "up",
    "down", "out", "off", "away", "back", "here", "there", "around", "through", "across",
    "along", "between", "among", "against", "toward", "upon", "within", "without", "let",
    "let's", "want", "need", "love", "get", "give", "show", "tell", "find", "play", "set",
    "make", "take", "put", "turn", "open", "start", "stop", "check", "more", "most", "less",
    "much", "many", "few", "little", "lot", "lots", "one", "two", "three", "first", "last",
    "next", "new", "old", "other", "another", "same", "own", "i'm", "you're", "it's",
    "that's", "what's", "there's", "don't", "can't", "won't", "okay", "yes", "yeah", "hey",
    "hi", "hello", "thanks", "thank", "oh", "well", "right", "sure", "maybe", "something",
    "anything", "nothing", "everything", "someone", "anyone", "everyone", "somewhere",
    "anywhere",
];

/// Function words that introduce a slot value.
pub const SLOT_MARKERS: [&str; 16] = [
    "for", "to", "from", "with", "by", "about", "on", "at", "in", "near", "after", "before", "into", "of",
    "during", "called",
];

const PREFIXES: [&[&str]; 8] = [
    &["please"],
    &["can", "you"],
    &["i", "want", "to"],
    &["would", "you"],
    &["let's"],
    &["i", "need", "to"],
    &["hey"],
    &["could", "you", "please"],
];
const SUFFIXES: [&str; 5] = ["please", "now", "today", "again", "thanks"];
const DETERMINERS: [&str; 5] = ["the", "my", "some", "a", "this"];
const FILLERS_PER_DOMAIN: usize = 8;

/// Size of a domain grammar. Defaults are the medians observed for developer
/// defined custom domains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainStats {
    pub num_intents: usize,
    pub num_slots: usize,
    pub gazetteer_size: usize,
    pub num_example_phrases: usize,
}

impl Default for DomainStats {
    fn default() -> Self {
        DomainStats::CUSTOM_MEDIAN
    }
}

impl DomainStats {
    pub const CUSTOM_MEDIAN: DomainStats = DomainStats {
        num_intents: 3,
        num_slots: 1,
        gazetteer_size: 11,
        num_example_phrases: 42,
    };

    pub fn validate(&self) -> Result<()> {
        if self.num_intents == 0 || self.num_slots == 0 || self.gazetteer_size == 0 || self.num_example_phrases == 0 {
            return Err(Error::InvalidSpec(format!("domain stats must all be >= 1: {self:?}")));
        }
        Ok(())
    }
}

/// Content words of a synthetic domain. Two domains built from the same
/// lexicon use the same words for the same roles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct Lexicon {
    cue_groups: Vec<Vec<String>>,
    fillers: Vec<String>,
    markers: Vec<String>,
    gazetteers: Vec<Vec<String>>,
}

impl Lexicon {
    fn generate(tag: &str, stats: &DomainStats, rng: &mut ChaCha8Rng) -> Lexicon {
        let mut next_word = 0;
        let mut word = |prefix: &str| {
            next_word += 1;
            format!("{prefix}_{tag}_{}", next_word - 1)
        };
        let cue_groups = (0..stats.num_intents).map(|_| vec![word("w"), word("w")]).collect();
        let fillers = (0..FILLERS_PER_DOMAIN).map(|_| word("w")).collect();

        let mut markers: Vec<&str> = SLOT_MARKERS.to_vec();
        markers.shuffle(rng);
        let markers = (0..stats.num_slots)
            .map(|k| markers[k % markers.len()].to_string())
            .collect();

        let mut value_counter = 0;
        let gazetteers = (0..stats.num_slots)
            .map(|_| {
                let pool: Vec<String> = (0..stats.gazetteer_size)
                    .map(|_| {
                        value_counter += 1;
                        format!("val_{tag}_{}", value_counter - 1)
                    })
                    .collect();
                gazetteer_from_pool(&pool, stats.gazetteer_size, rng)
            })
            .collect();
        Lexicon {
            cue_groups,
            fillers,
            markers,
            gazetteers,
        }
    }
}

/// `size` distinct values: mostly single pool words, plus two-word values when
/// the gazetteer is large enough.
fn gazetteer_from_pool(pool: &[String], size: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let pairs = if size >= 3 { size * 2 / 5 } else { 0 };
    let mut values: Vec<String> = pool[..size - pairs].to_vec();
    let mut seen: HashSet<String> = values.iter().cloned().collect();
    while values.len() < size {
        let a = &pool[rng.gen_range(0..pool.len())];
        let b = &pool[rng.gen_range(0..pool.len())];
        if a == b {
            continue;
        }
        let v = format!("{a} {b}");
        if seen.insert(v.clone()) {
            values.push(v);
        }
    }
    values
}

/// A synthetic domain with the generative rules behind its carrier phrases,
/// so that more phrases of the same domain can be drawn later (for held-out
/// test sets).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainBlueprint {
    pub name: String,
    pub stats: DomainStats,
    /// Name of the domain whose lexicon this one uses (its own name if none).
    pub lexicon_of: String,
    intents: Vec<String>,
    slots: Vec<String>,
    lexicon: Lexicon,
    spec: DomainSpec,
}

impl DomainBlueprint {
    /// A domain named `d<seed>` with its own lexicon.
    pub fn generate(stats: DomainStats, seed: u64) -> Result<Self> {
        stats.validate()?;
        let name = format!("d{seed}");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lexicon = Lexicon::generate(&name, &stats, &mut rng);
        Self::assemble(name.clone(), name, stats, lexicon, &mut rng)
    }

    /// A domain named `t<seed>` that reuses `parent`'s words: the same cue
    /// words per intent position, fillers, slot markers and gazetteers.
    pub fn sharing_lexicon(parent: &DomainBlueprint, stats: DomainStats, seed: u64) -> Result<Self> {
        stats.validate()?;
        if stats.num_intents > parent.stats.num_intents || stats.num_slots > parent.stats.num_slots {
            return Err(Error::InvalidSpec(format!(
                "domain sharing the lexicon of `{}` cannot have more intents or slots than it",
                parent.name
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5a4e);
        let lexicon = Lexicon {
            cue_groups: parent.lexicon.cue_groups[..stats.num_intents].to_vec(),
            fillers: parent.lexicon.fillers.clone(),
            markers: parent.lexicon.markers[..stats.num_slots].to_vec(),
            gazetteers: parent.lexicon.gazetteers[..stats.num_slots].to_vec(),
        };
        Self::assemble(format!("t{seed}"), parent.lexicon_of.clone(), stats, lexicon, &mut rng)
    }

    fn assemble(name: String, lexicon_of: String, stats: DomainStats, lexicon: Lexicon, rng: &mut ChaCha8Rng) -> Result<Self> {
        let cap = |s: &str| {
            let mut c = s.chars();
            c.next().map(|f| f.to_uppercase().chain(c).collect::<String>()).unwrap_or_default()
        };
        let intents: Vec<String> = (0..stats.num_intents).map(|k| format!("{}Intent{k}", cap(&name))).collect();
        let slots: Vec<String> = (0..stats.num_slots).map(|k| format!("{}Slot{k}", cap(&name))).collect();
        let mut bp = DomainBlueprint {
            name: name.clone(),
            stats,
            lexicon_of,
            intents: intents.clone(),
            slots: slots.clone(),
            spec: DomainSpec {
                name,
                intents,
                slot_types: slots
                    .iter()
                    .zip(&lexicon.gazetteers)
                    .map(|(n, g)| SlotType {
                        name: n.clone(),
                        gazetteer: g.clone(),
                    })
                    .collect(),
                carrier_phrases: Vec::new(),
            },
            lexicon,
        };
        bp.spec.carrier_phrases = bp.draw_phrases(stats.num_example_phrases, &HashSet::new(), rng);
        bp.spec.validate()?;
        Ok(bp)
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn into_spec(self) -> DomainSpec {
        self.spec
    }

    /// All words the domain's grammar can emit outside the shared function
    /// words.
    pub fn content_words(&self) -> HashSet<String> {
        let l = &self.lexicon;
        l.cue_groups
            .iter()
            .flatten()
            .chain(&l.fillers)
            .cloned()
            .chain(l.gazetteers.iter().flatten().flat_map(|v| v.split_whitespace().map(String::from)))
            .collect()
    }

    /// The same domain with `count` freshly drawn carrier phrases, none equal
    /// to a phrase of the original grammar (when the phrase space allows).
    pub fn held_out_spec(&self, count: usize, seed: u64) -> DomainSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x401d_0u64);
        let exclude: HashSet<CarrierPhrase> = self.spec.carrier_phrases.iter().cloned().collect();
        DomainSpec {
            carrier_phrases: self.draw_phrases(count, &exclude, &mut rng),
            ..self.spec.clone()
        }
    }

    fn draw_phrases(&self, count: usize, exclude: &HashSet<CarrierPhrase>, rng: &mut ChaCha8Rng) -> Vec<CarrierPhrase> {
        let mut phrases = Vec::with_capacity(count);
        let mut seen = exclude.clone();
        let mut attempts = 0;
        while phrases.len() < count {
            let intent = phrases.len() % self.intents.len();
            let p = self.draw_phrase(intent, rng);
            attempts += 1;
            if seen.insert(p.clone()) || attempts > 200 * count {
                phrases.push(p);
            }
        }
        phrases
    }

    fn draw_phrase(&self, intent: usize, rng: &mut ChaCha8Rng) -> CarrierPhrase {
        let lit = |w: &str| TemplateElement::Literal(w.to_string());
        let l = &self.lexicon;
        let mut head = Vec::new();
        if rng.gen_bool(0.5) {
            head.extend(PREFIXES[rng.gen_range(0..PREFIXES.len())].iter().map(|w| lit(w)));
        }
        let cues = &l.cue_groups[intent];
        head.push(lit(&cues[rng.gen_range(0..cues.len())]));

        let mut segments: Vec<Vec<TemplateElement>> = Vec::new();
        if rng.gen_bool(0.4) {
            segments.push(vec![
                lit(DETERMINERS[rng.gen_range(0..DETERMINERS.len())]),
                lit(&l.fillers[rng.gen_range(0..l.fillers.len())]),
            ]);
        }
        for (k, slot) in self.slots.iter().enumerate() {
            if rng.gen_bool(0.7) {
                let mut seg = vec![lit(&l.markers[k])];
                if rng.gen_bool(0.3) {
                    seg.push(lit(DETERMINERS[rng.gen_range(0..DETERMINERS.len())]));
                }
                seg.push(TemplateElement::Slot(slot.clone()));
                segments.push(seg);
            }
        }
        segments.shuffle(rng);
        let mut template = head;
        template.extend(segments.into_iter().flatten());
        if rng.gen_bool(0.2) {
            template.push(lit(SUFFIXES[rng.gen_range(0..SUFFIXES.len())]));
        }
        CarrierPhrase {
            intent: self.intents[intent].clone(),
            template,
        }
    }
}

/// A random domain grammar with exactly the requested counts, deterministic
/// in `seed`. Different seeds share only the function words.
pub fn synth_benchmark_domain(stats: DomainStats, seed: u64) -> Result<DomainSpec> {
    Ok(DomainBlueprint::generate(stats, seed)?.into_spec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{sample_corpus, SynthConfig};

    #[test]
    fn function_words_are_distinct() {
        let set: HashSet<&str> = FUNCTION_WORDS.iter().copied().collect();
        assert_eq!(set.len(), 200);
        assert!(SLOT_MARKERS.iter().all(|m| set.contains(m)));
        assert!(PREFIXES.iter().flat_map(|p| p.iter()).all(|w| set.contains(w)));
        assert!(SUFFIXES.iter().chain(&DETERMINERS).all(|w| set.contains(w)));
    }

    #[test]
    fn custom_median_counts() {
        let spec = synth_benchmark_domain(DomainStats::CUSTOM_MEDIAN, 1).unwrap();
        assert_eq!(spec.intents.len(), 3);
        assert_eq!(spec.slot_types.len(), 1);
        assert_eq!(spec.slot_types[0].gazetteer.len(), 11);
        assert_eq!(spec.carrier_phrases.len(), 42);
        let distinct: HashSet<_> = spec.carrier_phrases.iter().collect();
        assert_eq!(distinct.len(), 42);
    }

    #[test]
    fn minimal_stats() {
        let stats = DomainStats {
            num_intents: 1,
            num_slots: 1,
            gazetteer_size: 1,
            num_example_phrases: 1,
        };
        let spec = synth_benchmark_domain(stats, 9).unwrap();
        assert_eq!(
            (spec.intents.len(), spec.slot_types.len(), spec.slot_types[0].gazetteer.len(), spec.carrier_phrases.len()),
            (1, 1, 1, 1)
        );
        assert!(synth_benchmark_domain(DomainStats { num_slots: 0, ..stats }, 9).is_err());
    }

    #[test]
    fn seeds_give_disjoint_domains() {
        let a = DomainBlueprint::generate(DomainStats::default(), 1).unwrap();
        let b = DomainBlueprint::generate(DomainStats::default(), 2).unwrap();
        let ia: HashSet<_> = a.spec().intents.iter().collect();
        assert!(b.spec().intents.iter().all(|i| !ia.contains(i)));
        assert!(a.content_words().is_disjoint(&b.content_words()));
        assert_eq!(a, DomainBlueprint::generate(DomainStats::default(), 1).unwrap());
    }

    #[test]
    fn every_token_is_function_or_content_word() {
        let bp = DomainBlueprint::generate(DomainStats::default(), 4).unwrap();
        let content = bp.content_words();
        let function: HashSet<&str> = FUNCTION_WORDS.iter().copied().collect();
        for u in sample_corpus(bp.spec(), &SynthConfig::new(300, 0)).unwrap() {
            for t in &u.tokens {
                assert!(content.contains(t) || function.contains(t.as_str()), "{t}");
            }
        }
    }

    #[test]
    fn sharing_domain_reuses_words_with_new_labels() {
        let parent = DomainBlueprint::generate(DomainStats::default(), 3).unwrap();
        let child = DomainBlueprint::sharing_lexicon(&parent, DomainStats::default(), 50).unwrap();
        assert_eq!(child.lexicon_of, "d3");
        assert_eq!(child.content_words(), parent.content_words());
        assert!(child.spec().intents.iter().all(|i| !parent.spec().intents.contains(i)));
        assert_ne!(child.spec().carrier_phrases, parent.spec().carrier_phrases);
    }

    #[test]
    fn held_out_phrases_avoid_training_phrases() {
        let bp = DomainBlueprint::generate(DomainStats::default(), 5).unwrap();
        let held = bp.held_out_spec(40, 1);
        let train: HashSet<_> = bp.spec().carrier_phrases.iter().collect();
        assert_eq!(held.carrier_phrases.len(), 40);
        assert!(held.carrier_phrases.iter().all(|p| !train.contains(p)));
        assert_eq!(held.slot_types, bp.spec().slot_types);
    }
}
