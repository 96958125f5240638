//! Generate random domain grammars with fixed size statistics, including a
//! domain that reuses the vocabulary of another one.

use nlu_bootstrap::grammar::{sample_corpus, DomainBlueprint, DomainStats, SynthConfig};

fn main() -> nlu_bootstrap::Result<()> {
    let stats = DomainStats::CUSTOM_MEDIAN;
    let parent = DomainBlueprint::generate(
        DomainStats {
            num_intents: 4,
            num_slots: 2,
            ..stats
        },
        7,
    )?;
    let sibling = DomainBlueprint::sharing_lexicon(&parent, stats, 8)?;
    let stranger = DomainBlueprint::generate(stats, 9)?;

    for bp in [&parent, &sibling, &stranger] {
        let spec = bp.spec();
        println!(
            "{}: {} intents, {} slots, {} carrier phrases",
            spec.name,
            spec.intents.len(),
            spec.slot_types.len(),
            spec.carrier_phrases.len()
        );
        for u in sample_corpus(spec, &SynthConfig::new(3, 1))? {
            println!("    [{}] {}", u.intent, u.text());
        }
    }

    let shared = |a: &DomainBlueprint, b: &DomainBlueprint| a.content_words().intersection(&b.content_words()).count();
    println!("\ncontent words shared with {}:", parent.name);
    println!("  {}: {}", sibling.name, shared(&parent, &sibling));
    println!("  {}: {}", stranger.name, shared(&parent, &stranger));

    let held_out = sibling.held_out_spec(10, 3);
    println!("\nheld-out grammar of {} has {} new carrier phrases", sibling.name, held_out.carrier_phrases.len());
    Ok(())
}
