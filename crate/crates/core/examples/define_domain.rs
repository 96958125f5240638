//! Define a domain grammar in JSON, sample annotated utterances from it and
//! recover carrier phrases from annotated data.

use nlu_bootstrap::corpus::DecodeMode;
use nlu_bootstrap::grammar::{extract_carrier_phrase, parse_domain_spec, sample_corpus, SynthConfig};

const RECIPES: &str = r#"{
    "name": "Recipes",
    "intents": ["FindRecipeIntent", "GetIngredientsIntent"],
    "slots": [
        {"name": "FoodItem", "gazetteer": ["pasta", "fried chicken", "lentil soup", "pad thai"]},
        {"name": "Diet", "gazetteer": ["vegan", "gluten free"]},
        {"name": "Garnish", "gazetteer": []}
    ],
    "phrases": [
        {"intent": "FindRecipeIntent", "template": "find a recipe for {FoodItem}"},
        {"intent": "FindRecipeIntent", "template": "how do i make {Diet} {FoodItem}"},
        {"intent": "GetIngredientsIntent", "template": "what goes into {FoodItem}"},
        {"intent": "GetIngredientsIntent", "template": "list the ingredients of {FoodItem} please"}
    ]
}"#;

fn main() -> nlu_bootstrap::Result<()> {
    let (spec, warnings) = parse_domain_spec(RECIPES)?;
    for w in &warnings {
        println!("warning: {w:?}");
    }

    let corpus = sample_corpus(&spec, &SynthConfig::new(8, 42))?;
    for u in &corpus {
        let tags: Vec<String> = u.tags.iter().map(|t| t.to_string()).collect();
        println!("{:<22} {:<45} {}", u.intent, u.text(), tags.join(" "));
    }

    println!("\ncarrier phrases recovered from the sample:");
    for u in corpus.iter().take(3) {
        println!("  {}", extract_carrier_phrase(u, DecodeMode::Strict)?);
    }
    Ok(())
}
