use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::templates::SynthCategory;
use super::PromptError;

/// Quantity tokens drawn for count prompts.
pub const QUANTITIES: [&str; 9] = ["0", "1", "2", "3", "4", "5", "6", "some", "several"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectClass {
    Animal,
    Human,
    ObjectHousehold,
    ObjectElectronic,
    ObjectCloth,
    ObjectOthers,
    ObjectVehicle,
    Food,
}

/// Keyword tables for synthetic prompts. Object names are singular.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KeywordCorpus {
    pub objects: BTreeMap<ObjectClass, Vec<String>>,
    #[serde(default)]
    pub colors: Vec<String>,
    #[serde(default)]
    pub locations: Vec<String>,
    #[serde(default)]
    pub styles: Vec<String>,
    #[serde(default)]
    pub perspectives: Vec<String>,
    #[serde(default)]
    pub spatial: Vec<String>,
    #[serde(default)]
    pub attributes: Vec<String>,
    #[serde(default)]
    pub words_symbols: Vec<String>,
    #[serde(default)]
    pub word_styles: Vec<String>,
}

impl KeywordCorpus {
    /// The keyword tables bundled with the crate.
    pub fn builtin() -> Self {
        serde_json::from_str(include_str!("../../data/keywords.json"))
            .expect("bundled corpus parses")
    }

    /// All object names in class order.
    pub fn all_objects(&self) -> Vec<&str> {
        self.objects
            .values()
            .flatten()
            .map(String::as_str)
            .collect()
    }

    fn objects_of(&self, classes: &[ObjectClass]) -> Vec<&str> {
        classes
            .iter()
            .filter_map(|c| self.objects.get(c))
            .flatten()
            .map(String::as_str)
            .collect()
    }
}

fn pick<'a>(
    rng: &mut ChaCha8Rng,
    list: &[&'a str],
    name: &'static str,
) -> Result<&'a str, PromptError> {
    list.choose(rng)
        .copied()
        .ok_or(PromptError::EmptyList(name))
}

fn pick_owned(
    rng: &mut ChaCha8Rng,
    list: &[String],
    name: &'static str,
) -> Result<String, PromptError> {
    list.choose(rng)
        .cloned()
        .ok_or(PromptError::EmptyList(name))
}

/// Two draws, distinct when the list allows it.
fn pick_two<'a>(
    rng: &mut ChaCha8Rng,
    list: &[&'a str],
    name: &'static str,
) -> Result<[&'a str; 2], PromptError> {
    if list.is_empty() {
        return Err(PromptError::EmptyList(name));
    }
    if list.len() == 1 {
        return Ok([list[0], list[0]]);
    }
    let picked: Vec<&str> = list.choose_multiple(rng, 2).copied().collect();
    Ok([picked[0], picked[1]])
}

/// Regular English plural of a singular noun phrase (last word inflected).
pub fn pluralize(noun: &str) -> String {
    let lower = noun.to_ascii_lowercase();
    if ["s", "x", "z", "ch", "sh"]
        .iter()
        .any(|e| lower.ends_with(e))
    {
        return format!("{noun}es");
    }
    let mut chars = lower.chars().rev();
    if let (Some('y'), Some(prev)) = (chars.next(), chars.next()) {
        if !"aeiou".contains(prev) {
            return format!("{}ies", &noun[..noun.len() - 1]);
        }
    }
    format!("{noun}s")
}

fn agree(quantity: &str, noun: &str) -> String {
    if quantity == "1" {
        noun.to_string()
    } else {
        pluralize(noun)
    }
}

/// `"<q1> <obj1> and <q2> <obj2>"`, plural unless the quantity is 1.
pub fn render_count_prompt(q1: &str, obj1: &str, q2: &str, obj2: &str) -> String {
    format!("{q1} {} and {q2} {}", agree(q1, obj1), agree(q2, obj2))
}

pub fn gen_count_prompt(corpus: &KeywordCorpus, seed: u64) -> Result<String, PromptError> {
    let objects = corpus.all_objects();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [a, b] = pick_two(&mut rng, &objects, "objects")?;
    let q1 = QUANTITIES[rng.random_range(0..QUANTITIES.len())];
    let q2 = QUANTITIES[rng.random_range(0..QUANTITIES.len())];
    Ok(render_count_prompt(q1, a, q2, b))
}

pub fn render_writing_prompt(word: &str, style: &str) -> String {
    format!("a blackboard with text '{word}' on it, {style}")
}

pub fn gen_writing_prompt(corpus: &KeywordCorpus, seed: u64) -> Result<String, PromptError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let word = pick_owned(&mut rng, &corpus.words_symbols, "words_symbols")?;
    let style = pick_owned(&mut rng, &corpus.word_styles, "word_styles")?;
    Ok(render_writing_prompt(&word, &style))
}

/// Keyword slots for the LLM-mediated synthetic categories.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DrawnKeywords {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nouns: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub colors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perspective: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
}

pub fn draw_synth_keywords(
    category: SynthCategory,
    corpus: &KeywordCorpus,
    seed: u64,
) -> Result<DrawnKeywords, PromptError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objects = corpus.all_objects();
    let owned = |v: [&str; 2]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let mut k = DrawnKeywords::default();
    match category {
        SynthCategory::ColorMaterial => {
            k.nouns = owned(pick_two(&mut rng, &objects, "objects")?);
            let colors: Vec<&str> = corpus.colors.iter().map(String::as_str).collect();
            k.colors = owned(pick_two(&mut rng, &colors, "colors")?);
        }
        SynthCategory::LocationWeatherTime => {
            k.nouns = vec![pick(&mut rng, &objects, "objects")?.to_string()];
            k.location = Some(pick_owned(&mut rng, &corpus.locations, "locations")?);
            k.style = Some(pick_owned(&mut rng, &corpus.styles, "styles")?);
        }
        SynthCategory::ActivityPerspective => {
            let actors = corpus.objects_of(&[ObjectClass::Human, ObjectClass::Animal]);
            k.nouns = vec![pick(&mut rng, &actors, "objects.human+animal")?.to_string()];
            k.perspective = Some(pick_owned(&mut rng, &corpus.perspectives, "perspectives")?);
        }
        SynthCategory::SpatialComposition => {
            k.nouns = owned(pick_two(&mut rng, &objects, "objects")?);
            k.spatial = Some(pick_owned(&mut rng, &corpus.spatial, "spatial")?);
            k.attribute = Some(pick_owned(&mut rng, &corpus.attributes, "attributes")?);
        }
    }
    Ok(k)
}
