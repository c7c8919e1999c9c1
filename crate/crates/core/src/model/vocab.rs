//! Closed vocabularies shared across the toolkit: element skill categories,
//! element keys of the form `name (category)`, and structural-problem tags.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The thirteen skill categories an element can be classified into.
///
/// Declaration order is the canonical column order used by reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementCategory {
    Object,
    Human,
    Animal,
    Food,
    Activity,
    Attribute,
    Counting,
    Color,
    Material,
    Spatial,
    Location,
    Shape,
    Other,
}

impl ElementCategory {
    pub const ALL: [ElementCategory; 13] = [
        ElementCategory::Object,
        ElementCategory::Human,
        ElementCategory::Animal,
        ElementCategory::Food,
        ElementCategory::Activity,
        ElementCategory::Attribute,
        ElementCategory::Counting,
        ElementCategory::Color,
        ElementCategory::Material,
        ElementCategory::Spatial,
        ElementCategory::Location,
        ElementCategory::Shape,
        ElementCategory::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ElementCategory::Object => "object",
            ElementCategory::Human => "human",
            ElementCategory::Animal => "animal",
            ElementCategory::Food => "food",
            ElementCategory::Activity => "activity",
            ElementCategory::Attribute => "attribute",
            ElementCategory::Counting => "counting",
            ElementCategory::Color => "color",
            ElementCategory::Material => "material",
            ElementCategory::Spatial => "spatial",
            ElementCategory::Location => "location",
            ElementCategory::Shape => "shape",
            ElementCategory::Other => "other",
        }
    }

    /// Position in the canonical vocabulary order.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ElementCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown element category `{0}`")]
pub struct UnknownCategory(pub String);

impl FromStr for ElementCategory {
    type Err = UnknownCategory;

    /// Case-insensitive; generated responses mix `counting` and `Counting`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        ElementCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == lower)
            .ok_or_else(|| UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ElementKeyError {
    #[error("element key `{0}` is not of the form `name (category)`")]
    Malformed(String),
    #[error(transparent)]
    Category(#[from] UnknownCategory),
}

/// A fine-grained element split from a prompt, written `name (category)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementKey {
    pub name: String,
    pub category: ElementCategory,
}

impl ElementKey {
    pub fn new(name: impl Into<String>, category: ElementCategory) -> Self {
        ElementKey {
            name: name.into(),
            category,
        }
    }
}

impl fmt::Display for ElementKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.name, self.category)
    }
}

impl FromStr for ElementKey {
    type Err = ElementKeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || ElementKeyError::Malformed(s.to_string());
        let body = s.trim().strip_suffix(')').ok_or_else(malformed)?;
        // The name itself may contain parentheses; the category is the last group.
        let open = body.rfind('(').ok_or_else(malformed)?;
        let name = body[..open].trim();
        if name.is_empty() {
            return Err(malformed());
        }
        let category = body[open + 1..].parse()?;
        Ok(ElementKey::new(name, category))
    }
}

impl Serialize for ElementKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ElementKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// A yes/no answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
}

impl Answer {
    pub fn as_str(self) -> &'static str {
        match self {
            Answer::Yes => "yes",
            Answer::No => "no",
        }
    }

    pub fn opposite(self) -> Answer {
        match self {
            Answer::Yes => Answer::No,
            Answer::No => Answer::Yes,
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is not a yes/no answer")]
pub struct NotAnAnswer(pub String);

impl FromStr for Answer {
    type Err = NotAnAnswer;

    /// Case-insensitive; a trailing period is ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let t = t.strip_suffix('.').unwrap_or(t).trim();
        if t.eq_ignore_ascii_case("yes") {
            Ok(Answer::Yes)
        } else if t.eq_ignore_ascii_case("no") {
            Ok(Answer::No)
        } else {
            Err(NotAnAnswer(s.to_string()))
        }
    }
}

/// Structural-problem tags: three coarse classes plus the fine human-body
/// sub-tags for face, limb and palm defects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureLabel {
    Animal,
    Object,
    HumanBody,
    FaceMissingExtraFeature,
    FaceDistortedExaggerated,
    LimbMissingExtra,
    LimbDistortedDeformed,
    LimbDisproportionate,
    PalmShapeless,
    PalmMissingExtraFinger,
    PalmDeformed,
    PalmOverlapping,
}

impl StructureLabel {
    pub const COARSE: [StructureLabel; 3] = [
        StructureLabel::Animal,
        StructureLabel::Object,
        StructureLabel::HumanBody,
    ];

    pub fn is_coarse(self) -> bool {
        Self::COARSE.contains(&self)
    }

    /// Probe text asked of a multimodal model for this label.
    pub fn probe(self) -> &'static str {
        match self {
            StructureLabel::Animal => "do the limbs, bodies, and faces of the animals in the image not conform to the laws of reality in terms of structure",
            StructureLabel::Object => "do the objects in the image not conform to the laws of reality physically, including but not limited to the position and shape of the objects",
            StructureLabel::HumanBody => "do the limbs, bodies, and faces of the people in the image not conform to the laws of reality in terms of structure",
            StructureLabel::FaceMissingExtraFeature => "does the person in the image have any missing or redundant features on the face",
            StructureLabel::FaceDistortedExaggerated => "does the person in the image have distorted features or exaggerated proportions on the face",
            StructureLabel::LimbMissingExtra => "does the person in the image have extra or fewer limbs",
            StructureLabel::LimbDistortedDeformed => "does the person in the image have any limb distortion or deformity",
            StructureLabel::LimbDisproportionate => "does the person in the image have disproportionate limbs",
            StructureLabel::PalmShapeless => "does the person in the image have a shapeless palm",
            StructureLabel::PalmMissingExtraFinger => "does the person in the image have extra or fewer fingers on the hand",
            StructureLabel::PalmDeformed => "does the person in the image have deformed fingers on the hand",
            StructureLabel::PalmOverlapping => "does the person in the image have multiple hands overlapping and confusing",
        }
    }

    /// Full yes/no question for structural-problem probing.
    pub fn question(self) -> String {
        format!(
            "Does this generated image have any structural problems? Specifically, {}? Please answer yes or no only.",
            self.probe()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_element_keys() {
        let key: ElementKey = "bow tie (object)".parse().unwrap();
        assert_eq!(key, ElementKey::new("bow tie", ElementCategory::Object));
        assert_eq!(key.to_string(), "bow tie (object)");

        let key: ElementKey = "0 (Counting)".parse().unwrap();
        assert_eq!(key.category, ElementCategory::Counting);

        let key: ElementKey = "mug (large) (shape)".parse().unwrap();
        assert_eq!(key.name, "mug (large)");
    }

    #[test]
    fn rejects_bad_element_keys() {
        assert!(matches!(
            "x (vehicle)".parse::<ElementKey>(),
            Err(ElementKeyError::Category(_))
        ));
        assert!(matches!(
            "cat".parse::<ElementKey>(),
            Err(ElementKeyError::Malformed(_))
        ));
        assert!(matches!(
            " (color)".parse::<ElementKey>(),
            Err(ElementKeyError::Malformed(_))
        ));
    }

    #[test]
    fn category_order_is_vocabulary_order() {
        let names: Vec<_> = ElementCategory::ALL.iter().map(|c| c.as_str()).collect();
        assert_eq!(
            names.join(", "),
            "object, human, animal, food, activity, attribute, counting, color, material, spatial, location, shape, other"
        );
        assert!(ElementCategory::ALL.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn answers() {
        assert_eq!("Yes.".parse::<Answer>().unwrap(), Answer::Yes);
        assert_eq!(" NO ".parse::<Answer>().unwrap(), Answer::No);
        assert!("maybe".parse::<Answer>().is_err());
        assert_eq!(Answer::Yes.opposite().to_string(), "no");
    }

    #[test]
    fn structure_question_wraps_probe() {
        let q = StructureLabel::PalmShapeless.question();
        assert_eq!(
            q,
            "Does this generated image have any structural problems? Specifically, does the person in the image have a shapeless palm? Please answer yes or no only."
        );
    }
}
