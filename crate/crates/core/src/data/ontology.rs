use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::data::SCHEMA_VERSION;
use crate::error::{Error, Result};

/// Object categories and the attribute vocabulary.
///
/// Every object name belongs to exactly one category. Category and attribute
/// words are disjoint from object names so that a `select` target can be
/// resolved unambiguously.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OntologyFile", into = "OntologyFile")]
pub struct Ontology {
    categories: BTreeMap<String, BTreeSet<String>>,
    attribute_vocab: BTreeSet<String>,
    name_to_category: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct OntologyFile {
    schema: u32,
    categories: BTreeMap<String, BTreeSet<String>>,
    attributes: BTreeSet<String>,
}

impl TryFrom<OntologyFile> for Ontology {
    type Error = Error;

    fn try_from(file: OntologyFile) -> Result<Self> {
        if file.schema != SCHEMA_VERSION {
            return Err(Error::Ontology(format!(
                "unsupported schema version {}",
                file.schema
            )));
        }
        Ontology::new(file.categories, file.attributes)
    }
}

impl From<Ontology> for OntologyFile {
    fn from(o: Ontology) -> Self {
        OntologyFile {
            schema: SCHEMA_VERSION,
            categories: o.categories,
            attributes: o.attribute_vocab,
        }
    }
}

impl Ontology {
    pub fn new(
        categories: BTreeMap<String, BTreeSet<String>>,
        attribute_vocab: BTreeSet<String>,
    ) -> Result<Self> {
        let mut name_to_category = BTreeMap::new();
        for (category, names) in &categories {
            if names.is_empty() {
                return Err(Error::Ontology(format!(
                    "category `{category}` has no names"
                )));
            }
            for name in names {
                if name.trim().is_empty() {
                    return Err(Error::Ontology(format!("empty name in `{category}`")));
                }
                if let Some(prev) = name_to_category.insert(name.clone(), category.clone()) {
                    return Err(Error::Ontology(format!(
                        "name `{name}` appears in both `{prev}` and `{category}`"
                    )));
                }
            }
        }
        for category in categories.keys() {
            if name_to_category.contains_key(category) {
                return Err(Error::Ontology(format!(
                    "category `{category}` is also an object name"
                )));
            }
        }
        for attribute in &attribute_vocab {
            if name_to_category.contains_key(attribute) || categories.contains_key(attribute) {
                return Err(Error::Ontology(format!(
                    "attribute `{attribute}` collides with a name or category"
                )));
            }
        }
        Ok(Ontology {
            categories,
            attribute_vocab,
            name_to_category,
        })
    }

    /// The desk-scale ontology shipped with the generator.
    pub fn builtin() -> Self {
        const CATEGORIES: &[(&str, &[&str])] = &[
            (
                "animal",
                &[
                    "cat", "dog", "bird", "horse", "cow", "sheep", "elephant", "zebra", "giraffe",
                    "bear", "duck", "rabbit",
                ],
            ),
            (
                "vehicle",
                &[
                    "car",
                    "bus",
                    "truck",
                    "bicycle",
                    "motorcycle",
                    "train",
                    "boat",
                    "airplane",
                    "van",
                ],
            ),
            (
                "furniture",
                &[
                    "chair", "table", "sofa", "bed", "desk", "shelf", "bench", "cabinet", "stool",
                    "dresser",
                ],
            ),
            (
                "food",
                &[
                    "pizza", "sandwich", "banana", "apple", "orange", "cake", "donut", "broccoli",
                    "carrot", "bread", "cheese", "egg", "salad", "soup",
                ],
            ),
            (
                "clothing",
                &[
                    "shirt", "jacket", "hat", "dress", "shoe", "scarf", "coat", "sweater",
                ],
            ),
            (
                "kitchenware",
                &[
                    "cup", "plate", "bowl", "fork", "knife", "spoon", "bottle", "pot",
                ],
            ),
            (
                "plant",
                &["tree", "flower", "bush", "grass", "cactus", "fern"],
            ),
            (
                "electronics",
                &[
                    "laptop",
                    "phone",
                    "television",
                    "keyboard",
                    "monitor",
                    "camera",
                    "speaker",
                ],
            ),
        ];
        const ATTRIBUTES: &[&str] = &[
            "red", "blue", "green", "yellow", "white", "black", "brown", "gray", "pink", "purple",
            "wooden", "metal", "plastic", "glass", "large", "small", "tall", "short", "old", "new",
            "wet", "dry", "open", "closed",
        ];
        let categories = CATEGORIES
            .iter()
            .map(|(c, names)| (c.to_string(), names.iter().map(|n| n.to_string()).collect()))
            .collect();
        let attributes = ATTRIBUTES.iter().map(|a| a.to_string()).collect();
        Ontology::new(categories, attributes).expect("builtin ontology is consistent")
    }

    pub fn categories(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.categories
    }

    pub fn attribute_vocab(&self) -> &BTreeSet<String> {
        &self.attribute_vocab
    }

    pub fn category_of(&self, name: &str) -> Option<&str> {
        self.name_to_category.get(name).map(String::as_str)
    }

    pub fn members(&self, category: &str) -> Option<&BTreeSet<String>> {
        self.categories.get(category)
    }

    pub fn is_name(&self, word: &str) -> bool {
        self.name_to_category.contains_key(word)
    }

    pub fn is_category(&self, word: &str) -> bool {
        self.categories.contains_key(word)
    }

    pub fn is_attribute(&self, word: &str) -> bool {
        self.attribute_vocab.contains(word)
    }

    /// All object names in lexicographic order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.name_to_category.keys().map(String::as_str)
    }

    /// Names a `select` step with this target matches: the category's members
    /// for a category word, the name itself for an object name.
    pub fn select_names(&self, target: &str) -> Option<Vec<&str>> {
        if let Some(members) = self.categories.get(target) {
            Some(members.iter().map(String::as_str).collect())
        } else if let Some((name, _)) = self.name_to_category.get_key_value(target) {
            Some(vec![name.as_str()])
        } else {
            None
        }
    }

    /// Category a `select` target refers to.
    pub fn target_category<'a>(&'a self, target: &'a str) -> Option<&'a str> {
        if self.categories.contains_key(target) {
            Some(target)
        } else {
            self.category_of(target)
        }
    }

    /// Invariant violations that do not prevent construction.
    pub fn violations(&self) -> Vec<String> {
        self.categories
            .iter()
            .filter(|(_, names)| names.len() < 2)
            .map(|(c, _)| format!("category `{c}` has fewer than 2 names"))
            .collect()
    }

    pub fn mean_category_size(&self) -> f64 {
        if self.categories.is_empty() {
            return 0.0;
        }
        self.name_to_category.len() as f64 / self.categories.len() as f64
    }
}
