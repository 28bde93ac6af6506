//! Core domain types, FPVG eligibility, validation and JSONL persistence.

mod io;
mod ontology;
mod program;
mod validate;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use io::{load_corpus, read_jsonl, save_corpus, write_jsonl, Corpus, Versioned};
pub use ontology::Ontology;
pub use program::{check_program, execute_symbolic, SymbolicOutcome};
pub use validate::{validate_corpus, ValidationReport, Violation};

/// Version written into every persisted record.
pub const SCHEMA_VERSION: u32 = 1;

/// Maximum number of objects per scene.
pub const MAX_OBJECTS: usize = 100;

/// Maximum number of attributes per object.
pub const MAX_ATTRIBUTES: usize = 3;

/// Answer returned when a program selects nothing.
pub const UNKNOWN_ANSWER: &str = "unknown";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub object_id: String,
    pub name: String,
    #[serde(default)]
    pub attributes: Vec<String>,
    /// Relative `(x1, y1, x2, y2)`.
    pub bbox: [f64; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub image_id: String,
    pub objects: Vec<SceneObject>,
}

impl SceneGraph {
    pub fn object(&self, object_id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.object_id == object_id)
    }

    pub fn object_ids(&self) -> BTreeSet<String> {
        self.objects.iter().map(|o| o.object_id.clone()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    Query,
    Other,
}

/// One step of a functional question program.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ProgramStep {
    /// Keep objects whose name is `target` or belongs to category `target`.
    Select {
        target: String,
    },
    Filter {
        attribute: String,
    },
    /// Relation traversal. Parsed and persisted, never executed.
    Relate {
        relation: String,
    },
    QueryName,
    QueryAttribute,
}

impl ProgramStep {
    pub fn is_query(&self) -> bool {
        matches!(self, ProgramStep::QueryName | ProgramStep::QueryAttribute)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Original,
    Augmented { source_question_id: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub question_id: String,
    pub image_id: String,
    pub text: String,
    pub qtype: QuestionType,
    pub program: Vec<ProgramStep>,
    pub answer: String,
    /// Question-relevant objects. Everything else in the scene is irrelevant.
    pub relevant_ids: BTreeSet<String>,
    pub provenance: Provenance,
}

impl Question {
    pub fn asks_for_name(&self) -> bool {
        matches!(self.program.last(), Some(ProgramStep::QueryName))
    }

    pub fn select_target(&self) -> Option<&str> {
        self.program.iter().find_map(|s| match s {
            ProgramStep::Select { target } => Some(target.as_str()),
            _ => None,
        })
    }

    /// Question type used for answer priors and prior-shift splits:
    /// `name/<category>` or `attribute/<category>` for query questions.
    pub fn type_key(&self, ontology: &Ontology) -> String {
        let query = match self.program.last() {
            Some(ProgramStep::QueryName) => "name",
            Some(ProgramStep::QueryAttribute) => "attribute",
            _ => "other",
        };
        let category = self
            .select_target()
            .and_then(|t| ontology.target_category(t))
            .unwrap_or("none");
        format!("{query}/{category}")
    }
}

/// FPVG needs both a relevant and an irrelevant object.
pub fn eligible_for_fpvg(question: &Question, scene: &SceneGraph) -> bool {
    let relevant = scene
        .objects
        .iter()
        .filter(|o| question.relevant_ids.contains(&o.object_id))
        .count();
    relevant >= 1 && relevant < scene.objects.len()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub name: String,
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub id_test: Vec<String>,
    pub ood_test: Vec<String>,
}

impl Split {
    /// Ids appearing in more than one part.
    pub fn overlaps(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut dup = BTreeSet::new();
        for id in self
            .train
            .iter()
            .chain(&self.dev)
            .chain(&self.id_test)
            .chain(&self.ood_test)
        {
            if !seen.insert(id) {
                dup.insert(id.clone());
            }
        }
        dup.into_iter().collect()
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.id_test.len() + self.ood_test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub question_id: String,
    pub answer_all: String,
    pub answer_relevant_only: String,
    pub answer_irrelevant_only: String,
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn object(id: &str, name: &str, attrs: &[&str]) -> SceneObject {
        SceneObject {
            object_id: id.to_string(),
            name: name.to_string(),
            attributes: attrs.iter().map(|a| a.to_string()).collect(),
            bbox: [0.1, 0.1, 0.4, 0.5],
        }
    }

    pub fn scene(image_id: &str, objects: Vec<SceneObject>) -> SceneGraph {
        SceneGraph {
            image_id: image_id.to_string(),
            objects,
        }
    }

    pub fn name_question(
        id: &str,
        image: &str,
        target: &str,
        filter: Option<&str>,
        answer: &str,
        relevant: &[&str],
    ) -> Question {
        let mut program = vec![ProgramStep::Select {
            target: target.to_string(),
        }];
        if let Some(a) = filter {
            program.push(ProgramStep::Filter {
                attribute: a.to_string(),
            });
        }
        program.push(ProgramStep::QueryName);
        Question {
            question_id: id.to_string(),
            image_id: image.to_string(),
            text: format!("What {target} is {}?", filter.unwrap_or("in the image")),
            qtype: QuestionType::Query,
            program,
            answer: answer.to_string(),
            relevant_ids: relevant.iter().map(|r| r.to_string()).collect(),
            provenance: Provenance::Original,
        }
    }

    /// cat(brown), dog(black), table(wooden), cup, cup(red)
    pub fn desk_scene() -> SceneGraph {
        scene(
            "img0",
            vec![
                object("o00", "cat", &["brown"]),
                object("o01", "dog", &["black"]),
                object("o02", "table", &["wooden"]),
                object("o03", "cup", &[]),
                object("o04", "cup", &["red", "small"]),
            ],
        )
    }
}
