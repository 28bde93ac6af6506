use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{
    check_program, Ontology, Provenance, Question, QuestionType, SceneGraph, MAX_ATTRIBUTES,
    MAX_OBJECTS,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// `scene:<id>`, `question:<id>` or `ontology`.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, subject: String, message: String) {
        self.violations.push(Violation { subject, message });
    }
}

/// Checks every type invariant of a corpus. An empty report means the corpus
/// is well-formed.
pub fn validate_corpus(
    scenes: &[SceneGraph],
    questions: &[Question],
    ontology: &Ontology,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    for message in ontology.violations() {
        report.push("ontology".into(), message);
    }

    let mut scene_index: BTreeMap<&str, &SceneGraph> = BTreeMap::new();
    for scene in scenes {
        let subject = format!("scene:{}", scene.image_id);
        if scene_index.insert(&scene.image_id, scene).is_some() {
            report.push(subject.clone(), "duplicate image id".into());
        }
        if scene.objects.is_empty() {
            report.push(subject.clone(), "scene has no objects".into());
        }
        if scene.objects.len() > MAX_OBJECTS {
            report.push(
                subject.clone(),
                format!(
                    "object cap exceeded ({} > {MAX_OBJECTS})",
                    scene.objects.len()
                ),
            );
        }
        let mut ids = BTreeSet::new();
        for object in &scene.objects {
            let at = format!("object `{}`", object.object_id);
            if !ids.insert(&object.object_id) {
                report.push(subject.clone(), format!("duplicate {at}"));
            }
            if !ontology.is_name(&object.name) {
                report.push(
                    subject.clone(),
                    format!("{at}: unknown name `{}`", object.name),
                );
            }
            if object.attributes.len() > MAX_ATTRIBUTES {
                report.push(
                    subject.clone(),
                    format!("{at}: more than {MAX_ATTRIBUTES} attributes"),
                );
            }
            for attribute in &object.attributes {
                if !ontology.is_attribute(attribute) {
                    report.push(
                        subject.clone(),
                        format!("{at}: unknown attribute `{attribute}`"),
                    );
                }
            }
            let [x1, y1, x2, y2] = object.bbox;
            let in_unit = object.bbox.iter().all(|v| (0.0..=1.0).contains(v));
            if !(in_unit && x1 < x2 && y1 < y2) {
                report.push(
                    subject.clone(),
                    format!("{at}: invalid bbox {:?}", object.bbox),
                );
            }
        }
    }

    let mut question_index: BTreeMap<&str, &Question> = BTreeMap::new();
    for question in questions {
        if question_index
            .insert(&question.question_id, question)
            .is_some()
        {
            report.push(
                format!("question:{}", question.question_id),
                "duplicate question id".into(),
            );
        }
    }

    for question in questions {
        let subject = format!("question:{}", question.question_id);
        match scene_index.get(question.image_id.as_str()) {
            None => report.push(
                subject.clone(),
                format!("unknown image `{}`", question.image_id),
            ),
            Some(scene) => {
                let ids = scene.object_ids();
                for id in &question.relevant_ids {
                    if !ids.contains(id) {
                        report.push(subject.clone(), format!("relevant id `{id}` not in scene"));
                    }
                }
            }
        }
        if let Err(e) = check_program(&question.program) {
            report.push(subject.clone(), e.to_string());
        }
        if question.qtype == QuestionType::Query
            && !ontology.is_name(&question.answer)
            && !ontology.is_attribute(&question.answer)
        {
            report.push(
                subject.clone(),
                format!("answer `{}` outside the ontology", question.answer),
            );
        }
        if let Provenance::Augmented { source_question_id } = &question.provenance {
            match question_index.get(source_question_id.as_str()) {
                None => report.push(
                    subject.clone(),
                    format!("source `{source_question_id}` not found"),
                ),
                Some(source) => {
                    if source.provenance != Provenance::Original {
                        report.push(subject.clone(), "source is not an original question".into());
                    }
                    if source.text != question.text {
                        report.push(subject.clone(), "text differs from source".into());
                    }
                }
            }
        }
    }
    report
}
