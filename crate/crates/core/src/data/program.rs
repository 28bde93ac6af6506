use std::collections::BTreeSet;

use crate::data::{Ontology, ProgramStep, SceneGraph};
use crate::error::{Error, Result};

/// Structural checks: non-empty, one `select` first, filters in between, a
/// single trailing query step.
pub fn check_program(program: &[ProgramStep]) -> Result<()> {
    let Some((last, body)) = program.split_last() else {
        return Err(Error::MalformedProgram("empty program".into()));
    };
    if !last.is_query() {
        return Err(Error::MalformedProgram("last step is not a query".into()));
    }
    match body.first() {
        Some(ProgramStep::Select { .. }) => {}
        _ => {
            return Err(Error::MalformedProgram(
                "program must start with select".into(),
            ))
        }
    }
    for step in &body[1..] {
        match step {
            ProgramStep::Filter { .. } => {}
            ProgramStep::Relate { .. } => {}
            ProgramStep::Select { .. } => {
                return Err(Error::MalformedProgram("repeated select".into()))
            }
            _ => return Err(Error::MalformedProgram("query before last step".into())),
        }
    }
    Ok(())
}

/// Result of running a program over a ground-truth scene graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicOutcome {
    /// Objects matched by the `select` step.
    pub selected: BTreeSet<String>,
    /// Objects surviving all filters (the query targets).
    pub targets: BTreeSet<String>,
    /// `None` when no object survives or the survivors disagree.
    pub answer: Option<String>,
}

/// Executes a program on symbolic annotations.
///
/// This is the generator's notion of ground truth; feature-space execution
/// lives in the rule model.
pub fn execute_symbolic(
    program: &[ProgramStep],
    scene: &SceneGraph,
    ontology: &Ontology,
) -> Result<SymbolicOutcome> {
    check_program(program)?;
    let mut selected = BTreeSet::new();
    let mut survivors: Vec<&crate::data::SceneObject> = Vec::new();
    for step in program {
        match step {
            ProgramStep::Select { target } => {
                let names = ontology.select_names(target).ok_or_else(|| {
                    Error::MalformedProgram(format!("unknown select target `{target}`"))
                })?;
                survivors = scene
                    .objects
                    .iter()
                    .filter(|o| names.contains(&o.name.as_str()))
                    .collect();
                selected = survivors.iter().map(|o| o.object_id.clone()).collect();
            }
            ProgramStep::Filter { attribute } => {
                survivors.retain(|o| o.attributes.iter().any(|a| a == attribute));
            }
            ProgramStep::Relate { relation } => {
                return Err(Error::MalformedProgram(format!(
                    "relate({relation}) is not executable"
                )))
            }
            ProgramStep::QueryName | ProgramStep::QueryAttribute => {}
        }
    }
    let answers: BTreeSet<&str> = match program.last() {
        Some(ProgramStep::QueryName) => survivors.iter().map(|o| o.name.as_str()).collect(),
        _ => {
            // attribute queries are only well defined on single-attribute objects
            if survivors.iter().any(|o| o.attributes.len() != 1) {
                BTreeSet::new()
            } else {
                survivors.iter().map(|o| o.attributes[0].as_str()).collect()
            }
        }
    };
    let answer = if answers.len() == 1 {
        answers.into_iter().next().map(str::to_string)
    } else {
        None
    };
    Ok(SymbolicOutcome {
        selected,
        targets: survivors.iter().map(|o| o.object_id.clone()).collect(),
        answer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::desk_scene;

    fn select(t: &str) -> ProgramStep {
        ProgramStep::Select { target: t.into() }
    }

    fn filter(a: &str) -> ProgramStep {
        ProgramStep::Filter {
            attribute: a.into(),
        }
    }

    #[test]
    fn category_select_then_filter() {
        let o = Ontology::builtin();
        let out = execute_symbolic(
            &[select("animal"), filter("brown"), ProgramStep::QueryName],
            &desk_scene(),
            &o,
        )
        .unwrap();
        assert_eq!(out.selected.len(), 2);
        assert_eq!(out.targets, BTreeSet::from(["o00".to_string()]));
        assert_eq!(out.answer.as_deref(), Some("cat"));
    }

    #[test]
    fn disagreeing_survivors_have_no_answer() {
        let o = Ontology::builtin();
        let out = execute_symbolic(
            &[select("animal"), ProgramStep::QueryName],
            &desk_scene(),
            &o,
        )
        .unwrap();
        assert_eq!(out.answer, None);
    }

    #[test]
    fn attribute_query_requires_single_attribute() {
        let o = Ontology::builtin();
        let scene = desk_scene();
        let cat =
            execute_symbolic(&[select("cat"), ProgramStep::QueryAttribute], &scene, &o).unwrap();
        assert_eq!(cat.answer.as_deref(), Some("brown"));
        let cups =
            execute_symbolic(&[select("cup"), ProgramStep::QueryAttribute], &scene, &o).unwrap();
        assert_eq!(cups.answer, None);
    }

    #[test]
    fn malformed_programs_are_rejected() {
        assert!(check_program(&[]).is_err());
        assert!(check_program(&[select("cat")]).is_err());
        assert!(check_program(&[filter("red"), ProgramStep::QueryName]).is_err());
        assert!(check_program(&[select("cat"), ProgramStep::QueryName, filter("red")]).is_err());
        assert!(check_program(&[select("cat"), filter("red"), ProgramStep::QueryName]).is_ok());
    }

    #[test]
    fn relate_is_a_placeholder() {
        let o = Ontology::builtin();
        let program = [
            select("cat"),
            ProgramStep::Relate {
                relation: "on".into(),
            },
            ProgramStep::QueryName,
        ];
        assert!(check_program(&program).is_ok());
        assert!(execute_symbolic(&program, &desk_scene(), &o).is_err());
    }
}
