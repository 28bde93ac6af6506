use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::{Ontology, Question, SceneGraph, SCHEMA_VERSION};
use crate::error::{Error, Result};

/// A record tagged with the schema version it was written with.
#[derive(Debug, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub schema: u32,
    #[serde(flatten)]
    pub record: T,
}

/// Writes one JSON object per line, each carrying `"schema": 1`.
pub fn write_jsonl<'a, T, I>(path: &Path, records: I) -> Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(&Versioned {
            schema: SCHEMA_VERSION,
            record,
        })?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads a JSONL file written by [`write_jsonl`]. Blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_error = |message: String| Error::Parse {
            path: path.display().to_string(),
            line: index + 1,
            message,
        };
        let versioned: Versioned<T> =
            serde_json::from_str(&line).map_err(|e| parse_error(e.to_string()))?;
        if versioned.schema != SCHEMA_VERSION {
            return Err(parse_error(format!(
                "unsupported schema version {}",
                versioned.schema
            )));
        }
        records.push(versioned.record);
    }
    Ok(records)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub ontology: Ontology,
    pub scenes: Vec<SceneGraph>,
    pub questions: Vec<Question>,
}

impl Corpus {
    pub fn scene(&self, image_id: &str) -> Option<&SceneGraph> {
        self.scenes.iter().find(|s| s.image_id == image_id)
    }

    pub const SCENES_FILE: &'static str = "scenes.jsonl";
    pub const QUESTIONS_FILE: &'static str = "questions.jsonl";
    pub const ONTOLOGY_FILE: &'static str = "ontology.json";
}

/// Writes `scenes.jsonl`, `questions.jsonl` and `ontology.json` into `dir`.
pub fn save_corpus(dir: &Path, corpus: &Corpus) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_jsonl(&dir.join(Corpus::SCENES_FILE), &corpus.scenes)?;
    write_jsonl(&dir.join(Corpus::QUESTIONS_FILE), &corpus.questions)?;
    let ontology_path = dir.join(Corpus::ONTOLOGY_FILE);
    let text = serde_json::to_string_pretty(&corpus.ontology)?;
    fs::write(&ontology_path, text + "\n").map_err(|e| Error::io(&ontology_path, e))?;
    Ok(dir.to_path_buf())
}

/// Loads a corpus directory, rejecting duplicate scene or question ids.
pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    let ontology_path = dir.join(Corpus::ONTOLOGY_FILE);
    let text = fs::read_to_string(&ontology_path).map_err(|e| Error::io(&ontology_path, e))?;
    let ontology: Ontology = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: ontology_path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let scenes: Vec<SceneGraph> = read_jsonl(&dir.join(Corpus::SCENES_FILE))?;
    let questions: Vec<Question> = read_jsonl(&dir.join(Corpus::QUESTIONS_FILE))?;

    let mut seen = BTreeSet::new();
    for scene in &scenes {
        if !seen.insert(scene.image_id.as_str()) {
            return Err(Error::DuplicateId {
                kind: "image",
                id: scene.image_id.clone(),
            });
        }
    }
    let mut seen = BTreeSet::new();
    for question in &questions {
        if !seen.insert(question.question_id.as_str()) {
            return Err(Error::DuplicateId {
                kind: "question",
                id: question.question_id.clone(),
            });
        }
    }
    Ok(Corpus {
        ontology,
        scenes,
        questions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::*;

    fn small() -> Corpus {
        Corpus {
            ontology: Ontology::builtin(),
            scenes: vec![desk_scene()],
            questions: vec![name_question(
                "q0",
                "img0",
                "animal",
                Some("brown"),
                "cat",
                &["o00", "o01"],
            )],
        }
    }

    #[test]
    fn round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = small();
        save_corpus(dir.path(), &corpus).unwrap();
        assert_eq!(load_corpus(dir.path()).unwrap(), corpus);
        let line = fs::read_to_string(dir.path().join(Corpus::QUESTIONS_FILE)).unwrap();
        assert!(line.starts_with("{\"schema\":1,"));
    }

    #[test]
    fn empty_files_give_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        save_corpus(dir.path(), &small()).unwrap();
        fs::write(dir.path().join(Corpus::SCENES_FILE), "").unwrap();
        fs::write(dir.path().join(Corpus::QUESTIONS_FILE), "").unwrap();
        let c = load_corpus(dir.path()).unwrap();
        assert!(c.scenes.is_empty() && c.questions.is_empty());
    }

    #[test]
    fn duplicate_question_id_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut corpus = small();
        corpus.questions.push(corpus.questions[0].clone());
        save_corpus(dir.path(), &corpus).unwrap();
        match load_corpus(dir.path()) {
            Err(Error::DuplicateId {
                kind: "question",
                id,
            }) => assert_eq!(id, "q0"),
            other => panic!("expected duplicate id error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        save_corpus(dir.path(), &small()).unwrap();
        let path = dir.path().join(Corpus::SCENES_FILE);
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("{not json\n");
        fs::write(&path, text).unwrap();
        match load_corpus(dir.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        fs::write(&path, "{\"schema\":2,\"image_id\":\"a\",\"objects\":[]}\n").unwrap();
        assert!(read_jsonl::<SceneGraph>(&path).is_err());
    }
}
