use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::SCHEMA_VERSION;
use crate::error::{Error, Result};
use crate::models::{LinearModel, PriorModel};

/// Text checkpoint of a trained model. The rule model has no learned state,
/// so only its threshold is stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Checkpoint {
    Prior(PriorModel),
    Linear(LinearModel<f64>),
    Rule { tau: f64 },
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile<M> {
    schema: u32,
    model: M,
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    let text = serde_json::to_string_pretty(&CheckpointFile {
        schema: SCHEMA_VERSION,
        model: checkpoint,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: CheckpointFile<Checkpoint> = serde_json::from_str(&text)?;
    if file.schema != SCHEMA_VERSION {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: format!("unsupported schema {}", file.schema),
        });
    }
    Ok(file.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{AnswerVocab, BowVocab, LinearHyper};

    #[test]
    fn linear_weights_survive_a_round_trip() {
        let vocab = AnswerVocab::new(vec!["a".into(), "b".into()]).unwrap();
        let bow = BowVocab::from(vec!["what".to_string()]);
        let hyper = LinearHyper {
            init_scale: 0.3,
            seed: 9,
            ..LinearHyper::default()
        };
        let mut model = LinearModel::<f64>::init(vocab, bow, 3, hyper);
        model.weights[0] = 0.1 + 0.2;
        model.bias[1] = -1.0 / 3.0;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let ck = Checkpoint::Linear(model);
        save_checkpoint(&path, &ck).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), ck);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"kind\": \"linear\""));
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        fs::write(
            &path,
            r#"{"schema": 7, "model": {"kind": "rule", "tau": 0.7}}"#,
        )
        .unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
