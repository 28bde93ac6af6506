use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Ontology, SceneGraph};
use crate::error::{Error, Result};

/// Per-object corruption probabilities of the simulated detector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetNoiseParams {
    pub p_name: f64,
    pub p_attr: f64,
}

impl Default for DetNoiseParams {
    fn default() -> Self {
        DetNoiseParams {
            p_name: 0.3,
            p_attr: 0.0,
        }
    }
}

impl DetNoiseParams {
    pub fn validate(&self) -> Result<()> {
        for (label, p) in [("p_name", self.p_name), ("p_attr", self.p_attr)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParams(format!(
                    "{label} = {p} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Simulated detection output for a ground-truth scene.
///
/// With probability `p_name` an object's name is swapped for another name of
/// the same category; each attribute is swapped with probability `p_attr` for
/// a different attribute word not already on the object. Ids and boxes are
/// kept.
pub fn simulate_detection<R: Rng + ?Sized>(
    scene: &SceneGraph,
    ontology: &Ontology,
    noise: DetNoiseParams,
    rng: &mut R,
) -> Result<SceneGraph> {
    noise.validate()?;
    let attributes: Vec<&String> = ontology.attribute_vocab().iter().collect();
    let mut out = scene.clone();
    for object in &mut out.objects {
        if rng.gen_bool(noise.p_name) {
            let category = ontology
                .category_of(&object.name)
                .ok_or_else(|| Error::InvalidParams(format!("unknown name `{}`", object.name)))?;
            let others: Vec<&String> = ontology
                .members(category)
                .into_iter()
                .flatten()
                .filter(|n| **n != object.name)
                .collect();
            if let Some(replacement) = others.choose(rng) {
                object.name = (*replacement).clone();
            }
        }
        for slot in 0..object.attributes.len() {
            if rng.gen_bool(noise.p_attr) {
                let candidates: Vec<&&String> = attributes
                    .iter()
                    .filter(|a| !object.attributes.contains(a))
                    .collect();
                if let Some(replacement) = candidates.choose(rng) {
                    object.attributes[slot] = (**replacement).clone();
                }
            }
        }
    }
    Ok(out)
}
