use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::data::{SceneGraph, SceneObject};
use crate::error::{Error, Result};
use crate::features::EmbeddingTable;
use crate::scalar::Scalar;

/// Per-object feature vector: name embedding ⊕ mean attribute embedding ⊕ box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector<T> {
    pub name_slot: Vec<T>,
    pub attr_slot: Vec<T>,
    pub box_slot: [T; 4],
}

impl<T: Scalar> FeatureVector<T> {
    /// `2D + 4`.
    pub fn len(&self) -> usize {
        self.name_slot.len() + self.attr_slot.len() + 4
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_flat(&self) -> Vec<T> {
        let mut flat = Vec::with_capacity(self.len());
        self.write_flat(&mut flat);
        flat
    }

    pub fn write_flat(&self, out: &mut Vec<T>) {
        out.extend_from_slice(&self.name_slot);
        out.extend_from_slice(&self.attr_slot);
        out.extend_from_slice(&self.box_slot);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageFeatures<T> {
    pub image_id: String,
    pub vectors: BTreeMap<String, FeatureVector<T>>,
}

impl<T: Scalar> ImageFeatures<T> {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn ids(&self) -> BTreeSet<String> {
        self.vectors.keys().cloned().collect()
    }
}

fn attribute_mean<T: Scalar>(attributes: &[String], table: &EmbeddingTable<T>) -> Vec<T> {
    let mut mean = vec![T::zero(); table.dim()];
    if attributes.is_empty() {
        return mean;
    }
    for attribute in attributes {
        for (m, v) in mean.iter_mut().zip(table.embed(attribute)) {
            *m = *m + v;
        }
    }
    let count = T::from_usize(attributes.len()).expect("attribute count fits scalar");
    mean.iter_mut().for_each(|m| *m = *m / count);
    mean
}

pub fn object_features<T: Scalar>(
    object: &SceneObject,
    table: &EmbeddingTable<T>,
) -> FeatureVector<T> {
    FeatureVector {
        name_slot: table.embed(&object.name),
        attr_slot: attribute_mean(&object.attributes, table),
        box_slot: object.bbox.map(T::lit),
    }
}

/// One feature vector per scene object.
pub fn symbolic_features<T: Scalar>(
    scene: &SceneGraph,
    table: &EmbeddingTable<T>,
) -> ImageFeatures<T> {
    ImageFeatures {
        image_id: scene.image_id.clone(),
        vectors: scene
            .objects
            .iter()
            .map(|o| (o.object_id.clone(), object_features(o, table)))
            .collect(),
    }
}

/// Restricts features to `keep_ids`. Dropped objects are removed, not zeroed.
pub fn modulate<T: Scalar>(
    features: &ImageFeatures<T>,
    keep_ids: &BTreeSet<String>,
) -> Result<ImageFeatures<T>> {
    if keep_ids.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    let mut vectors = BTreeMap::new();
    for id in keep_ids {
        let v = features
            .vectors
            .get(id)
            .ok_or_else(|| Error::MissingObject(id.clone()))?;
        vectors.insert(id.clone(), v.clone());
    }
    Ok(ImageFeatures {
        image_id: features.image_id.clone(),
        vectors,
    })
}

/// Infusion: rewrites name and attribute slots of every relevant object from
/// the ground-truth scene. Irrelevant vectors are copied untouched.
pub fn infuse<T: Scalar>(
    det_features: &ImageFeatures<T>,
    gt_scene: &SceneGraph,
    relevant_ids: &BTreeSet<String>,
    table: &EmbeddingTable<T>,
) -> Result<ImageFeatures<T>> {
    let mut out = det_features.clone();
    for id in relevant_ids {
        let vector = out
            .vectors
            .get_mut(id)
            .ok_or_else(|| Error::MissingObject(id.clone()))?;
        let gt = gt_scene
            .object(id)
            .ok_or_else(|| Error::MissingObject(id.clone()))?;
        vector.name_slot = table.embed(&gt.name);
        vector.attr_slot = attribute_mean(&gt.attributes, table);
    }
    Ok(out)
}

/// Sets the name slot of every id in `edited` to the embedding of `name`.
pub fn apply_name_edit<T: Scalar>(
    features: &ImageFeatures<T>,
    edited: &BTreeSet<String>,
    name: &str,
    table: &EmbeddingTable<T>,
) -> Result<ImageFeatures<T>> {
    let embedding = table.embed(name);
    let mut out = features.clone();
    for id in edited {
        out.vectors
            .get_mut(id)
            .ok_or_else(|| Error::MissingObject(id.clone()))?
            .name_slot = embedding.clone();
    }
    Ok(out)
}
