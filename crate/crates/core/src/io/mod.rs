//! Datasets, file formats and corpus tooling.
//!
//! Text files are JSON Lines: one vocabulary entry or one image per line.
//! The PSMI index has a fixed little-endian binary layout, see [`index_file`].

pub mod index_file;
pub mod kmeans;
pub mod synth;
mod text;
pub mod tfidf;

use std::collections::{HashMap, HashSet};

pub use index_file::{decode_psmi, encode_psmi, load_psmi, save_psmi};
pub use kmeans::{assign_to_vocabulary, kmeans_quantize, FeatureSet, KmeansParams, Quantized};
pub use synth::{generate_synthetic, perturb, GeneratorConfig};
pub use text::{load_features, load_images, load_vocabulary, save_features, save_images, save_vocabulary};
pub use tfidf::tfidf_weights;

use crate::error::{Error, Result};
use crate::model::{check_weight, ImageObject, VisualWord, Vocabulary};
use crate::vector::FeatureVector;

#[derive(Clone, Debug, PartialEq)]
pub enum WordRef {
    Id(u32),
    Vector(FeatureVector),
}

/// How much a word counts in its image: a final weight, or a raw occurrence
/// count still waiting for tf-idf weighting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mass {
    Weight(f64),
    Count(u32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WordEntry {
    pub word: WordRef,
    pub mass: Mass,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageRecord {
    pub image_id: String,
    pub words: Vec<WordEntry>,
    /// Ground truth: the image this one is a perturbed copy of.
    pub duplicate_of: Option<String>,
}

impl ImageRecord {
    /// A record of vocabulary words with final weights.
    pub fn weighted(image_id: impl Into<String>, words: impl IntoIterator<Item = (u32, f64)>) -> Self {
        Self {
            image_id: image_id.into(),
            words: words
                .into_iter()
                .map(|(id, w)| WordEntry {
                    word: WordRef::Id(id),
                    mass: Mass::Weight(w),
                })
                .collect(),
            duplicate_of: None,
        }
    }

    /// `(word id, weight)` pairs; fails on inline vectors or counts.
    pub fn id_weights(&self) -> Result<Vec<(u32, f64)>> {
        self.words
            .iter()
            .map(|e| match (&e.word, e.mass) {
                (WordRef::Id(id), Mass::Weight(w)) => Ok((*id, w)),
                _ => Err(Error::Precondition(format!(
                    "image '{}' is not a weighted vocabulary image",
                    self.image_id
                ))),
            })
            .collect()
    }
}

/// A collection of images, optionally tied to a vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub records: Vec<ImageRecord>,
    pub vocab: Option<Vocabulary>,
}

impl Dataset {
    /// Validates ids, weights, counts, vector dimensions and ground-truth links.
    pub fn new(records: Vec<ImageRecord>, vocab: Option<Vocabulary>) -> Result<Self> {
        let invalid = |m: String| Err(Error::Validation(m));
        let mut ids = HashSet::with_capacity(records.len());
        let mut dim = vocab.as_ref().map(Vocabulary::dim);
        for r in &records {
            if !ids.insert(r.image_id.as_str()) {
                return invalid(format!("duplicate image id '{}'", r.image_id));
            }
            if r.words.is_empty() {
                return invalid(format!("image '{}' has no words", r.image_id));
            }
            for e in &r.words {
                match &e.word {
                    WordRef::Id(id) => match &vocab {
                        Some(v) if v.get(*id).is_none() => {
                            return invalid(format!(
                                "image '{}' refers to unknown word {id}",
                                r.image_id
                            ))
                        }
                        _ => {}
                    },
                    WordRef::Vector(v) => match dim {
                        Some(d) if d != v.dim() => {
                            return invalid(format!(
                                "image '{}' has a vector of dimension {}, expected {d}",
                                r.image_id,
                                v.dim()
                            ))
                        }
                        Some(_) => {}
                        None => dim = Some(v.dim()),
                    },
                }
                match e.mass {
                    Mass::Weight(w) => {
                        if check_weight(w).is_err() {
                            return invalid(format!("image '{}' has weight {w}", r.image_id));
                        }
                    }
                    Mass::Count(0) => return invalid(format!("image '{}' has a zero count", r.image_id)),
                    Mass::Count(_) => {}
                }
            }
        }
        for r in &records {
            if let Some(src) = &r.duplicate_of {
                if !ids.contains(src.as_str()) || src == &r.image_id {
                    return invalid(format!(
                        "image '{}' is marked as a duplicate of unknown image '{src}'",
                        r.image_id
                    ));
                }
            }
        }
        Ok(Self { records, vocab })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record(&self, image_id: &str) -> Option<&ImageRecord> {
        self.records.iter().find(|r| r.image_id == image_id)
    }

    /// Materializes one record; vocabulary words share the vocabulary's vectors.
    pub fn image_object(&self, record: &ImageRecord) -> Result<ImageObject> {
        let words = record
            .words
            .iter()
            .map(|e| {
                let weight = match e.mass {
                    Mass::Weight(w) => w,
                    Mass::Count(_) => {
                        return Err(Error::Validation(format!(
                            "image '{}' carries counts; apply tf-idf weighting first",
                            record.image_id
                        )))
                    }
                };
                match &e.word {
                    WordRef::Vector(v) => VisualWord::raw(v.clone(), weight),
                    WordRef::Id(id) => match &self.vocab {
                        Some(v) => v.word(*id, weight),
                        None => Err(Error::Validation(format!(
                            "image '{}' uses word ids but no vocabulary was given",
                            record.image_id
                        ))),
                    },
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ImageObject::new(record.image_id.clone(), words))
    }

    pub fn images(&self) -> Result<Vec<ImageObject>> {
        self.records.iter().map(|r| self.image_object(r)).collect()
    }

    /// `(duplicate, source)` pairs in file order.
    pub fn ground_truth(&self) -> Vec<(&str, &str)> {
        self.records
            .iter()
            .filter_map(|r| r.duplicate_of.as_deref().map(|s| (r.image_id.as_str(), s)))
            .collect()
    }

    pub fn index_of(&self) -> HashMap<&str, usize> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.image_id.as_str(), i))
            .collect()
    }
}
