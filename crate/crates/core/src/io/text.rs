//! JSON Lines vocabulary and image files.
//!
//! vocabulary: `{"word_id":0,"frequency":5,"vector":[1.0,0.0]}`
//!
//! images: `{"image_id":"a","duplicate_of":"b","words":[{"word_id":3,"weight":0.5},{"vector":[0.6,0.8],"count":2}]}`
//!
//! raw features: `{"image_id":"a","vectors":[[0.1,0.9],[0.7,0.2]]}`
//!
//! A word gives either `word_id` or `vector`, and either `weight` or `count`
//! (neither means a count of 1). `duplicate_of` is optional ground truth.
//! Floats are written in shortest round-trip form.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureSet, ImageRecord, Mass, WordEntry, WordRef};
use crate::error::{Error, Result};
use crate::model::{VocabEntry, Vocabulary};
use crate::vector::FeatureVector;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabLine {
    word_id: u32,
    frequency: u64,
    vector: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageLine {
    image_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    duplicate_of: Option<String>,
    words: Vec<WordLine>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WordLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    word_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vector: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    count: Option<u32>,
}

/// Non-blank lines with their 1-based numbers, parsed as `T`.
fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(usize, T)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, value));
    }
    Ok(out)
}

fn write_lines<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn parse_error(path: &Path, line: usize, e: Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

pub fn load_vocabulary(path: impl AsRef<Path>) -> Result<Vocabulary> {
    let path = path.as_ref();
    let entries = read_lines::<VocabLine>(path)?
        .into_iter()
        .map(|(line, v)| {
            Ok(VocabEntry {
                word_id: v.word_id,
                frequency: v.frequency,
                vector: FeatureVector::new(v.vector).map_err(|e| parse_error(path, line, e))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Vocabulary::new(entries)
}

pub fn save_vocabulary(vocab: &Vocabulary, path: impl AsRef<Path>) -> Result<()> {
    write_lines(
        path.as_ref(),
        vocab.entries().iter().map(|e| VocabLine {
            word_id: e.word_id,
            frequency: e.frequency,
            vector: e.vector.as_slice().to_vec(),
        }),
    )
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureLine {
    image_id: String,
    vectors: Vec<Vec<f64>>,
}

pub fn load_features(path: impl AsRef<Path>) -> Result<Vec<FeatureSet>> {
    let path = path.as_ref();
    read_lines::<FeatureLine>(path)?
        .into_iter()
        .map(|(line, f)| {
            let vectors = f
                .vectors
                .into_iter()
                .map(FeatureVector::new)
                .collect::<Result<Vec<_>>>()
                .map_err(|e| parse_error(path, line, e))?;
            Ok(FeatureSet {
                image_id: f.image_id,
                vectors,
            })
        })
        .collect()
}

pub fn save_features(features: &[FeatureSet], path: impl AsRef<Path>) -> Result<()> {
    write_lines(
        path.as_ref(),
        features.iter().map(|f| FeatureLine {
            image_id: f.image_id.clone(),
            vectors: f.vectors.iter().map(|v| v.as_slice().to_vec()).collect(),
        }),
    )
}

fn word_from_line(w: WordLine) -> std::result::Result<WordEntry, String> {
    let word = match (w.word_id, w.vector) {
        (Some(id), None) => WordRef::Id(id),
        (None, Some(v)) => WordRef::Vector(FeatureVector::new(v).map_err(|e| e.to_string())?),
        _ => return Err("a word needs exactly one of word_id and vector".into()),
    };
    let mass = match (w.weight, w.count) {
        (Some(x), None) => Mass::Weight(x),
        (None, Some(c)) => Mass::Count(c),
        (None, None) => Mass::Count(1),
        (Some(_), Some(_)) => return Err("a word cannot have both weight and count".into()),
    };
    Ok(WordEntry { word, mass })
}

/// Loads an image file; with a vocabulary, word ids are checked against it.
pub fn load_images(path: impl AsRef<Path>, vocab: Option<Vocabulary>) -> Result<Dataset> {
    let path = path.as_ref();
    let records = read_lines::<ImageLine>(path)?
        .into_iter()
        .map(|(line, img)| {
            let words = img
                .words
                .into_iter()
                .map(word_from_line)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|message| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message,
                })?;
            Ok(ImageRecord {
                image_id: img.image_id,
                words,
                duplicate_of: img.duplicate_of,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(records, vocab)
}

pub fn save_images(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_lines(
        path.as_ref(),
        dataset.records.iter().map(|r| ImageLine {
            image_id: r.image_id.clone(),
            duplicate_of: r.duplicate_of.clone(),
            words: r
                .words
                .iter()
                .map(|e| {
                    let (word_id, vector) = match &e.word {
                        WordRef::Id(id) => (Some(*id), None),
                        WordRef::Vector(v) => (None, Some(v.as_slice().to_vec())),
                    };
                    let (weight, count) = match e.mass {
                        Mass::Weight(w) => (Some(w), None),
                        Mass::Count(c) => (None, Some(c)),
                    };
                    WordLine {
                        word_id,
                        vector,
                        weight,
                        count,
                    }
                })
                .collect(),
        }),
    )
}
