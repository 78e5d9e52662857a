//! Domain types: visual words, image objects, the vocabulary and match outcomes.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{contract, domain, Error, Result};
use crate::vector::FeatureVector;

/// Norm tolerance for vocabulary vectors.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Similarity threshold μ0 in `[0, 1)`. Word pairs must score strictly above it.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct SimilarityThreshold(f64);

impl SimilarityThreshold {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&value) {
            return Err(domain(format!("similarity threshold {value} outside [0, 1)")));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for SimilarityThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub(crate) fn check_weight(weight: f64) -> Result<()> {
    if weight.is_finite() && weight > 0.0 && weight <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("weight {weight} outside (0, 1]")))
    }
}

/// One visual word of an image: an embedding plus its weight in the image.
#[derive(Clone, Debug, PartialEq)]
pub struct VisualWord {
    pub word_id: Option<u32>,
    pub vector: FeatureVector,
    pub weight: f64,
}

impl VisualWord {
    pub fn new(word_id: Option<u32>, vector: FeatureVector, weight: f64) -> Result<Self> {
        check_weight(weight)?;
        Ok(Self {
            word_id,
            vector,
            weight,
        })
    }

    /// A word that is not tied to any vocabulary entry.
    pub fn raw(vector: FeatureVector, weight: f64) -> Result<Self> {
        Self::new(None, vector, weight)
    }
}

/// An image represented as an ordered bag of weighted visual words.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageObject {
    pub image_id: String,
    pub words: Vec<VisualWord>,
}

impl ImageObject {
    pub fn new(image_id: impl Into<String>, words: Vec<VisualWord>) -> Self {
        Self {
            image_id: image_id.into(),
            words,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Checks the conditions every similarity evaluation relies on.
    pub fn validate(&self) -> Result<()> {
        if self.words.is_empty() {
            return Err(domain(format!("image '{}' has no words", self.image_id)));
        }
        for w in &self.words {
            check_weight(w.weight)?;
        }
        Ok(())
    }

    pub fn dim(&self) -> Option<usize> {
        self.words.first().map(|w| w.vector.dim())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VocabEntry {
    pub word_id: u32,
    pub frequency: u64,
    pub vector: FeatureVector,
}

/// The codebook: `K` unit vectors with corpus frequencies, ids `0..K`.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    dim: usize,
}

impl Vocabulary {
    /// Validates and sorts entries by id.
    pub fn new(mut entries: Vec<VocabEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Validation("vocabulary must have at least one word".into()));
        }
        entries.sort_by_key(|e| e.word_id);
        let dim = entries[0].vector.dim();
        for (expected, e) in entries.iter().enumerate() {
            if e.word_id as usize != expected {
                return Err(Error::Validation(if (e.word_id as usize) < expected {
                    format!("duplicate word id {}", e.word_id)
                } else {
                    format!("word ids not contiguous: missing {expected}")
                }));
            }
            if e.vector.dim() != dim {
                return Err(Error::Validation(format!(
                    "word {} has dimension {}, expected {dim}",
                    e.word_id,
                    e.vector.dim()
                )));
            }
            if !e.vector.is_unit(UNIT_TOLERANCE) {
                return Err(Error::Validation(format!(
                    "word {} is not unit length (norm {})",
                    e.word_id,
                    e.vector.norm()
                )));
            }
        }
        Ok(Self { entries, dim })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn get(&self, word_id: u32) -> Option<&VocabEntry> {
        self.entries.get(word_id as usize)
    }

    /// A weighted word that shares this entry's vector storage.
    pub fn word(&self, word_id: u32, weight: f64) -> Result<VisualWord> {
        let entry = self.get(word_id).ok_or(Error::NotFound(word_id))?;
        VisualWord::new(Some(word_id), entry.vector.clone(), weight)
    }

    /// 64-bit FNV-1a over the canonical byte form of every entry:
    /// word id (u32 LE), frequency (u64 LE), components (f64 LE).
    pub fn checksum(&self) -> u64 {
        let mut h = Fnv1a::new();
        for e in &self.entries {
            h.write(&e.word_id.to_le_bytes());
            h.write(&e.frequency.to_le_bytes());
            for c in e.vector.as_slice() {
                h.write(&c.to_le_bytes());
            }
        }
        h.finish()
    }
}

pub(crate) struct Fnv1a(u64);

impl Fnv1a {
    pub(crate) fn new() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }

    pub(crate) fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}

/// One similar visual word pair: word `a_index` of A matched to `b_index` of B.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WordPair {
    pub a_index: usize,
    pub b_index: usize,
    pub lambda: f64,
}

/// Result of matching every word of A against B.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchOutcome {
    /// Pairs in ascending `a_index` order.
    pub pairs: Vec<WordPair>,
    /// Per word of A: the pair similarity, or 0 when unmatched.
    pub mu: Vec<f64>,
    /// Distinct B indices that appear in `pairs`.
    pub matched_b: BTreeSet<usize>,
}

impl MatchOutcome {
    /// Assembles an outcome from per-A-word best matches, already thresholded.
    pub fn from_best(best: impl IntoIterator<Item = Option<(usize, f64)>>) -> Self {
        let mut pairs = Vec::new();
        let mut mu = Vec::new();
        let mut matched_b = BTreeSet::new();
        for (a_index, hit) in best.into_iter().enumerate() {
            match hit {
                Some((b_index, lambda)) => {
                    pairs.push(WordPair {
                        a_index,
                        b_index,
                        lambda,
                    });
                    matched_b.insert(b_index);
                    mu.push(lambda);
                }
                None => mu.push(0.0),
            }
        }
        Self {
            pairs,
            mu,
            matched_b,
        }
    }

    /// Number of pairs, `l`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Structural consistency against image sizes.
    pub fn check_against(&self, m: usize, n: usize) -> Result<()> {
        if self.mu.len() != m {
            return Err(contract(format!(
                "outcome has {} mu entries for an image of {m} words",
                self.mu.len()
            )));
        }
        let mut seen = vec![false; m];
        for p in &self.pairs {
            if p.a_index >= m || p.b_index >= n {
                return Err(contract(format!(
                    "pair ({}, {}) out of range for images of {m} and {n} words",
                    p.a_index, p.b_index
                )));
            }
            if seen[p.a_index] {
                return Err(contract(format!("word {} of A paired twice", p.a_index)));
            }
            seen[p.a_index] = true;
            if !(p.lambda > 0.0 && p.lambda <= 1.0) || self.mu[p.a_index] != p.lambda {
                return Err(contract(format!(
                    "pair for word {} has inconsistent similarity",
                    p.a_index
                )));
            }
            if !self.matched_b.contains(&p.b_index) {
                return Err(contract(format!("b index {} missing from matched set", p.b_index)));
            }
        }
        if self.matched_b.len() > self.pairs.len()
            || self.matched_b.iter().any(|b| *b >= n)
        {
            return Err(contract("matched set lists indices not used by any pair"));
        }
        Ok(())
    }
}
