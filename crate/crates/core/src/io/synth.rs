//! Seeded synthetic corpora with planted near-duplicates.

use std::collections::HashMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Zipf};

use super::{tfidf_weights, Dataset, ImageRecord, Mass, WordEntry, WordRef};
use crate::error::{domain, Result};
use crate::model::{VocabEntry, Vocabulary};
use crate::similarity::normalize_weights;
use crate::vector::{unit_components, FeatureVector};

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// Vocabulary size.
    pub k: usize,
    /// Embedding dimension.
    pub d: usize,
    /// Total images, duplicates included.
    pub image_count: usize,
    /// Zipf draws per base image (repeats merge, so images may be smaller).
    pub words_per_image: usize,
    pub zipf_exponent: f64,
    /// Share of `image_count` that are perturbed copies of other images.
    pub duplicate_fraction: f64,
    /// Share of a copy's words replaced by random vocabulary words.
    pub rho: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            k: 1024,
            d: 64,
            image_count: 1000,
            words_per_image: 40,
            zipf_exponent: 1.0,
            duplicate_fraction: 0.1,
            rho: 0.1,
        }
    }
}

impl GeneratorConfig {
    pub fn duplicate_count(&self) -> usize {
        (self.image_count as f64 * self.duplicate_fraction).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.d == 0 || self.image_count == 0 || self.words_per_image == 0 {
            return Err(domain("k, d, image_count and words_per_image must be at least 1"));
        }
        if self.k > u32::MAX as usize {
            return Err(domain("vocabulary too large for 32-bit word ids"));
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return Err(domain("zipf exponent must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.duplicate_fraction) || !(0.0..=1.0).contains(&self.rho) {
            return Err(domain("duplicate_fraction and rho must lie in [0, 1]"));
        }
        if self.duplicate_count() >= self.image_count {
            return Err(domain("at least one image must not be a duplicate"));
        }
        Ok(())
    }
}

/// Uniformly distributed unit vectors.
pub fn random_vocabulary(k: usize, d: usize, rng: &mut impl Rng) -> Result<Vec<FeatureVector>> {
    (0..k)
        .map(|_| loop {
            let raw: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            if let Ok(unit) = unit_components(&raw) {
                break FeatureVector::new(unit);
            }
        })
        .collect()
}

/// Zipf-distributed word ids; rank 1 is word 0.
pub fn zipf_sampler(k: usize, exponent: f64) -> Result<Zipf<f64>> {
    Zipf::new(k as f64, exponent).map_err(|e| domain(format!("zipf: {e}")))
}

pub(crate) fn draw_id(zipf: &Zipf<f64>, rng: &mut impl Rng) -> u32 {
    rng.sample(zipf) as u32 - 1
}

/// A near-duplicate of `source`: `round(rho · len)` words, at random
/// positions, swapped for uniformly drawn vocabulary words; every weight is
/// scaled by a factor in `[0.9, 1.1)` and the result renormalized.
pub fn perturb(source: &[(u32, f64)], rho: f64, k: usize, rng: &mut impl Rng) -> Result<Vec<(u32, f64)>> {
    let mut words = source.to_vec();
    let replace = (rho * words.len() as f64).round() as usize;
    for pos in index::sample(rng, words.len(), replace.min(words.len())) {
        words[pos].0 = rng.random_range(0..k as u32);
    }
    let jittered: Vec<f64> = words
        .iter()
        .map(|(_, w)| w * rng.random_range(0.9..1.1))
        .collect();
    let weights = normalize_weights(&jittered)?;
    Ok(words.iter().zip(weights).map(|((id, _), w)| (*id, w)).collect())
}

/// Generates a vocabulary, base images with tf-idf weights and perturbed
/// copies. Copies follow the base images and name their source in
/// `duplicate_of`. Vocabulary frequencies count draws over the base images.
pub fn generate_synthetic(config: &GeneratorConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vectors = random_vocabulary(config.k, config.d, &mut rng)?;
    let zipf = zipf_sampler(config.k, config.zipf_exponent)?;

    let n_dup = config.duplicate_count();
    let n_base = config.image_count - n_dup;
    let mut frequency = vec![0u64; config.k];
    let mut base = Vec::with_capacity(n_base);
    for i in 0..n_base {
        let mut counts: Vec<(u32, u32)> = Vec::new();
        let mut slot: HashMap<u32, usize> = HashMap::new();
        for _ in 0..config.words_per_image {
            let id = draw_id(&zipf, &mut rng);
            frequency[id as usize] += 1;
            match slot.get(&id) {
                Some(&s) => counts[s].1 += 1,
                None => {
                    slot.insert(id, counts.len());
                    counts.push((id, 1));
                }
            }
        }
        base.push(ImageRecord {
            image_id: format!("img{i:06}"),
            words: counts
                .into_iter()
                .map(|(id, c)| WordEntry {
                    word: WordRef::Id(id),
                    mass: Mass::Count(c),
                })
                .collect(),
            duplicate_of: None,
        });
    }
    let vocab = Vocabulary::new(
        vectors
            .into_iter()
            .enumerate()
            .map(|(id, vector)| VocabEntry {
                word_id: id as u32,
                frequency: frequency[id],
                vector,
            })
            .collect(),
    )?;
    let weighted = tfidf_weights(&Dataset::new(base, Some(vocab.clone()))?)?;

    let mut records = weighted.records;
    for i in 0..n_dup {
        let src = rng.random_range(0..n_base);
        let words = perturb(&records[src].id_weights()?, config.rho, config.k, &mut rng)?;
        let mut dup = ImageRecord::weighted(format!("dup{i:06}"), words);
        dup.duplicate_of = Some(records[src].image_id.clone());
        records.push(dup);
    }
    Dataset::new(records, Some(vocab))
}
