//! Spherical k-means codebook construction.
//!
//! Points and centroids live on the unit sphere and are compared by dot
//! product. Initialization is k-means++ with `1 - cos` as the sampling
//! weight; each centroid update is the normalized sum of its members, and a
//! centroid that loses all members keeps its previous position.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, ImageRecord, Mass, WordEntry, WordRef};
use crate::error::{domain, Result};
use crate::model::{VocabEntry, Vocabulary};
use crate::vector::{dot, l2_norm, unit_components, FeatureVector};

/// Raw local features of one image.
#[derive(Clone, Debug)]
pub struct FeatureSet {
    pub image_id: String,
    pub vectors: Vec<FeatureVector>,
}

#[derive(Clone, Copy, Debug)]
pub struct KmeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Stop once no centroid moves further than this (Euclidean).
    pub tolerance: f64,
}

impl KmeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iterations: 100,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Quantized {
    pub vocab: Vocabulary,
    /// One record per input image, with per-word occurrence counts.
    pub dataset: Dataset,
    /// Mean cosine of points to their assigned centroid, one value per
    /// assignment pass.
    pub objective: Vec<f64>,
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>], labels: &mut [usize]) -> f64 {
    let mut total = 0.0;
    for (p, label) in points.iter().zip(labels.iter_mut()) {
        let mut best = (0, f64::NEG_INFINITY);
        for (c, centroid) in centroids.iter().enumerate() {
            let s = dot(p, centroid);
            if s > best.1 {
                best = (c, s);
            }
        }
        *label = best.0;
        total += best.1;
    }
    total / points.len() as f64
}

fn init_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut closest: Vec<f64> = points.iter().map(|p| 1.0 - dot(p, &centroids[0])).collect();
    while centroids.len() < k {
        let weights: Vec<f64> = closest.iter().map(|d| d.max(0.0)).collect();
        let pick = match WeightedIndex::new(&weights) {
            Ok(w) => w.sample(rng),
            // every point already coincides with a centroid
            Err(_) => rng.random_range(0..points.len()),
        };
        let c = points[pick].clone();
        for (d, p) in closest.iter_mut().zip(points) {
            *d = d.min(1.0 - dot(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Clusters all features into a `k`-word vocabulary and counts each image's
/// words. Word ids follow the order in which clusters first receive a point.
pub fn kmeans_quantize(features: &[FeatureSet], params: KmeansParams) -> Result<Quantized> {
    let k = params.k;
    let points: Vec<Vec<f64>> = features
        .iter()
        .flat_map(|f| f.vectors.iter())
        .map(|v| unit_components(v.as_slice()))
        .collect::<Result<_>>()?;
    if k == 0 || points.len() < k {
        return Err(domain(format!(
            "cannot form {k} clusters from {} points",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(domain("features mix vector dimensions"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centroids = init_plus_plus(&points, k, &mut rng);
    let mut labels = vec![0usize; points.len()];
    let mut objective = Vec::new();

    for _ in 0..params.max_iterations {
        objective.push(assign(&points, &centroids, &mut labels));
        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &l) in points.iter().zip(&labels) {
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut moved: f64 = 0.0;
        for (centroid, sum) in centroids.iter_mut().zip(sums) {
            if l2_norm(&sum) == 0.0 {
                continue;
            }
            let next = unit_components(&sum)?;
            let shift = centroid
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            moved = moved.max(shift);
            *centroid = next;
        }
        if moved <= params.tolerance {
            break;
        }
    }
    objective.push(assign(&points, &centroids, &mut labels));

    // Relabel by first assignment; untouched clusters go last.
    let mut relabel = vec![usize::MAX; k];
    let mut next = 0;
    for &l in &labels {
        if relabel[l] == usize::MAX {
            relabel[l] = next;
            next += 1;
        }
    }
    for r in relabel.iter_mut().filter(|r| **r == usize::MAX) {
        *r = next;
        next += 1;
    }
    let mut frequency = vec![0u64; k];
    for &l in &labels {
        frequency[relabel[l]] += 1;
    }
    let mut ordered = vec![Vec::new(); k];
    for (old, c) in centroids.into_iter().enumerate() {
        ordered[relabel[old]] = c;
    }
    let entries = ordered
        .into_iter()
        .enumerate()
        .map(|(id, c)| {
            Ok(VocabEntry {
                word_id: id as u32,
                frequency: frequency[id],
                vector: FeatureVector::new(c)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let vocab = Vocabulary::new(entries)?;

    let mut at = 0;
    let mut records = Vec::with_capacity(features.len());
    for f in features {
        let mut counts: Vec<(u32, u32)> = Vec::new();
        let mut slot: HashMap<u32, usize> = HashMap::new();
        for _ in &f.vectors {
            let id = relabel[labels[at]] as u32;
            at += 1;
            match slot.get(&id) {
                Some(&i) => counts[i].1 += 1,
                None => {
                    slot.insert(id, counts.len());
                    counts.push((id, 1));
                }
            }
        }
        records.push(ImageRecord {
            image_id: f.image_id.clone(),
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
    let dataset = Dataset::new(records, Some(vocab.clone()))?;
    Ok(Quantized {
        vocab,
        dataset,
        objective,
    })
}

/// Nearest-word assignment of raw features against an existing vocabulary.
pub fn assign_to_vocabulary(features: &[FeatureSet], vocab: &Vocabulary) -> Result<Dataset> {
    let centroids: Vec<Vec<f64>> = vocab
        .entries()
        .iter()
        .map(|e| unit_components(e.vector.as_slice()))
        .collect::<Result<_>>()?;
    let mut records = Vec::with_capacity(features.len());
    for f in features {
        let points = f
            .vectors
            .iter()
            .map(|v| {
                if v.dim() != vocab.dim() {
                    return Err(domain("feature dimension differs from the vocabulary"));
                }
                unit_components(v.as_slice())
            })
            .collect::<Result<Vec<_>>>()?;
        let mut labels = vec![0; points.len()];
        assign(&points, &centroids, &mut labels);
        records.push(ImageRecord {
            image_id: f.image_id.clone(),
            words: labels
                .into_iter()
                .map(|l| WordEntry {
                    word: WordRef::Id(l as u32),
                    mass: Mass::Count(1),
                })
                .collect(),
            duplicate_of: None,
        });
    }
    Dataset::new(records, Some(vocab.clone()))
}
