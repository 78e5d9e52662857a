//! Shared generators and reference implementations for the integration
//! tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use visim::{FeatureVector, ImageObject, SimilarityThreshold, VisualWord, VocabEntry, Vocabulary};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn unit(x: &[f64]) -> Vec<f64> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter().map(|v| v / n).collect()
}

/// Clustered unit vocabulary: groups of eight words scattered around shared
/// centres at varying spread, so pairwise cosines cover the whole range of
/// thresholds instead of concentrating near 0 in high dimension.
pub fn clustered_vocab(k: usize, d: usize, seed: u64) -> Vocabulary {
    let mut r = rng(seed);
    let mut centre = unit(&gaussian(d, &mut r));
    let entries = (0..k)
        .map(|id| {
            if id % 8 == 0 {
                centre = unit(&gaussian(d, &mut r));
            }
            let spread: f64 = r.random_range(0.0..1.5);
            let noise = unit(&gaussian(d, &mut r));
            let v: Vec<f64> = centre.iter().zip(&noise).map(|(c, e)| c + spread * e).collect();
            VocabEntry {
                word_id: id as u32,
                frequency: r.random_range(0..1000),
                vector: FeatureVector::new(unit(&v)).unwrap(),
            }
        })
        .collect();
    Vocabulary::new(entries).unwrap()
}

pub fn weight(rng: &mut impl Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Vocabulary-valued image; ids drawn uniformly and may repeat.
pub fn vocab_image(vocab: &Vocabulary, size: usize, rng: &mut impl Rng) -> ImageObject {
    let words = (0..size)
        .map(|_| {
            let id = rng.random_range(0..vocab.len() as u32);
            vocab.word(id, weight(rng)).unwrap()
        })
        .collect();
    ImageObject::new("v", words)
}

/// Image of raw, non-normalized vectors.
pub fn raw_image(d: usize, size: usize, rng: &mut impl Rng) -> ImageObject {
    let words = (0..size)
        .map(|_| VisualWord::raw(FeatureVector::new(gaussian(d, rng)).unwrap(), weight(rng)).unwrap())
        .collect();
    ImageObject::new("r", words)
}

pub fn threshold(x: f64) -> SimilarityThreshold {
    SimilarityThreshold::new(x).unwrap()
}

// ---------------------------------------------------------------------------
// Reference implementations. Written from the definitions, sharing nothing
// with the library beyond its public value types.

/// Cosine of two vectors in [0, 1]: normalize, sum products in index order,
/// report exactly 1 for identical directions and clamp otherwise.
pub fn ref_cosine(a: &[f64], b: &[f64]) -> f64 {
    let ua = unit(a);
    let ub = unit(b);
    let mut s = 0.0;
    for i in 0..ua.len() {
        s += ua[i] * ub[i];
    }
    if ua == ub {
        return 1.0;
    }
    s.clamp(0.0, 1.0)
}

#[derive(Debug, PartialEq)]
pub struct RefMatch {
    /// (a index, b index, lambda) in ascending a index.
    pub pairs: Vec<(usize, usize, f64)>,
    pub mu: Vec<f64>,
    pub matched_b: BTreeSet<usize>,
}

/// Double loop over every (a, b) word pair; first maximum wins.
pub fn ref_match(a: &ImageObject, b: &ImageObject, mu0: f64) -> RefMatch {
    let mut pairs = Vec::new();
    let mut mu = vec![0.0; a.len()];
    let mut matched_b = BTreeSet::new();
    for (i, wa) in a.words.iter().enumerate() {
        let mut best_j = usize::MAX;
        let mut best = -1.0;
        for (j, wb) in b.words.iter().enumerate() {
            let c = ref_cosine(wa.vector.as_slice(), wb.vector.as_slice());
            if c > best {
                best = c;
                best_j = j;
            }
        }
        if best > mu0 {
            pairs.push((i, best_j, best));
            mu[i] = best;
            matched_b.insert(best_j);
        }
    }
    RefMatch { pairs, mu, matched_b }
}

/// The weighted, penalized cosine over a reference match.
pub fn ref_similarity(a: &ImageObject, b: &ImageObject, m: &RefMatch) -> f64 {
    if m.pairs.is_empty() {
        return 0.0;
    }
    let xa = |i: usize| a.words[i].weight;
    let xb = |j: usize| b.words[j].weight;
    let mut num = 0.0;
    let mut sq = 0.0;
    for &(i, j, lambda) in &m.pairs {
        num += lambda * xa(i) * xb(j);
        sq += lambda * lambda * xa(i) * xb(j);
    }
    let sum_a: f64 = (0..a.len()).map(xa).sum();
    let sum_b: f64 = (0..b.len()).map(xb).sum();
    let ua: f64 = (0..a.len()).filter(|i| m.mu[*i] == 0.0).map(xa).sum();
    let ub: f64 = (0..b.len()).filter(|j| !m.matched_b.contains(j)).map(xb).sum();
    // the value cannot exceed 1; cap rounding overshoot
    (num / ((sum_a * sum_b).sqrt() * (sq + ua * ub).sqrt())).min(1.0)
}

pub fn same_match(lib: &visim::MatchOutcome, r: &RefMatch) -> bool {
    let pairs: Vec<(usize, usize, f64)> = lib.pairs.iter().map(|p| (p.a_index, p.b_index, p.lambda)).collect();
    pairs == r.pairs && lib.mu == r.mu && lib.matched_b == r.matched_b
}

/// Huffman weighted path length by the textbook sort-and-merge procedure:
/// keep a sorted list and repeatedly merge its two smallest values; the sum
/// of all merge results equals Σ freq · depth of an optimal code.
pub fn ref_huffman_cost(freqs: &[u64]) -> u128 {
    if freqs.len() == 1 {
        return 0;
    }
    let mut list: Vec<u128> = freqs.iter().map(|&f| u128::from(f)).collect();
    let mut cost = 0;
    while list.len() > 1 {
        list.sort_unstable_by(|x, y| y.cmp(x));
        let x = list.pop().unwrap();
        let y = list.pop().unwrap();
        cost += x + y;
        list.push(x + y);
    }
    cost
}
