//! Near-duplicate retrieval hit rate.
//!
//! The corpus is every image of the dataset that is not itself marked as a
//! duplicate. For each ρ in the grid, every query is a fresh perturbation of
//! a ground-truth source (see [`perturb`]) with a fraction ρ of its words
//! replaced. The corpus is ranked by the score of (query, candidate), the
//! query always being the first argument; equal scores rank by ascending
//! image id. A query hits when its source lands in the top `top_k`.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{score, sig6, Algorithm};
use crate::error::{domain, Error, Result};
use crate::io::{perturb, Dataset};
use crate::model::{ImageObject, SimilarityThreshold};
use crate::psmi::{build_psmi_index, PsimIndex};

pub const HITRATE_HEADER: [&str; 5] = ["rho", "m", "dataset_size", "algo", "hit_rate"];

#[derive(Clone, Debug, PartialEq)]
pub struct HitRateConfig {
    pub algorithms: Vec<Algorithm>,
    /// Queries per ρ: the first `query_count` ground-truth pairs in file order.
    pub query_count: usize,
    pub rhos: Vec<f64>,
    pub top_k: usize,
    pub mu0: f64,
    pub seed: u64,
}

impl Default for HitRateConfig {
    fn default() -> Self {
        Self {
            algorithms: vec![Algorithm::Psmi, Algorithm::Baseline],
            query_count: 100,
            rhos: vec![0.0, 0.1, 0.2, 0.4, 0.8],
            top_k: 1,
            mu0: 0.7,
            seed: 7,
        }
    }
}

impl HitRateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(domain("no algorithms selected"));
        }
        if self.top_k == 0 || self.query_count == 0 {
            return Err(domain("top_k and query_count must be at least 1"));
        }
        if self.rhos.is_empty() || self.rhos.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(domain("rho values must lie in [0, 1]"));
        }
        SimilarityThreshold::new(self.mu0)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HitRateRow {
    pub rho: f64,
    /// Mean number of words per query image.
    pub m: f64,
    /// Number of ranked corpus images.
    pub dataset_size: usize,
    pub algo: String,
    pub hit_rate: f64,
}

impl HitRateRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            sig6(self.rho),
            sig6(self.m),
            self.dataset_size.to_string(),
            self.algo.clone(),
            sig6(self.hit_rate),
        ]
    }
}

pub fn write_hitrate_csv(rows: &[HitRateRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HITRATE_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

/// True when `target` ranks within the first `top_k` of `scores`.
fn ranks_within(scores: &[f64], ids: &[&str], target: usize, top_k: usize) -> bool {
    let t = scores[target];
    let ahead = scores
        .iter()
        .zip(ids)
        .filter(|(s, id)| **s > t || (**s == t && **id < ids[target]))
        .count();
    ahead < top_k
}

/// Rows in ρ-major order, algorithms in configured order.
///
/// PSMI uses `index` when given (it must match the dataset vocabulary and
/// threshold), otherwise an index is built at `mu0`.
pub fn run_hitrate(dataset: &Dataset, config: &HitRateConfig, index: Option<&PsimIndex>) -> Result<Vec<HitRateRow>> {
    config.validate()?;
    let threshold = SimilarityThreshold::new(config.mu0)?;
    let vocab = dataset
        .vocab
        .as_ref()
        .ok_or_else(|| Error::Precondition("hit-rate evaluation needs a vocabulary".into()))?;
    let truth = dataset.ground_truth();
    if truth.is_empty() {
        return Err(domain("dataset has no ground-truth duplicates (duplicate_of)"));
    }
    if truth.len() < config.query_count {
        return Err(domain(format!(
            "{} queries requested but only {} ground-truth pairs exist",
            config.query_count,
            truth.len()
        )));
    }

    let corpus_records: Vec<_> = dataset.records.iter().filter(|r| r.duplicate_of.is_none()).collect();
    let corpus = corpus_records
        .iter()
        .map(|r| dataset.image_object(r))
        .collect::<Result<Vec<ImageObject>>>()?;
    let ids: Vec<&str> = corpus_records.iter().map(|r| r.image_id.as_str()).collect();
    let position = |id: &str| ids.iter().position(|x| *x == id);

    // Source of each query, following duplicate chains back to the corpus.
    let by_id = dataset.index_of();
    let mut sources = Vec::with_capacity(config.query_count);
    for &(_, src) in &truth[..config.query_count] {
        let mut at = src;
        while let Some(next) = dataset.records[by_id[at]].duplicate_of.as_deref() {
            at = next;
        }
        sources.push(position(at).expect("chain ends at a non-duplicate"));
    }
    let source_words = sources
        .iter()
        .map(|&s| corpus_records[s].id_weights())
        .collect::<Result<Vec<_>>>()?;

    let built;
    let index = match index {
        Some(i) => {
            i.check_vocabulary(vocab)?;
            Some(i)
        }
        None if config.algorithms.contains(&Algorithm::Psmi) => {
            built = build_psmi_index(vocab, threshold)?;
            Some(&built)
        }
        None => None,
    };

    let mut rows = Vec::new();
    for &rho in &config.rhos {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let queries = source_words
            .iter()
            .map(|words| {
                let perturbed = perturb(words, rho, vocab.len(), &mut rng)?;
                let words = perturbed
                    .into_iter()
                    .map(|(id, w)| vocab.word(id, w))
                    .collect::<Result<Vec<_>>>()?;
                Ok(ImageObject::new("query", words))
            })
            .collect::<Result<Vec<_>>>()?;
        let m = queries.iter().map(|q| q.len() as f64).sum::<f64>() / queries.len() as f64;
        for &algo in &config.algorithms {
            let hits = queries
                .par_iter()
                .zip(&sources)
                .map(|(q, &src)| {
                    let scores = corpus
                        .iter()
                        .map(|c| score(algo, q, c, threshold, index))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(ranks_within(&scores, &ids, src, config.top_k))
                })
                .collect::<Result<Vec<bool>>>()?;
            rows.push(HitRateRow {
                rho,
                m,
                dataset_size: corpus.len(),
                algo: algo.name().to_string(),
                hit_rate: hits.iter().filter(|h| **h).count() as f64 / hits.len() as f64,
            });
        }
    }
    Ok(rows)
}
