//! Response-time sweeps over synthetic image pairs.

use std::hint::black_box;
use std::io::Write;
use std::time::Instant;

use rand::seq::index::sample_weighted;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{median, score, sig6, Algorithm};
use crate::error::{domain, Result};
use crate::io::synth::random_vocabulary;
use crate::model::{ImageObject, SimilarityThreshold, VocabEntry, Vocabulary};
use crate::psmi::build_psmi_index;
use crate::similarity::normalize_weights;

pub const BENCH_HEADER: [&str; 10] = [
    "algo", "pairs", "m", "n", "d", "k", "mu0", "seed", "median_ms", "per_pair_us",
];

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub algorithms: Vec<Algorithm>,
    /// Γ, image pairs timed per repetition.
    pub pairs: usize,
    /// Words per A image; every value is combined with every `n`.
    pub m: Vec<usize>,
    /// Words per B image.
    pub n: Vec<usize>,
    pub d: usize,
    pub k: usize,
    pub mu0: f64,
    pub seed: u64,
    /// Timed repetitions after one untimed warm-up pass.
    pub repetitions: usize,
    /// Exponent of the Zipf law word ids are drawn from.
    pub zipf_exponent: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            algorithms: vec![Algorithm::Smin, Algorithm::Smii, Algorithm::Psmi],
            pairs: 100,
            m: vec![40],
            n: vec![40],
            d: 64,
            k: 1024,
            mu0: 0.7,
            seed: 7,
            repetitions: 3,
            zipf_exponent: 1.0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(domain("no algorithms selected"));
        }
        if self.pairs == 0 {
            return Err(domain("pair count must be at least 1"));
        }
        if self.repetitions < 3 {
            return Err(domain("at least 3 repetitions are required"));
        }
        if self.d == 0 || self.k == 0 {
            return Err(domain("d and k must be at least 1"));
        }
        if self.m.is_empty() || self.n.is_empty() {
            return Err(domain("m and n sweeps must not be empty"));
        }
        if let Some(bad) = self.m.iter().chain(&self.n).find(|x| **x == 0 || **x > self.k) {
            return Err(domain(format!(
                "image size {bad} must lie in 1..={} (distinct words)",
                self.k
            )));
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return Err(domain("zipf exponent must be finite and non-negative"));
        }
        SimilarityThreshold::new(self.mu0)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub algo: String,
    /// `None` on the index build row.
    pub pairs: Option<usize>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub d: usize,
    pub k: usize,
    pub mu0: f64,
    pub seed: u64,
    pub median_ms: f64,
    pub per_pair_us: Option<f64>,
}

impl BenchRow {
    pub fn record(&self) -> Vec<String> {
        let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        vec![
            self.algo.clone(),
            opt(self.pairs),
            opt(self.m),
            opt(self.n),
            self.d.to_string(),
            self.k.to_string(),
            sig6(self.mu0),
            self.seed.to_string(),
            sig6(self.median_ms),
            self.per_pair_us.map(sig6).unwrap_or_default(),
        ]
    }
}

pub fn write_bench_csv(rows: &[BenchRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BENCH_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

/// Vocabulary for timing runs: random unit vectors, frequencies following
/// the same Zipf law as the word draws.
pub fn bench_vocabulary(config: &BenchConfig) -> Result<Vocabulary> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vectors = random_vocabulary(config.k, config.d, &mut rng)?;
    Vocabulary::new(
        vectors
            .into_iter()
            .enumerate()
            .map(|(id, vector)| VocabEntry {
                word_id: id as u32,
                frequency: (config.k as f64 / ((id + 1) as f64).powf(config.zipf_exponent)).ceil() as u64,
                vector,
            })
            .collect(),
    )
}

fn bench_image(vocab: &Vocabulary, size: usize, exponent: f64, rng: &mut impl Rng) -> Result<ImageObject> {
    let ids = sample_weighted(rng, vocab.len(), |i| 1.0 / ((i + 1) as f64).powf(exponent), size)
        .map_err(|e| domain(format!("word sampling: {e}")))?;
    let raw: Vec<f64> = (0..size).map(|_| 1.0 - rng.random::<f64>()).collect();
    let weights = normalize_weights(&raw)?;
    let words = ids
        .into_iter()
        .zip(weights)
        .map(|(id, w)| vocab.word(id as u32, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(ImageObject::new("", words))
}

/// `count` image pairs with `m` and `n` distinct Zipf-drawn words and random
/// weights normalized to a maximum of 1.
pub fn bench_pairs(
    vocab: &Vocabulary,
    count: usize,
    m: usize,
    n: usize,
    exponent: f64,
    rng: &mut impl Rng,
) -> Result<Vec<(ImageObject, ImageObject)>> {
    (0..count)
        .map(|_| {
            Ok((
                bench_image(vocab, m, exponent, rng)?,
                bench_image(vocab, n, exponent, rng)?,
            ))
        })
        .collect()
}

/// Runs the sweep. Rows come in sweep order (m outer, n inner, algorithms in
/// configured order), preceded by a `psmi-build` row when PSMI is selected.
///
/// Each sweep point draws its pairs from its own seeded stream, so the data
/// does not depend on which algorithms run.
pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    config.validate()?;
    let threshold = SimilarityThreshold::new(config.mu0)?;
    let vocab = bench_vocabulary(config)?;
    let row = |algo: &str, pairs, m, n, median_ms, per_pair_us| BenchRow {
        algo: algo.to_string(),
        pairs,
        m,
        n,
        d: config.d,
        k: config.k,
        mu0: config.mu0,
        seed: config.seed,
        median_ms,
        per_pair_us,
    };

    let mut rows = Vec::new();
    let index = if config.algorithms.contains(&Algorithm::Psmi) {
        let start = Instant::now();
        let index = build_psmi_index(&vocab, threshold)?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        rows.push(row("psmi-build", None, None, None, ms, None));
        Some(index)
    } else {
        None
    };

    let mut point = 0u64;
    for &m in &config.m {
        for &n in &config.n {
            point += 1;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(point);
            let pairs = bench_pairs(&vocab, config.pairs, m, n, config.zipf_exponent, &mut rng)?;
            for &algo in &config.algorithms {
                let pass = || -> Result<f64> {
                    let start = Instant::now();
                    let mut acc = 0.0;
                    for (a, b) in &pairs {
                        acc += score(algo, black_box(a), black_box(b), threshold, index.as_ref())?;
                    }
                    black_box(acc);
                    Ok(start.elapsed().as_secs_f64() * 1e3)
                };
                pass()?;
                let times = (0..config.repetitions).map(|_| pass()).collect::<Result<Vec<_>>>()?;
                let ms = median(&times);
                rows.push(row(
                    algo.name(),
                    Some(config.pairs),
                    Some(m),
                    Some(n),
                    ms,
                    Some(ms * 1e3 / config.pairs as f64),
                ));
            }
        }
    }
    Ok(rows)
}
