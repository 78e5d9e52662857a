//! SMII: a per-call exact top-1 cosine index over the words of B.
//!
//! The index stores B's vectors unit-normalized in one contiguous row-major
//! block, so a probe is a single pass of dot products evaluated four rows at a
//! time. It is rebuilt for every image pair; reuse across calls is what the
//! offline index in [`crate::psmi`] provides.

use crate::error::{contract, domain, Result};
use crate::matching::{check_pair, Matcher};
use crate::model::{ImageObject, MatchOutcome, SimilarityThreshold};
use crate::vector::{dot, dot4, settle, unit_components, FeatureVector};

#[derive(Clone, Debug)]
pub struct TempIndex {
    dim: usize,
    len: usize,
    rows: Vec<f64>,
}

pub fn build_temp_index(b: &ImageObject) -> Result<TempIndex> {
    let dim = b
        .dim()
        .ok_or_else(|| domain(format!("image '{}' has no words", b.image_id)))?;
    let mut rows = Vec::with_capacity(dim * b.len());
    for w in &b.words {
        if w.vector.dim() != dim {
            return Err(contract("image mixes vector dimensions"));
        }
        rows.extend(unit_components(w.vector.as_slice())?);
    }
    Ok(TempIndex {
        dim,
        len: b.len(),
        rows,
    })
}

impl TempIndex {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn row(&self, j: usize) -> &[f64] {
        &self.rows[j * self.dim..(j + 1) * self.dim]
    }

    /// Index and cosine of the most similar indexed word; ties go to the
    /// smallest index. No threshold is applied.
    pub fn query_top1(&self, q: &FeatureVector) -> Result<(usize, f64)> {
        if q.dim() != self.dim {
            return Err(contract(format!(
                "query has dimension {}, index has {}",
                q.dim(),
                self.dim
            )));
        }
        let unit = unit_components(q.as_slice())?;
        Ok(self.query_unit(&unit))
    }

    fn query_unit(&self, q: &[f64]) -> (usize, f64) {
        let mut best = (0usize, f64::NEG_INFINITY);
        let mut consider = |j: usize, raw: f64, this: &Self| {
            let c = settle(raw, q, this.row(j));
            if c > best.1 {
                best = (j, c);
            }
        };
        let full = self.len / 4 * 4;
        let mut j = 0;
        while j < full {
            let r = dot4(q, self.row(j), self.row(j + 1), self.row(j + 2), self.row(j + 3));
            for (k, raw) in r.into_iter().enumerate() {
                consider(j + k, raw, self);
            }
            j += 4;
        }
        for j in full..self.len {
            consider(j, dot(q, self.row(j)), self);
        }
        best
    }
}

/// Work done by one [`smii_match_counted`] call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SmiiStats {
    pub builds: usize,
    pub probes: usize,
}

pub fn smii_match(
    a: &ImageObject,
    b: &ImageObject,
    threshold: SimilarityThreshold,
) -> Result<MatchOutcome> {
    smii_match_counted(a, b, threshold).map(|(o, _)| o)
}

/// [`smii_match`] that also reports how many index builds and probes it made.
pub fn smii_match_counted(
    a: &ImageObject,
    b: &ImageObject,
    threshold: SimilarityThreshold,
) -> Result<(MatchOutcome, SmiiStats)> {
    check_pair(a, b)?;
    let mut stats = SmiiStats::default();
    let index = build_temp_index(b)?;
    stats.builds += 1;
    let mut best = Vec::with_capacity(a.len());
    for w in &a.words {
        let unit = unit_components(w.vector.as_slice())?;
        let (j, c) = index.query_unit(&unit);
        stats.probes += 1;
        best.push((c > threshold.value()).then_some((j, c)));
    }
    Ok((MatchOutcome::from_best(best), stats))
}

pub fn smii_similarity(a: &ImageObject, b: &ImageObject, threshold: SimilarityThreshold) -> Result<f64> {
    Smii.similarity(a, b, threshold)
}

/// The temp-index matcher.
#[derive(Clone, Copy, Debug, Default)]
pub struct Smii;

impl Matcher for Smii {
    fn name(&self) -> &'static str {
        "smii"
    }

    fn match_images(
        &self,
        a: &ImageObject,
        b: &ImageObject,
        threshold: SimilarityThreshold,
    ) -> Result<MatchOutcome> {
        smii_match(a, b, threshold)
    }
}
