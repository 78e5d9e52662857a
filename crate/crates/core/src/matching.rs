//! Directional word matching and the naive double-loop matcher (SMIN).
//!
//! Every word `a_i` of A is matched independently to its most similar word of
//! B; the pair is kept when that similarity is strictly above μ0. Several A
//! words may pick the same B word. Ties on the maximum go to the smallest B
//! index so all matchers agree bit for bit.

use crate::error::{contract, domain, Result};
use crate::model::{ImageObject, MatchOutcome, SimilarityThreshold, VisualWord};
use crate::similarity::similarity_unchecked;
use crate::vector::cosine;

/// A strategy for computing the directional match of A against B.
pub trait Matcher {
    fn name(&self) -> &'static str;

    fn match_images(
        &self,
        a: &ImageObject,
        b: &ImageObject,
        threshold: SimilarityThreshold,
    ) -> Result<MatchOutcome>;

    /// Match, then evaluate the image similarity over the outcome.
    fn similarity(
        &self,
        a: &ImageObject,
        b: &ImageObject,
        threshold: SimilarityThreshold,
    ) -> Result<f64> {
        let outcome = self.match_images(a, b, threshold)?;
        Ok(similarity_unchecked(a, b, &outcome))
    }
}

/// The most similar word of `b_words` to `a_word`, if it clears the threshold.
///
/// Returns `(0.0, None)` when the best cosine is not strictly above μ0.
pub fn best_match(
    a_word: &VisualWord,
    b_words: &[VisualWord],
    threshold: SimilarityThreshold,
) -> Result<(f64, Option<usize>)> {
    if b_words.is_empty() {
        return Err(domain("cannot match against an empty word list"));
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for (j, b) in b_words.iter().enumerate() {
        let c = cosine(&a_word.vector, &b.vector)?;
        if c > best.0 {
            best = (c, j);
        }
    }
    Ok(if best.0 > threshold.value() {
        (best.0, Some(best.1))
    } else {
        (0.0, None)
    })
}

pub(crate) fn check_pair(a: &ImageObject, b: &ImageObject) -> Result<()> {
    a.validate()?;
    b.validate()?;
    let da = a.dim();
    let db = b.dim();
    let all_same = |img: &ImageObject, d| img.words.iter().all(|w| Some(w.vector.dim()) == d);
    if da != db || !all_same(a, da) || !all_same(b, db) {
        return Err(contract("images mix vector dimensions"));
    }
    Ok(())
}

/// Naive matching: one full scan of B per word of A.
pub fn smin_match(
    a: &ImageObject,
    b: &ImageObject,
    threshold: SimilarityThreshold,
) -> Result<MatchOutcome> {
    check_pair(a, b)?;
    let best = a
        .words
        .iter()
        .map(|w| best_match(w, &b.words, threshold).map(|(mu, j)| j.map(|j| (j, mu))))
        .collect::<Result<Vec<_>>>()?;
    Ok(MatchOutcome::from_best(best))
}

pub fn smin_similarity(a: &ImageObject, b: &ImageObject, threshold: SimilarityThreshold) -> Result<f64> {
    Smin.similarity(a, b, threshold)
}

/// The naive double-loop matcher.
#[derive(Clone, Copy, Debug, Default)]
pub struct Smin;

impl Matcher for Smin {
    fn name(&self) -> &'static str {
        "smin"
    }

    fn match_images(
        &self,
        a: &ImageObject,
        b: &ImageObject,
        threshold: SimilarityThreshold,
    ) -> Result<MatchOutcome> {
        smin_match(a, b, threshold)
    }
}
