//! Image-level similarity over a completed match, and weight normalization.

use crate::error::{contract, domain, Result};
use crate::model::{ImageObject, MatchOutcome};

/// Similarity of `a` to `b` given the outcome of matching `a` against `b`.
///
/// ```text
///                      Σ_k λ_k ξa_k ξb_k
/// ───────────────────────────────────────────────────────────
/// √(Σ ξa · Σ ξb) · √(Σ_k λ_k² ξa_k ξb_k + Ua · Ub)
/// ```
///
/// `k` runs over the pairs, `ξb_k` is the weight of the B word chosen by pair
/// `k` (reused if several A words chose it), `Ua` sums the weights of
/// unmatched A words and `Ub` those of B words no pair chose.
pub fn image_similarity(a: &ImageObject, b: &ImageObject, outcome: &MatchOutcome) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    outcome.check_against(a.len(), b.len())?;
    Ok(similarity_unchecked(a, b, outcome))
}

/// [`image_similarity`] without input validation; used on hot paths where the
/// outcome was just produced by a matcher over validated images.
pub(crate) fn similarity_unchecked(a: &ImageObject, b: &ImageObject, outcome: &MatchOutcome) -> f64 {
    if outcome.pairs.is_empty() {
        return 0.0;
    }
    let mut numerator = 0.0;
    let mut lambda_sq = 0.0;
    for p in &outcome.pairs {
        let xa = a.words[p.a_index].weight;
        let xb = b.words[p.b_index].weight;
        numerator += p.lambda * xa * xb;
        lambda_sq += p.lambda * p.lambda * xa * xb;
    }
    let total_a: f64 = a.words.iter().map(|w| w.weight).sum();
    let total_b: f64 = b.words.iter().map(|w| w.weight).sum();
    let unmatched_a: f64 = a
        .words
        .iter()
        .zip(&outcome.mu)
        .filter(|(_, mu)| **mu == 0.0)
        .map(|(w, _)| w.weight)
        .sum();
    let unmatched_b: f64 = b
        .words
        .iter()
        .enumerate()
        .filter(|(j, _)| !outcome.matched_b.contains(j))
        .map(|(_, w)| w.weight)
        .sum();
    let s = numerator / ((total_a * total_b).sqrt() * (lambda_sq + unmatched_a * unmatched_b).sqrt());
    // bounded by 1 in exact arithmetic; rounding can overshoot by an ulp
    s.min(1.0)
}

/// Scales positive raw weights so that the largest becomes exactly 1.
pub fn normalize_weights(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(contract("no weights to normalize"));
    }
    if let Some(bad) = raw.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(domain(format!("raw weight {bad} must be positive and finite")));
    }
    let max = raw.iter().copied().fold(f64::MIN, f64::max);
    Ok(raw.iter().map(|x| x / max).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{VisualWord, WordPair};
    use crate::vector::FeatureVector;

    fn image(weights: &[f64]) -> ImageObject {
        let words = weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let mut x = vec![0.0; weights.len()];
                x[i] = 1.0;
                VisualWord::raw(FeatureVector::new(x).unwrap(), *w).unwrap()
            })
            .collect();
        ImageObject::new("t", words)
    }

    fn outcome(m: usize, pairs: &[(usize, usize, f64)]) -> MatchOutcome {
        let mut best = vec![None; m];
        for &(a, b, l) in pairs {
            best[a] = Some((b, l));
        }
        MatchOutcome::from_best(best)
    }

    #[test]
    fn single_perfect_pair() {
        // 1 / (sqrt(1*1) * sqrt(1 + 0)) = 1
        let s = image_similarity(&image(&[1.0]), &image(&[1.0]), &outcome(1, &[(0, 0, 1.0)])).unwrap();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn no_pairs_is_zero() {
        let s = image_similarity(&image(&[0.3, 1.0]), &image(&[1.0]), &outcome(2, &[])).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn one_of_two_pairs() {
        // 0.9 / (sqrt(2*2) * sqrt(0.81 + 1*1)) computed by hand = 0.334481...
        let expected = 0.9 / (2.0 * 1.81f64.sqrt());
        assert!((expected - 0.33448).abs() < 1e-5);
        let s = image_similarity(
            &image(&[1.0, 1.0]),
            &image(&[1.0, 1.0]),
            &outcome(2, &[(0, 0, 0.9)]),
        )
        .unwrap();
        assert!((s - 0.33448).abs() < 1e-5);
    }

    #[test]
    fn identical_two_word_images_give_inverse_sqrt_two() {
        // 2 / (sqrt(2*2) * sqrt(2 + 0)) = 1/sqrt(2)
        let s = image_similarity(
            &image(&[1.0, 1.0]),
            &image(&[1.0, 1.0]),
            &outcome(2, &[(0, 0, 1.0), (1, 1, 1.0)]),
        )
        .unwrap();
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn reused_b_word_counts_per_pair() {
        // A = two words both matched to B[0]; B[1] unmatched.
        // numerator 1*0.5*1 + 0.8*1*1 = 1.3; sqrt(1.5 * 1.5) = 1.5;
        // lambda part 0.5 + 0.64 = 1.14, Ua*Ub = 0 * 0.5
        let a = image(&[0.5, 1.0]);
        let b = image(&[1.0, 0.5]);
        let s = image_similarity(&a, &b, &outcome(2, &[(0, 0, 1.0), (1, 0, 0.8)])).unwrap();
        let expected = 1.3 / (1.5 * 1.14f64.sqrt());
        assert!((s - expected).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let empty = ImageObject::new("e", vec![]);
        assert!(matches!(
            image_similarity(&empty, &image(&[1.0]), &outcome(0, &[])),
            Err(crate::Error::Domain(_))
        ));
        let mut heavy = image(&[1.0]);
        heavy.words[0].weight = 1.2;
        assert!(image_similarity(&heavy, &image(&[1.0]), &outcome(1, &[])).is_err());
        let bad = MatchOutcome {
            pairs: vec![WordPair {
                a_index: 0,
                b_index: 5,
                lambda: 1.0,
            }],
            mu: vec![1.0],
            matched_b: [5].into_iter().collect(),
        };
        assert!(matches!(
            image_similarity(&image(&[1.0]), &image(&[1.0]), &bad),
            Err(crate::Error::Contract(_))
        ));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_weights(&[2.0, 1.0]).unwrap(), vec![1.0, 0.5]);
        assert_eq!(normalize_weights(&[5.0]).unwrap(), vec![1.0]);
        let w = normalize_weights(&[0.693, 0.549]).unwrap();
        assert_eq!(w[0], 1.0);
        assert!((w[1] - 0.7922).abs() < 1e-4);
        assert!(normalize_weights(&[1.0, 0.0]).is_err());
        assert!(normalize_weights(&[1.0, f64::INFINITY]).is_err());
        assert!(normalize_weights(&[-1.0]).is_err());
    }
}
