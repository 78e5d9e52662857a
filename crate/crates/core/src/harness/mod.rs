//! Benchmark and retrieval evaluation.
//!
//! [`bench`] times the matchers on seeded synthetic image pairs and
//! [`hitrate`] measures near-duplicate retrieval. Both emit CSV rows with
//! fixed columns; only the timing columns vary between runs with one seed.

pub mod bench;
pub mod hitrate;

use std::fmt;
use std::str::FromStr;

pub use bench::{bench_pairs, bench_vocabulary, run_bench, write_bench_csv, BenchConfig, BenchRow, BENCH_HEADER};
pub use hitrate::{run_hitrate, write_hitrate_csv, HitRateConfig, HitRateRow, HITRATE_HEADER};

use crate::error::{domain, Error, Result};
use crate::matching::smin_similarity;
use crate::model::{ImageObject, SimilarityThreshold};
use crate::psmi::{psmi_similarity, PsimIndex};
use crate::temp_index::smii_similarity;
use crate::vector::{dot, unit_components};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Smin,
    Smii,
    Psmi,
    /// Cosine of the weighted mean word vectors.
    Baseline,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Self::Smin, Self::Smii, Self::Psmi, Self::Baseline];

    pub fn name(self) -> &'static str {
        match self {
            Self::Smin => "smin",
            Self::Smii => "smii",
            Self::Psmi => "psmi",
            Self::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smin" => Ok(Self::Smin),
            "smii" => Ok(Self::Smii),
            "psmi" => Ok(Self::Psmi),
            "baseline" | "exhaustive-baseline" => Ok(Self::Baseline),
            _ => Err(domain(format!(
                "unknown algorithm '{s}' (expected smin, smii, psmi or baseline)"
            ))),
        }
    }
}

/// Weighted mean of the unit word vectors, itself unit-normalized.
pub fn mean_vector(img: &ImageObject) -> Result<Vec<f64>> {
    let dim = img
        .dim()
        .ok_or_else(|| domain(format!("image '{}' has no words", img.image_id)))?;
    let mut sum = vec![0.0; dim];
    for w in &img.words {
        for (s, x) in sum.iter_mut().zip(unit_components(w.vector.as_slice())?) {
            *s += w.weight * x;
        }
    }
    unit_components(&sum)
}

/// Baseline score: cosine of the two mean vectors, in [-1, 1].
pub fn baseline_similarity(a: &ImageObject, b: &ImageObject) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    Ok(dot(&mean_vector(a)?, &mean_vector(b)?))
}

/// Scores `a` against `b` with one algorithm. PSMI needs `index`.
pub fn score(
    algo: Algorithm,
    a: &ImageObject,
    b: &ImageObject,
    threshold: SimilarityThreshold,
    index: Option<&PsimIndex>,
) -> Result<f64> {
    match algo {
        Algorithm::Smin => smin_similarity(a, b, threshold),
        Algorithm::Smii => smii_similarity(a, b, threshold),
        Algorithm::Psmi => {
            let index = index.ok_or_else(|| Error::Precondition("psmi needs an index".into()))?;
            psmi_similarity(a, b, threshold, index)
        }
        Algorithm::Baseline => baseline_similarity(a, b),
    }
}

/// Median of a non-empty sample; the mean of the middle two for even sizes.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// `x` rounded to six significant digits, in positional notation.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = 5 - magnitude;
    if decimals >= 0 {
        let s = format!("{:.*}", decimals as usize, x);
        // rounding can carry into a new digit (9.999995 -> 10.00000)
        let rounded: f64 = s.parse().unwrap();
        if rounded.abs().log10().floor() as i32 > magnitude && decimals > 0 {
            return format!("{:.*}", decimals as usize - 1, x);
        }
        s
    } else {
        let scale = 10f64.powi(-decimals);
        format!("{:.0}", (x / scale).round() * scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VisualWord;
    use crate::vector::FeatureVector;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.5), "0.500000");
        assert_eq!(sig6(1.0), "1.00000");
        assert_eq!(sig6(123.4567891), "123.457");
        assert_eq!(sig6(0.000123456789), "0.000123457");
        assert_eq!(sig6(9.999995), "10.0000");
        assert_eq!(sig6(1234567.0), "1234570");
        assert_eq!(sig6(-2.5), "-2.50000");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn median_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("exhaustive-baseline".parse::<Algorithm>().unwrap(), Algorithm::Baseline);
        assert!("wmd".parse::<Algorithm>().is_err());
    }

    fn img(words: &[([f64; 2], f64)]) -> ImageObject {
        ImageObject::new(
            "x",
            words
                .iter()
                .map(|(v, w)| VisualWord::raw(FeatureVector::new(v.to_vec()).unwrap(), *w).unwrap())
                .collect(),
        )
    }

    #[test]
    fn baseline_values() {
        let a = img(&[([1.0, 0.0], 1.0)]);
        let b = img(&[([0.0, 2.0], 1.0)]);
        assert_eq!(baseline_similarity(&a, &b).unwrap(), 0.0);
        // mean of (1,0) and (0,1) is along (1,1)
        let c = img(&[([1.0, 0.0], 1.0), ([0.0, 1.0], 1.0)]);
        let s = baseline_similarity(&a, &c).unwrap();
        assert!((s - 0.5f64.sqrt()).abs() < 1e-15);
        // opposite words cancel
        let z = img(&[([1.0, 0.0], 1.0), ([-1.0, 0.0], 1.0)]);
        assert!(baseline_similarity(&a, &z).is_err());
    }

    #[test]
    fn psmi_score_needs_an_index() {
        let a = img(&[([1.0, 0.0], 1.0)]);
        let t = SimilarityThreshold::new(0.5).unwrap();
        assert!(matches!(score(Algorithm::Psmi, &a, &a, t, None), Err(Error::Precondition(_))));
        assert_eq!(score(Algorithm::Smin, &a, &a, t, None).unwrap(), 1.0);
    }
}
