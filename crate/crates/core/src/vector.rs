//! Embedding vectors and the cosine kernel shared by every matcher.
//!
//! All three matchers (and the offline index build) must produce bit-identical
//! cosines, so there is exactly one normalization rule and one summation order:
//! components are divided by the Euclidean norm, then products are summed
//! left to right. Any fast path in this crate keeps that order.

use std::fmt;
use std::sync::Arc;

use crate::error::{contract, domain, Result};

/// Dot products at or above this value are checked for exact unit-vector
/// equality, which pins identical words to a cosine of exactly 1.
const NEAR_ONE: f64 = 1.0 - 1e-6;

/// A dense embedding vector. Cloning shares the underlying storage.
#[derive(Clone, PartialEq)]
pub struct FeatureVector(Arc<[f64]>);

impl FeatureVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(domain("feature vector must have at least one component"));
        }
        if let Some(i) = components.iter().position(|x| !x.is_finite()) {
            return Err(domain(format!("component {i} is not finite")));
        }
        Ok(Self(components.into()))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.0)
    }

    /// Unit-length copy using the shared normalization rule.
    pub fn normalized(&self) -> Result<Self> {
        Ok(Self(unit_components(&self.0)?.into()))
    }

    pub fn is_unit(&self, tolerance: f64) -> bool {
        (self.norm() - 1.0).abs() <= tolerance
    }
}

impl fmt::Debug for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("FeatureVector").field(&&self.0[..]).finish()
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(v: FeatureVector) -> Self {
        v.0.to_vec()
    }
}

pub fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Divides every component by the Euclidean norm.
pub fn unit_components(x: &[f64]) -> Result<Vec<f64>> {
    let norm = l2_norm(x);
    if norm == 0.0 || !norm.is_finite() {
        return Err(domain("cannot normalize a zero-norm vector"));
    }
    Ok(x.iter().map(|v| v / norm).collect())
}

/// Left-to-right dot product.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Four dot products of `q` against four rows at once.
///
/// Each accumulator runs in the same order as [`dot`], so the results are
/// bit-identical to four separate calls; interleaving only buys ILP.
#[inline]
pub(crate) fn dot4(q: &[f64], r0: &[f64], r1: &[f64], r2: &[f64], r3: &[f64]) -> [f64; 4] {
    let d = q.len();
    let (r0, r1, r2, r3) = (&r0[..d], &r1[..d], &r2[..d], &r3[..d]);
    let mut acc = [0.0f64; 4];
    for i in 0..d {
        let x = q[i];
        acc[0] += x * r0[i];
        acc[1] += x * r1[i];
        acc[2] += x * r2[i];
        acc[3] += x * r3[i];
    }
    acc
}

/// Turns a raw dot of two unit vectors into a similarity in `[0, 1]`.
///
/// Equal unit vectors give exactly 1; everything else is clamped.
#[inline]
pub(crate) fn settle(raw: f64, a_unit: &[f64], b_unit: &[f64]) -> f64 {
    if raw >= NEAR_ONE && a_unit == b_unit {
        return 1.0;
    }
    raw.clamp(0.0, 1.0)
}

/// Cosine similarity clamped to `[0, 1]`.
///
/// Normalizes both inputs on the fly, without allocating; the value is
/// bit-identical to [`dot`] over pre-normalized copies followed by the
/// same clamping.
pub fn cosine(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    cosine_slices(a.as_slice(), b.as_slice())
}

pub(crate) fn cosine_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(contract(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let na = l2_norm(a);
    let nb = l2_norm(b);
    if na == 0.0 || nb == 0.0 {
        return Err(domain("cosine of a zero-norm vector is undefined"));
    }
    let mut raw = 0.0;
    for (x, y) in a.iter().zip(b) {
        raw += (x / na) * (y / nb);
    }
    if raw >= NEAR_ONE && a.iter().zip(b).all(|(x, y)| x / na == y / nb) {
        return Ok(1.0);
    }
    Ok(raw.clamp(0.0, 1.0))
}
