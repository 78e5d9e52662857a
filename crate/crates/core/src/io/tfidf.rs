use std::collections::HashMap;

use super::{Dataset, ImageRecord, Mass, WordEntry, WordRef};
use crate::error::{Error, Result};
use crate::similarity::normalize_weights;

/// Distinct word ids of a count-carrying record with summed counts, in
/// first-occurrence order.
fn aggregate(record: &ImageRecord) -> Result<Vec<(u32, u64)>> {
    let mut order: Vec<(u32, u64)> = Vec::new();
    let mut slot: HashMap<u32, usize> = HashMap::new();
    for e in &record.words {
        let (id, c) = match (&e.word, e.mass) {
            (WordRef::Id(id), Mass::Count(c)) => (*id, u64::from(c)),
            _ => {
                return Err(Error::Precondition(format!(
                    "tf-idf needs word ids with counts; image '{}' has other entries",
                    record.image_id
                )))
            }
        };
        match slot.get(&id) {
            Some(&i) => order[i].1 += c,
            None => {
                slot.insert(id, order.len());
                order.push((id, c));
            }
        }
    }
    Ok(order)
}

/// Replaces counts by tf-idf weights.
///
/// Raw weight of word `w` in an image is `(count / max_count) · ln(1 + N / df(w))`,
/// with `N` images and `df` the number of images containing `w`; each image is
/// then scaled so its largest weight is 1. Repeated ids are merged first.
pub fn tfidf_weights(dataset: &Dataset) -> Result<Dataset> {
    let counts = dataset
        .records
        .iter()
        .map(aggregate)
        .collect::<Result<Vec<_>>>()?;
    let mut df: HashMap<u32, u64> = HashMap::new();
    for image in &counts {
        for (id, _) in image {
            *df.entry(*id).or_default() += 1;
        }
    }
    let n = counts.len() as f64;
    let records = dataset
        .records
        .iter()
        .zip(counts)
        .map(|(r, image)| {
            let max = image.iter().map(|(_, c)| *c).max().unwrap_or(1) as f64;
            let raw: Vec<f64> = image
                .iter()
                .map(|(id, c)| (*c as f64 / max) * (1.0 + n / df[id] as f64).ln())
                .collect();
            let weights = normalize_weights(&raw)?;
            Ok(ImageRecord {
                image_id: r.image_id.clone(),
                words: image
                    .iter()
                    .zip(weights)
                    .map(|((id, _), w)| WordEntry {
                        word: WordRef::Id(*id),
                        mass: Mass::Weight(w),
                    })
                    .collect(),
                duplicate_of: r.duplicate_of.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(records, dataset.vocab.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counted(id: &str, words: &[(u32, u32)]) -> ImageRecord {
        ImageRecord {
            image_id: id.into(),
            words: words
                .iter()
                .map(|(w, c)| WordEntry {
                    word: WordRef::Id(*w),
                    mass: Mass::Count(*c),
                })
                .collect(),
            duplicate_of: None,
        }
    }

    fn weights(ds: &Dataset, i: usize) -> Vec<f64> {
        ds.records[i].id_weights().unwrap().into_iter().map(|(_, w)| w).collect()
    }

    #[test]
    fn two_image_example() {
        // image 0: w1 x2, w2 x1; image 1: w1. N=2, df(w1)=2, df(w2)=1
        // raw: 1 * ln 2 = 0.6931, 0.5 * ln 3 = 0.5493 -> ratio 0.7925
        let ds = Dataset::new(vec![counted("a", &[(1, 2), (2, 1)]), counted("b", &[(1, 1)])], None).unwrap();
        let out = tfidf_weights(&ds).unwrap();
        let w = weights(&out, 0);
        let expected = 0.5 * 3f64.ln() / 2f64.ln();
        assert_eq!(w[0], 1.0);
        assert!((w[1] - expected).abs() < 1e-12);
        assert!((w[1] - 0.7922).abs() < 1e-3);
    }

    #[test]
    fn repeated_ids_aggregate() {
        let ds = Dataset::new(vec![counted("a", &[(1, 1), (2, 1), (1, 1)])], None).unwrap();
        let out = tfidf_weights(&ds).unwrap();
        let ids: Vec<u32> = out.records[0].id_weights().unwrap().iter().map(|p| p.0).collect();
        assert_eq!(ids, vec![1, 2]);
        assert_eq!(weights(&out, 0), vec![1.0, 0.5]);
    }

    #[test]
    fn uniform_corpus_is_all_ones() {
        let ds = Dataset::new(
            vec![counted("a", &[(0, 2), (1, 2)]), counted("b", &[(0, 2), (1, 2)])],
            None,
        )
        .unwrap();
        let out = tfidf_weights(&ds).unwrap();
        assert_eq!(weights(&out, 0), vec![1.0, 1.0]);
        assert_eq!(weights(&out, 1), vec![1.0, 1.0]);
    }

    #[test]
    fn single_word_images() {
        let ds = Dataset::new(vec![counted("a", &[(3, 7)]), counted("b", &[(4, 1)])], None).unwrap();
        let out = tfidf_weights(&ds).unwrap();
        assert_eq!(weights(&out, 0), vec![1.0]);
        assert_eq!(weights(&out, 1), vec![1.0]);
    }

    #[test]
    fn weighted_input_is_rejected() {
        let ds = Dataset::new(vec![ImageRecord::weighted("a", [(0, 1.0)])], None).unwrap();
        assert!(matches!(tfidf_weights(&ds), Err(Error::Precondition(_))));
    }
}
