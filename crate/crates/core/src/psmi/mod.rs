//! PSMI: an offline index of potential similar words over the whole vocabulary.
//!
//! For every vocabulary word the index keeps the list of words whose cosine
//! exceeds the build threshold, in descending similarity. The lists live at
//! the leaves of a frequency-built Huffman tree. Matching an image pair then
//! needs no vector arithmetic: each word of A walks its list and stops at the
//! first entry that occurs in B, which is the maximum over B.

mod huffman;

use std::cell::RefCell;
use std::cmp::Ordering;

use rayon::prelude::*;

pub use huffman::{HuffmanNode, HuffmanTree};

use crate::error::{contract, Error, Result};
use crate::matching::{check_pair, Matcher};
use crate::model::{ImageObject, MatchOutcome, SimilarityThreshold, VisualWord, Vocabulary};
use crate::vector::{dot, dot4, settle, unit_components};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsimEntry {
    pub word_id: u32,
    pub sim: f64,
}

/// Potential similar words of one owner word, most similar first.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PsimList {
    entries: Vec<PsimEntry>,
}

impl PsimList {
    /// Sorts by similarity descending; among equal similarities the owner
    /// comes first, then ascending word id.
    pub fn new(owner: u32, mut entries: Vec<PsimEntry>) -> Self {
        entries.sort_by(|x, y| entry_order(owner, x, y));
        Self { entries }
    }

    pub fn entries(&self) -> &[PsimEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn is_canonical(&self, owner: u32) -> bool {
        self.entries
            .windows(2)
            .all(|w| entry_order(owner, &w[0], &w[1]) == Ordering::Less)
    }
}

fn entry_order(owner: u32, x: &PsimEntry, y: &PsimEntry) -> Ordering {
    y.sim
        .total_cmp(&x.sim)
        .then_with(|| (y.word_id == owner).cmp(&(x.word_id == owner)))
        .then_with(|| x.word_id.cmp(&y.word_id))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsimIndex {
    tree: HuffmanTree<PsimList>,
    threshold: SimilarityThreshold,
    vocab_checksum: u64,
    dim: usize,
}

/// Builds the index: every pair of vocabulary words is compared once.
///
/// Runs on the current rayon pool; the result does not depend on the number
/// of threads.
pub fn build_psmi_index(vocab: &Vocabulary, threshold: SimilarityThreshold) -> Result<PsimIndex> {
    let k = vocab.len();
    let d = vocab.dim();
    let mut units = Vec::with_capacity(k * d);
    for e in vocab.entries() {
        units.extend(unit_components(e.vector.as_slice())?);
    }
    let row = |i: usize| &units[i * d..(i + 1) * d];
    let t = threshold.value();

    // Upper triangle, one row per task: hits (j, sim) for j > i.
    let upper: Vec<Vec<(u32, f64)>> = (0..k)
        .into_par_iter()
        .map(|i| {
            let q = row(i);
            let mut hits = Vec::new();
            let mut keep = |j: usize, raw: f64| {
                let s = settle(raw, q, row(j));
                if s > t {
                    hits.push((j as u32, s));
                }
            };
            let mut j = i + 1;
            while j + 4 <= k {
                let r = dot4(q, row(j), row(j + 1), row(j + 2), row(j + 3));
                for (o, raw) in r.into_iter().enumerate() {
                    keep(j + o, raw);
                }
                j += 4;
            }
            for j in j..k {
                keep(j, dot(q, row(j)));
            }
            hits
        })
        .collect();

    let mut lists: Vec<Vec<PsimEntry>> = (0..k as u32)
        .map(|id| vec![PsimEntry { word_id: id, sim: 1.0 }])
        .collect();
    for (i, hits) in upper.into_iter().enumerate() {
        for (j, sim) in hits {
            lists[i].push(PsimEntry { word_id: j, sim });
            lists[j as usize].push(PsimEntry {
                word_id: i as u32,
                sim,
            });
        }
    }
    let leaves = vocab
        .entries()
        .iter()
        .zip(lists)
        .map(|(e, entries)| (e.word_id, e.frequency, PsimList::new(e.word_id, entries)))
        .collect();
    Ok(PsimIndex {
        tree: HuffmanTree::build(leaves),
        threshold,
        vocab_checksum: vocab.checksum(),
        dim: d,
    })
}

impl PsimIndex {
    /// Reassembles an index from stored parts, checking every list invariant.
    /// `lists[i]` belongs to word `i`.
    pub fn from_parts(
        dim: usize,
        threshold: SimilarityThreshold,
        vocab_checksum: u64,
        lists: Vec<(u64, Vec<PsimEntry>)>,
    ) -> Result<Self> {
        if lists.is_empty() {
            return Err(Error::Format("index has no words".into()));
        }
        if dim == 0 {
            return Err(Error::Format("index dimension is zero".into()));
        }
        let k = lists.len();
        let mut leaves = Vec::with_capacity(k);
        for (owner, (frequency, entries)) in lists.into_iter().enumerate() {
            let owner = owner as u32;
            let list = PsimList { entries };
            let bad = |why: &str| Err(Error::Format(format!("list of word {owner}: {why}")));
            if !list.is_canonical(owner) {
                return bad("entries not in canonical order");
            }
            match list.entries.first() {
                Some(e) if e.word_id == owner && e.sim == 1.0 => {}
                _ => return bad("missing self entry"),
            }
            let mut seen = std::collections::HashSet::new();
            for e in &list.entries {
                if !seen.insert(e.word_id) {
                    return bad("word listed twice");
                }
                if e.word_id as usize >= k {
                    return bad("entry refers to an unknown word");
                }
                if !(e.sim > threshold.value() && e.sim <= 1.0) {
                    return bad("similarity outside (threshold, 1]");
                }
            }
            leaves.push((owner, frequency, list));
        }
        Ok(Self {
            tree: HuffmanTree::build(leaves),
            threshold,
            vocab_checksum,
            dim,
        })
    }

    pub fn threshold(&self) -> SimilarityThreshold {
        self.threshold
    }

    pub fn vocab_checksum(&self) -> u64 {
        self.vocab_checksum
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tree.leaf_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tree(&self) -> &HuffmanTree<PsimList> {
        &self.tree
    }

    /// The potential similar word list of `word_id`.
    pub fn huffman_search(&self, word_id: u32) -> Result<&PsimList> {
        self.tree
            .leaf(word_id)
            .map(|(_, list)| list)
            .ok_or(Error::NotFound(word_id))
    }

    /// `(word_id, frequency, list)` for every word in id order.
    pub fn lists(&self) -> impl Iterator<Item = (u32, u64, &PsimList)> {
        self.tree.payloads()
    }

    /// Errors unless the index was built over `vocab`.
    pub fn check_vocabulary(&self, vocab: &Vocabulary) -> Result<()> {
        if vocab.checksum() != self.vocab_checksum || vocab.len() != self.len() || vocab.dim() != self.dim {
            return Err(Error::Compatibility(format!(
                "index built for vocabulary {:016x}, got {:016x}",
                self.vocab_checksum,
                vocab.checksum()
            )));
        }
        Ok(())
    }
}

/// Word id -> smallest B index holding it, as a dense table over the
/// vocabulary. Entries are valid only when stamped with the current
/// generation, so a reset costs nothing until the generation counter wraps.
#[derive(Default)]
struct Presence {
    /// (stamp, slot) side by side so a probe touches one cache line.
    cells: Vec<(u32, u32)>,
    generation: u32,
}

impl Presence {
    fn reset(&mut self, k: usize) {
        if self.cells.len() < k {
            self.cells.resize(k, (0, 0));
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.cells.fill((0, 0));
            self.generation = 1;
        }
    }

    fn insert(&mut self, id: u32, j: usize) {
        let cell = &mut self.cells[id as usize];
        if cell.0 != self.generation {
            *cell = (self.generation, j as u32);
        }
    }

    fn get(&self, id: u32) -> Option<usize> {
        let (stamp, slot) = self.cells[id as usize];
        (stamp == self.generation).then_some(slot as usize)
    }
}

thread_local! {
    static PRESENCE: RefCell<Presence> = RefCell::default();
}

fn word_id(img: &ImageObject, w: &VisualWord, k: usize) -> Result<u32> {
    match w.word_id {
        None => Err(Error::Precondition(format!(
            "image '{}' has words without a vocabulary id",
            img.image_id
        ))),
        Some(id) if id as usize >= k => Err(Error::NotFound(id)),
        Some(id) => Ok(id),
    }
}

/// Matches A against B through the index.
///
/// Requires vocabulary-valued words and `threshold >= index.threshold()`.
pub fn psmi_match(
    a: &ImageObject,
    b: &ImageObject,
    threshold: SimilarityThreshold,
    index: &PsimIndex,
) -> Result<MatchOutcome> {
    if threshold < index.threshold {
        return Err(Error::Precondition(format!(
            "query threshold {threshold} is below the index build threshold {}",
            index.threshold
        )));
    }
    check_pair(a, b)?;
    if a.dim() != Some(index.dim) {
        return Err(contract("image dimension differs from the index"));
    }
    let k = index.len();
    if let Some(w) = a.words.iter().find(|w| w.word_id.is_none_or(|id| id as usize >= k)) {
        word_id(a, w, k)?;
    }

    let t = threshold.value();
    let best = PRESENCE.with_borrow_mut(|present| {
        present.reset(k);
        for (j, w) in b.words.iter().enumerate() {
            present.insert(word_id(b, w, k)?, j);
        }
        a.words
            .iter()
            .map(|w| {
                let id = w.word_id.unwrap_or_default();
                let list = index.huffman_search(id)?.entries();
                let mut hit: Option<(usize, f64)> = None;
                for e in list {
                    if e.sim <= t {
                        break;
                    }
                    if let Some(top) = hit {
                        // Equal-similarity entries: the smallest B index wins, as in a scan.
                        if e.sim < top.1 {
                            break;
                        }
                        if let Some(j) = present.get(e.word_id) {
                            if j < top.0 {
                                hit = Some((j, e.sim));
                            }
                        }
                    } else if let Some(j) = present.get(e.word_id) {
                        hit = Some((j, e.sim));
                    }
                }
                Ok(hit)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(MatchOutcome::from_best(best))
}

pub fn psmi_similarity(
    a: &ImageObject,
    b: &ImageObject,
    threshold: SimilarityThreshold,
    index: &PsimIndex,
) -> Result<f64> {
    Psmi::new(index).similarity(a, b, threshold)
}

/// The precomputed-index matcher.
#[derive(Clone, Copy, Debug)]
pub struct Psmi<'a> {
    index: &'a PsimIndex,
}

impl<'a> Psmi<'a> {
    pub fn new(index: &'a PsimIndex) -> Self {
        Self { index }
    }
}

impl Matcher for Psmi<'_> {
    fn name(&self) -> &'static str {
        "psmi"
    }

    fn match_images(
        &self,
        a: &ImageObject,
        b: &ImageObject,
        threshold: SimilarityThreshold,
    ) -> Result<MatchOutcome> {
        psmi_match(a, b, threshold, self.index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::smin_match;
    use crate::model::{VocabEntry, WordPair};
    use crate::vector::FeatureVector;

    fn vocab3() -> Vocabulary {
        let e = |id, f, x: [f64; 2]| VocabEntry {
            word_id: id,
            frequency: f,
            vector: FeatureVector::new(x.to_vec()).unwrap(),
        };
        Vocabulary::new(vec![e(0, 5, [1.0, 0.0]), e(1, 3, [0.8, 0.6]), e(2, 1, [0.0, 1.0])]).unwrap()
    }

    fn mu0(x: f64) -> SimilarityThreshold {
        SimilarityThreshold::new(x).unwrap()
    }

    fn img(vocab: &Vocabulary, ids: &[u32]) -> ImageObject {
        ImageObject::new("t", ids.iter().map(|i| vocab.word(*i, 1.0).unwrap()).collect())
    }

    fn pairs(list: &PsimList) -> Vec<(u32, f64)> {
        list.entries().iter().map(|e| (e.word_id, e.sim)).collect()
    }

    #[test]
    fn build_three_word_vocabulary() {
        let idx = build_psmi_index(&vocab3(), mu0(0.7)).unwrap();
        let close = |got: Vec<(u32, f64)>, want: &[(u32, f64)]| {
            assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(want) {
                assert_eq!(g.0, w.0);
                assert!((g.1 - w.1).abs() < 1e-12);
            }
        };
        close(pairs(idx.huffman_search(0).unwrap()), &[(0, 1.0), (1, 0.8)]);
        close(pairs(idx.huffman_search(1).unwrap()), &[(1, 1.0), (0, 0.8)]);
        close(pairs(idx.huffman_search(2).unwrap()), &[(2, 1.0)]);
        assert_eq!(idx.tree().depth(0), Some(1));
        assert_eq!(idx.tree().depth(1), Some(2));
        assert_eq!(idx.tree().depth(2), Some(2));
        assert!(matches!(idx.huffman_search(99), Err(Error::NotFound(99))));
    }

    #[test]
    fn high_threshold_keeps_only_self() {
        let idx = build_psmi_index(&vocab3(), mu0(0.999)).unwrap();
        for (id, _, list) in idx.lists() {
            assert_eq!(pairs(list), vec![(id, 1.0)]);
        }
    }

    #[test]
    fn match_examples() {
        let v = vocab3();
        let idx = build_psmi_index(&v, mu0(0.7)).unwrap();
        let o = psmi_match(&img(&v, &[0]), &img(&v, &[1, 2]), mu0(0.7), &idx).unwrap();
        assert_eq!(o.pairs.len(), 1);
        assert_eq!((o.pairs[0].a_index, o.pairs[0].b_index), (0, 0));
        assert!((o.mu[0] - 0.8).abs() < 1e-12);

        let o = psmi_match(&img(&v, &[2]), &img(&v, &[0]), mu0(0.7), &idx).unwrap();
        assert_eq!(o.mu, vec![0.0]);

        let o = psmi_match(&img(&v, &[0]), &img(&v, &[0]), mu0(0.95), &idx).unwrap();
        assert_eq!(
            o.pairs,
            vec![WordPair {
                a_index: 0,
                b_index: 0,
                lambda: 1.0
            }]
        );
    }

    #[test]
    fn agrees_with_smin_on_every_small_pair() {
        let v = vocab3();
        let idx = build_psmi_index(&v, mu0(0.5)).unwrap();
        let sets: Vec<Vec<u32>> = vec![
            vec![0],
            vec![1],
            vec![2],
            vec![0, 1],
            vec![1, 0],
            vec![2, 1, 0],
            vec![1, 1, 2],
            vec![2, 2],
        ];
        for t in [0.5, 0.7, 0.79, 0.8, 0.81, 0.99] {
            for a in &sets {
                for b in &sets {
                    let (a, b) = (img(&v, a), img(&v, b));
                    assert_eq!(
                        psmi_match(&a, &b, mu0(t), &idx).unwrap(),
                        smin_match(&a, &b, mu0(t)).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn equal_similarity_entries_pick_smallest_b_index() {
        // words 1 and 2 are mirror images around word 0: same cosine to it
        let e = |id, x: [f64; 2]| VocabEntry {
            word_id: id,
            frequency: 1,
            vector: FeatureVector::new(x.to_vec()).unwrap(),
        };
        let v = Vocabulary::new(vec![e(0, [1.0, 0.0]), e(1, [0.8, 0.6]), e(2, [0.8, -0.6])]).unwrap();
        let idx = build_psmi_index(&v, mu0(0.5)).unwrap();
        let a = img(&v, &[0]);
        let b = img(&v, &[2, 1]);
        let o = psmi_match(&a, &b, mu0(0.5), &idx).unwrap();
        assert_eq!(o, smin_match(&a, &b, mu0(0.5)).unwrap());
        assert_eq!(o.pairs[0].b_index, 0);
    }

    #[test]
    fn preconditions() {
        let v = vocab3();
        let idx = build_psmi_index(&v, mu0(0.7)).unwrap();
        assert!(matches!(
            psmi_match(&img(&v, &[0]), &img(&v, &[0]), mu0(0.5), &idx),
            Err(Error::Precondition(_))
        ));
        let raw = ImageObject::new(
            "raw",
            vec![crate::model::VisualWord::raw(FeatureVector::new(vec![1.0, 0.0]).unwrap(), 1.0).unwrap()],
        );
        assert!(matches!(
            psmi_match(&raw, &img(&v, &[0]), mu0(0.7), &idx),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn from_parts_rejects_broken_lists() {
        let ok = || vec![(1u64, vec![PsimEntry { word_id: 0, sim: 1.0 }])];
        assert!(PsimIndex::from_parts(2, mu0(0.5), 0, ok()).is_ok());
        let no_self = vec![(1u64, vec![])];
        assert!(PsimIndex::from_parts(2, mu0(0.5), 0, no_self).is_err());
        let ordered = vec![
            (1u64, vec![PsimEntry { word_id: 0, sim: 1.0 }, PsimEntry { word_id: 1, sim: 0.6 }]),
            (1u64, vec![PsimEntry { word_id: 1, sim: 1.0 }]),
        ];
        assert!(PsimIndex::from_parts(2, mu0(0.5), 0, ordered.clone()).is_ok());
        let mut swapped = ordered;
        swapped[0].1.reverse();
        assert!(PsimIndex::from_parts(2, mu0(0.5), 0, swapped).is_err());
        let below = vec![(1u64, vec![PsimEntry { word_id: 0, sim: 1.0 }, PsimEntry { word_id: 0, sim: 0.4 }])];
        assert!(PsimIndex::from_parts(2, mu0(0.5), 0, below).is_err());
    }
}
