//! SMIN, SMII and PSMI agree bit for bit, and SMIN agrees with the
//! reference double loop.

mod common;

use std::sync::OnceLock;

use common::*;
use proptest::prelude::*;
use visim::*;

fn image_from(vocab: &Vocabulary, words: &[(u32, f64)]) -> ImageObject {
    ImageObject::new(
        "p",
        words
            .iter()
            .map(|&(id, w)| vocab.word(id % vocab.len() as u32, w).unwrap())
            .collect(),
    )
}

fn words(max: usize) -> impl Strategy<Value = Vec<(u32, f64)>> {
    prop::collection::vec((any::<u32>(), 0.001f64..=1.0), 1..max)
}

/// (K, d) fixtures with indexes at build threshold 0.5.
fn fixtures() -> &'static Vec<(Vocabulary, PsimIndex)> {
    static F: OnceLock<Vec<(Vocabulary, PsimIndex)>> = OnceLock::new();
    F.get_or_init(|| {
        let mut out = Vec::new();
        for (s, (k, d)) in [(64, 2), (64, 16), (64, 256), (1024, 2), (1024, 16), (1024, 256)]
            .into_iter()
            .enumerate()
        {
            let vocab = clustered_vocab(k, d, 100 + s as u64);
            let index = build_psmi_index(&vocab, threshold(0.5)).unwrap();
            out.push((vocab, index));
        }
        out
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn smii_equals_smin_on_raw_vectors(
        d in prop::sample::select(vec![2usize, 16, 256]),
        m in 1usize..24,
        n in 1usize..24,
        seed in any::<u64>(),
        mu0 in 0.0f64..0.99,
    ) {
        let mut r = rng(seed);
        let a = raw_image(d, m, &mut r);
        let b = raw_image(d, n, &mut r);
        let t = threshold(mu0);
        let smin = smin_match(&a, &b, t).unwrap();
        prop_assert_eq!(&smii_match(&a, &b, t).unwrap(), &smin);
        prop_assert_eq!(
            smii_similarity(&a, &b, t).unwrap().to_bits(),
            smin_similarity(&a, &b, t).unwrap().to_bits()
        );
    }

    #[test]
    fn all_matchers_agree_on_vocabulary_images(
        f in 0usize..6,
        a in words(40),
        b in words(40),
        mu0 in prop::sample::select(vec![0.5, 0.7, 0.9]),
    ) {
        let (vocab, index) = &fixtures()[f];
        let a = image_from(vocab, &a);
        let b = image_from(vocab, &b);
        let t = threshold(mu0);
        let smin = smin_match(&a, &b, t).unwrap();
        prop_assert_eq!(&smii_match(&a, &b, t).unwrap(), &smin);
        prop_assert_eq!(&psmi_match(&a, &b, t, index).unwrap(), &smin);
        let s = smin_similarity(&a, &b, t).unwrap();
        prop_assert_eq!(smii_similarity(&a, &b, t).unwrap().to_bits(), s.to_bits());
        prop_assert_eq!(psmi_similarity(&a, &b, t, index).unwrap().to_bits(), s.to_bits());
    }

    #[test]
    fn smin_equals_reference(
        d in prop::sample::select(vec![2usize, 16, 256]),
        m in 1usize..16,
        n in 1usize..16,
        seed in any::<u64>(),
        mu0 in 0.0f64..0.99,
    ) {
        let mut r = rng(seed);
        let a = raw_image(d, m, &mut r);
        let b = raw_image(d, n, &mut r);
        let lib = smin_match(&a, &b, threshold(mu0)).unwrap();
        let reference = ref_match(&a, &b, mu0);
        prop_assert!(same_match(&lib, &reference));
        prop_assert_eq!(
            image_similarity(&a, &b, &lib).unwrap().to_bits(),
            ref_similarity(&a, &b, &reference).to_bits()
        );
    }
}

#[test]
fn psmi_query_threshold_above_build_threshold() {
    let (vocab, index) = &fixtures()[4];
    let mut r = rng(5);
    for _ in 0..200 {
        let a = vocab_image(vocab, 20, &mut r);
        let b = vocab_image(vocab, 20, &mut r);
        for mu0 in [0.55, 0.8, 0.95] {
            let t = threshold(mu0);
            assert_eq!(psmi_match(&a, &b, t, index).unwrap(), smin_match(&a, &b, t).unwrap());
        }
    }
}

#[test]
fn repeated_words_in_b_pick_the_first_copy() {
    let (vocab, index) = &fixtures()[1];
    let a = image_from(vocab, &[(3, 1.0), (9, 0.5)]);
    let b = image_from(vocab, &[(5, 1.0), (3, 0.2), (9, 0.7), (3, 0.9), (9, 0.1)]);
    let t = threshold(0.5);
    let out = psmi_match(&a, &b, t, index).unwrap();
    assert_eq!(out.pairs[0].b_index, 1);
    assert_eq!(out.pairs[1].b_index, 2);
    assert_eq!(out, smin_match(&a, &b, t).unwrap());
}
