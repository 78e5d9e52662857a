//! Similarity of images represented as weighted bags of visual words.
//!
//! Two images are compared by pairing each word of the first with its most
//! similar word of the second (cosine of the word embeddings, kept when above
//! a threshold μ0) and scoring the pairs with a weighted, penalized cosine.
//! The pairing can be computed three ways with identical results:
//!
//! * [`matching::Smin`] scans every word pair,
//! * [`temp_index::Smii`] builds a top-1 index over B for each call,
//! * [`psmi::Psmi`] looks words up in an offline index over the vocabulary.
//!
//! [`io`] holds the file formats and dataset tooling, [`harness`] the
//! benchmark and retrieval evaluation used by the `visim` CLI.

pub mod error;
pub mod harness;
pub mod io;
pub mod matching;
pub mod model;
pub mod psmi;
pub mod similarity;
pub mod temp_index;
pub mod vector;

pub use error::{Error, Result};
pub use matching::{best_match, smin_match, smin_similarity, Matcher, Smin};
pub use model::{
    ImageObject, MatchOutcome, SimilarityThreshold, VisualWord, VocabEntry, Vocabulary, WordPair,
};
pub use psmi::{build_psmi_index, psmi_match, psmi_similarity, Psmi, PsimEntry, PsimIndex, PsimList};
pub use similarity::{image_similarity, normalize_weights};
pub use temp_index::{build_temp_index, smii_match, smii_similarity, Smii, TempIndex};
pub use vector::{cosine, FeatureVector};
