//! Binary PSMI index file.
//!
//! All integers little-endian, floats IEEE-754 binary64:
//!
//! ```text
//! "PSMI"            4 bytes magic
//! version           u32 (= 1)
//! K                 u32 vocabulary size
//! d                 u32 vector dimension
//! threshold         f64 build threshold μ0
//! vocab checksum    u64 FNV-1a of the vocabulary
//! K times, ascending word id:
//!     frequency     u64
//!     entry count   u32
//!     entries       (word id u32, sim f64) * count
//! trailer           u64 FNV-1a of every preceding byte
//! ```
//!
//! The Huffman tree is not stored; it is rebuilt from the frequencies.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Fnv1a, SimilarityThreshold, Vocabulary};
use crate::psmi::{PsimEntry, PsimIndex};

const MAGIC: &[u8; 4] = b"PSMI";
const VERSION: u32 = 1;

pub fn encode_psmi(index: &PsimIndex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(index.len() as u32).to_le_bytes());
    out.extend_from_slice(&(index.dim() as u32).to_le_bytes());
    out.extend_from_slice(&index.threshold().value().to_le_bytes());
    out.extend_from_slice(&index.vocab_checksum().to_le_bytes());
    for (_, frequency, list) in index.lists() {
        out.extend_from_slice(&frequency.to_le_bytes());
        out.extend_from_slice(&(list.len() as u32).to_le_bytes());
        for e in list.entries() {
            out.extend_from_slice(&e.word_id.to_le_bytes());
            out.extend_from_slice(&e.sim.to_le_bytes());
        }
    }
    let mut h = Fnv1a::new();
    h.write(&out);
    out.extend_from_slice(&h.finish().to_le_bytes());
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .at
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.at)))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_psmi(bytes: &[u8]) -> Result<PsimIndex> {
    if bytes.len() < 8 + 28 || &bytes[..4] != MAGIC {
        return Err(Error::Format("not a PSMI index (bad magic or too short)".into()));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 8);
    let mut h = Fnv1a::new();
    h.write(body);
    if h.finish() != u64::from_le_bytes(trailer.try_into().unwrap()) {
        return Err(Error::Format("checksum mismatch: file is corrupted or truncated".into()));
    }
    let mut c = Cursor { bytes: body, at: 4 };
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported index version {version}")));
    }
    let k = c.u32()? as usize;
    let dim = c.u32()? as usize;
    let threshold = SimilarityThreshold::new(c.f64()?)
        .map_err(|e| Error::Format(format!("bad threshold: {e}")))?;
    let checksum = c.u64()?;
    // every word needs at least 12 bytes, so K cannot exceed what is left
    if k > (body.len() - c.at) / 12 {
        return Err(Error::Format(format!("word count {k} exceeds file size")));
    }
    let mut lists = Vec::with_capacity(k);
    for _ in 0..k {
        let frequency = c.u64()?;
        let n = c.u32()? as usize;
        if n > (body.len() - c.at) / 12 {
            return Err(Error::Format("entry count exceeds file size".into()));
        }
        let mut entries = Vec::with_capacity(n);
        for _ in 0..n {
            entries.push(PsimEntry {
                word_id: c.u32()?,
                sim: c.f64()?,
            });
        }
        lists.push((frequency, entries));
    }
    if c.at != body.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after the last list",
            body.len() - c.at
        )));
    }
    PsimIndex::from_parts(dim, threshold, checksum, lists)
}

pub fn save_psmi(index: &PsimIndex, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_psmi(index))?;
    Ok(())
}

/// Loads an index; when `vocab` is given it must be the build vocabulary.
pub fn load_psmi(path: impl AsRef<Path>, vocab: Option<&Vocabulary>) -> Result<PsimIndex> {
    let index = decode_psmi(&fs::read(path)?)?;
    if let Some(v) = vocab {
        index.check_vocabulary(v)?;
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VocabEntry;
    use crate::psmi::build_psmi_index;
    use crate::vector::FeatureVector;

    fn vocab(freq0: u64) -> Vocabulary {
        let e = |id, f, x: [f64; 2]| VocabEntry {
            word_id: id,
            frequency: f,
            vector: FeatureVector::new(x.to_vec()).unwrap(),
        };
        Vocabulary::new(vec![e(0, freq0, [1.0, 0.0]), e(1, 3, [0.8, 0.6]), e(2, 1, [0.0, 1.0])]).unwrap()
    }

    fn index() -> PsimIndex {
        build_psmi_index(&vocab(5), SimilarityThreshold::new(0.5).unwrap()).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = encode_psmi(&index());
        assert_eq!(&bytes[..4], b"PSMI");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 0.5);
        assert_eq!(
            u64::from_le_bytes(bytes[24..32].try_into().unwrap()),
            vocab(5).checksum()
        );
        // word 0: frequency 5, two entries
        assert_eq!(u64::from_le_bytes(bytes[32..40].try_into().unwrap()), 5);
        assert_eq!(u32::from_le_bytes(bytes[40..44].try_into().unwrap()), 2);
        // cos = 0.8, 0.0, 0.6: lists of 2, 3 and 2 entries
        assert_eq!(bytes.len(), 32 + 3 * 12 + 7 * 12 + 8);
    }

    #[test]
    fn round_trip() {
        let idx = index();
        let back = decode_psmi(&encode_psmi(&idx)).unwrap();
        assert_eq!(back, idx);
        assert_eq!(encode_psmi(&back), encode_psmi(&idx));
    }

    #[test]
    fn truncation_and_corruption() {
        let bytes = encode_psmi(&index());
        for cut in [0, 3, 20, 40, bytes.len() - 1] {
            assert!(matches!(decode_psmi(&bytes[..cut]), Err(Error::Format(_))), "cut {cut}");
        }
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(decode_psmi(&bad_magic), Err(Error::Format(_))));
        let mut flipped = bytes.clone();
        flipped[50] ^= 0x10;
        assert!(matches!(decode_psmi(&flipped), Err(Error::Format(_))));
    }

    #[test]
    fn wrong_version_is_a_format_error() {
        let mut bytes = encode_psmi(&index());
        bytes[4] = 2;
        let n = bytes.len() - 8;
        let mut h = Fnv1a::new();
        h.write(&bytes[..n]);
        let sum = h.finish().to_le_bytes();
        bytes[n..].copy_from_slice(&sum);
        assert!(matches!(decode_psmi(&bytes), Err(Error::Format(m)) if m.contains("version")));
    }

    #[test]
    fn vocabulary_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.psmi");
        save_psmi(&index(), &path).unwrap();
        assert!(load_psmi(&path, Some(&vocab(5))).is_ok());
        assert!(matches!(
            load_psmi(&path, Some(&vocab(6))),
            Err(Error::Compatibility(_))
        ));
    }
}
