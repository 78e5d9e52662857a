//! Frequency-built Huffman tree that stores a payload at every leaf.
//!
//! Merge order is fully determined: the two smallest nodes are merged, where
//! equal frequencies order leaves (by word id) before internal nodes (by
//! creation order). The first node taken becomes the right child (bit 1).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

#[derive(Clone, Debug, PartialEq)]
pub enum HuffmanNode<P> {
    Leaf {
        word_id: u32,
        frequency: u64,
        payload: P,
    },
    Internal {
        frequency: u128,
        left: usize,
        right: usize,
    },
}

impl<P> HuffmanNode<P> {
    pub fn frequency(&self) -> u128 {
        match self {
            HuffmanNode::Leaf { frequency, .. } => u128::from(*frequency),
            HuffmanNode::Internal { frequency, .. } => *frequency,
        }
    }
}

/// Arena-allocated tree with a word id → leaf lookup.
#[derive(Clone, Debug, PartialEq)]
pub struct HuffmanTree<P> {
    nodes: Vec<HuffmanNode<P>>,
    root: usize,
    leaf_of: Vec<usize>,
    parent: Vec<Option<(usize, bool)>>,
}

impl<P> HuffmanTree<P> {
    /// Builds the tree over leaves whose word ids are exactly `0..leaves.len()`.
    ///
    /// # Panics
    ///
    /// If `leaves` is empty or the ids are not a permutation of `0..K`.
    pub fn build(leaves: Vec<(u32, u64, P)>) -> Self {
        assert!(!leaves.is_empty(), "huffman tree needs at least one leaf");
        let k = leaves.len();
        let mut nodes = Vec::with_capacity(2 * k - 1);
        let mut leaf_of = vec![usize::MAX; k];
        // (frequency, 0 = leaf | 1 = internal, word id | creation order, node index)
        let mut heap = BinaryHeap::with_capacity(k);
        for (word_id, frequency, payload) in leaves {
            let slot = &mut leaf_of[word_id as usize];
            assert_eq!(*slot, usize::MAX, "duplicate word id {word_id}");
            *slot = nodes.len();
            heap.push(Reverse((u128::from(frequency), 0u8, u64::from(word_id), nodes.len())));
            nodes.push(HuffmanNode::Leaf {
                word_id,
                frequency,
                payload,
            });
        }
        let mut created = 0u64;
        while heap.len() > 1 {
            let Reverse((f_right, _, _, right)) = heap.pop().unwrap();
            let Reverse((f_left, _, _, left)) = heap.pop().unwrap();
            let frequency = f_right + f_left;
            heap.push(Reverse((frequency, 1, created, nodes.len())));
            created += 1;
            nodes.push(HuffmanNode::Internal {
                frequency,
                left,
                right,
            });
        }
        let root = nodes.len() - 1;
        let mut parent = vec![None; nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            if let HuffmanNode::Internal { left, right, .. } = node {
                parent[*left] = Some((i, false));
                parent[*right] = Some((i, true));
            }
        }
        Self {
            nodes,
            root,
            leaf_of,
            parent,
        }
    }

    pub fn root(&self) -> &HuffmanNode<P> {
        &self.nodes[self.root]
    }

    pub fn node(&self, index: usize) -> &HuffmanNode<P> {
        &self.nodes[index]
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_of.len()
    }

    /// Frequency and payload of the leaf for `word_id`.
    pub fn leaf(&self, word_id: u32) -> Option<(u64, &P)> {
        let idx = *self.leaf_of.get(word_id as usize)?;
        match &self.nodes[idx] {
            HuffmanNode::Leaf {
                frequency, payload, ..
            } => Some((*frequency, payload)),
            HuffmanNode::Internal { .. } => unreachable!("leaf lookup points at an internal node"),
        }
    }

    /// Root-to-leaf bits; `true` is the right (smaller-frequency) branch.
    pub fn code(&self, word_id: u32) -> Option<Vec<bool>> {
        let mut at = *self.leaf_of.get(word_id as usize)?;
        let mut bits = Vec::new();
        while let Some((up, bit)) = self.parent[at] {
            bits.push(bit);
            at = up;
        }
        bits.reverse();
        Some(bits)
    }

    pub fn depth(&self, word_id: u32) -> Option<usize> {
        self.code(word_id).map(|c| c.len())
    }

    /// Σ frequency · depth over all leaves.
    pub fn weighted_path_length(&self) -> u128 {
        (0..self.leaf_of.len() as u32)
            .map(|id| {
                let (f, _) = self.leaf(id).unwrap();
                u128::from(f) * self.depth(id).unwrap() as u128
            })
            .sum()
    }

    /// Payloads in word id order.
    pub fn payloads(&self) -> impl Iterator<Item = (u32, u64, &P)> {
        (0..self.leaf_of.len() as u32).map(move |id| {
            let (f, p) = self.leaf(id).unwrap();
            (id, f, p)
        })
    }
}
