//! Nodes of the full binary tree, chains of comparable nodes, and
//! order-isomorphic embeddings of finite full binary trees.
//!
//! Nodes are ordered canonically by length first and then lexicographically
//! on their bits. Every "least" choice made elsewhere in the crate refers to
//! this order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A node of `2^{<N}`: a finite 0/1 sequence, the root being empty.
///
/// The bits are packed most-significant first, so that for nodes of equal
/// length the numeric order of `bits` is the lexicographic order. The derived
/// ordering (length, then bits) is the canonical node order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString {
    len: u8,
    bits: u64,
}

impl BitString {
    /// Longest representable node. The node code `1·bits` must fit in a `u64`.
    pub const MAX_LEN: usize = 63;

    pub const fn root() -> Self {
        BitString { len: 0, bits: 0 }
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.len() > Self::MAX_LEN {
            return Err(Error::InvalidInput(format!(
                "node length {} exceeds {}",
                bits.len(),
                Self::MAX_LEN
            )));
        }
        let mut node = Self::root();
        for &b in bits {
            if b > 1 {
                return Err(Error::InvalidInput(format!("bit value {b}")));
            }
            node = node.child(b);
        }
        Ok(node)
    }

    /// Node of length `len` whose bits, read as a binary numeral, equal `bits`.
    pub fn from_parts(len: usize, bits: u64) -> Self {
        debug_assert!(len <= Self::MAX_LEN);
        debug_assert!(len == 64 || bits >> len == 0);
        BitString { len: len as u8, bits }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_root(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Bit at position `i` (0 is the first step below the root).
    pub fn bit(&self, i: usize) -> u8 {
        assert!(i < self.len());
        ((self.bits >> (self.len() - 1 - i)) & 1) as u8
    }

    /// `self⌢ε`.
    #[inline]
    pub fn child(&self, e: u8) -> Self {
        debug_assert!(e <= 1 && self.len() < Self::MAX_LEN);
        BitString { len: self.len + 1, bits: (self.bits << 1) | u64::from(e) }
    }

    pub fn parent(&self) -> Option<Self> {
        (self.len > 0).then(|| BitString { len: self.len - 1, bits: self.bits >> 1 })
    }

    /// Initial segment of length `len` (which must not exceed `self.len()`).
    #[inline]
    pub fn prefix(&self, len: usize) -> Self {
        debug_assert!(len <= self.len());
        BitString { len: len as u8, bits: self.bits >> (self.len() - len) }
    }

    /// Concatenation `self⌢tail`.
    pub fn concat(&self, tail: &BitString) -> Self {
        debug_assert!(self.len() + tail.len() <= Self::MAX_LEN);
        BitString { len: self.len + tail.len, bits: (self.bits << tail.len) | tail.bits }
    }

    /// `self ⊆ other`.
    #[inline]
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        self.len <= other.len && other.bits >> (other.len - self.len) == self.bits
    }

    /// `self ⊂ other`.
    #[inline]
    pub fn is_proper_prefix_of(&self, other: &BitString) -> bool {
        self.len < other.len && self.is_prefix_of(other)
    }

    #[inline]
    pub fn comparable(&self, other: &BitString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// The integer `1·bits`; injective over all nodes.
    #[inline]
    pub fn code(&self) -> u64 {
        (1u64 << self.len) | self.bits
    }

    /// Position in breadth-first (canonical) order: `code - 1`.
    #[inline]
    pub fn heap_index(&self) -> usize {
        (self.code() - 1) as usize
    }

    pub fn from_heap_index(index: usize) -> Self {
        let code = index as u64 + 1;
        let len = 63 - code.leading_zeros() as usize;
        BitString { len: len as u8, bits: code ^ (1u64 << len) }
    }

    /// Proper extensions of `self` of length at most `max_len`, in canonical order.
    pub fn extensions(&self, max_len: usize) -> impl Iterator<Item = BitString> + '_ {
        let base = *self;
        (base.len() + 1..=max_len).flat_map(move |len| {
            let shift = len - base.len();
            let lo = base.bits << shift;
            (lo..lo + (1u64 << shift)).map(move |bits| BitString::from_parts(len, bits))
        })
    }
}

/// Number of nodes of the full binary tree of depth `depth` (levels `0..=depth`).
pub fn full_tree_size(depth: usize) -> usize {
    (1usize << (depth + 1)) - 1
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.bit(i) == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{self}>")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .bytes()
            .map(|c| match c {
                b'0' => Ok(0),
                b'1' => Ok(1),
                _ => Err(Error::InvalidInput(format!("node string {s:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        BitString::from_bits(&bits)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// A strictly increasing tuple of pairwise comparable nodes.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Chain(Vec<BitString>);

impl Chain {
    pub fn new(nodes: Vec<BitString>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidChain("empty chain".into()));
        }
        if let Some(w) = nodes.windows(2).find(|w| !w[0].is_proper_prefix_of(&w[1])) {
            return Err(Error::InvalidChain(format!("{} is not a proper prefix of {}", w[0], w[1])));
        }
        Ok(Chain(nodes))
    }

    /// Caller guarantees the chain invariant.
    pub(crate) fn new_unchecked(nodes: Vec<BitString>) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0].is_proper_prefix_of(&w[1])));
        Chain(nodes)
    }

    pub fn nodes(&self) -> &[BitString] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn last(&self) -> &BitString {
        self.0.last().expect("chains are nonempty")
    }

    pub fn into_nodes(self) -> Vec<BitString> {
        self.0
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<'de> Deserialize<'de> for Chain {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let nodes = Vec::<BitString>::deserialize(deserializer)?;
        Chain::new(nodes).map_err(de::Error::custom)
    }
}

/// Finite stand-in for `2^{<N}`: levels `0..=depth` with an optional
/// membership predicate closed under initial segments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedTree {
    depth: usize,
    members: Option<Vec<bool>>,
}

impl TruncatedTree {
    pub fn full(depth: usize) -> Self {
        assert!(depth <= BitString::MAX_LEN);
        TruncatedTree { depth, members: None }
    }

    /// Tree consisting of the given nodes; fails unless the set is nonempty
    /// and closed under initial segments.
    pub fn from_members<I: IntoIterator<Item = BitString>>(depth: usize, nodes: I) -> Result<Self> {
        if depth > 20 {
            return Err(Error::InvalidInput(format!("membership trees are limited to depth 20, got {depth}")));
        }
        let mut members = vec![false; full_tree_size(depth)];
        for n in nodes {
            if n.len() > depth {
                return Err(Error::DepthMismatch { len: n.len(), depth });
            }
            members[n.heap_index()] = true;
        }
        if !members[0] {
            return Err(Error::InvalidInput("membership tree lacks the root".into()));
        }
        for (i, &m) in members.iter().enumerate().skip(1) {
            let node = BitString::from_heap_index(i);
            if m && !members[node.parent().unwrap().heap_index()] {
                return Err(Error::InvalidInput(format!("{node} present without its parent")));
            }
        }
        Ok(TruncatedTree { depth, members: Some(members) })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_full(&self) -> bool {
        self.members.is_none()
    }

    #[inline]
    pub fn contains(&self, node: &BitString) -> bool {
        node.len() <= self.depth
            && self.members.as_ref().is_none_or(|m| m[node.heap_index()])
    }

    /// Members in canonical order.
    pub fn nodes(&self) -> Vec<BitString> {
        let root = BitString::root();
        std::iter::once(root)
            .chain(root.extensions(self.depth))
            .filter(|n| self.contains(n))
            .collect()
    }
}

/// An order-isomorphic copy of the depth-`depth` full binary tree.
///
/// `images[i]` is the image of the index node with heap index `i`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Embedding {
    depth: usize,
    images: Vec<BitString>,
}

impl Embedding {
    pub fn new(depth: usize, images: Vec<BitString>) -> Result<Self> {
        if depth > BitString::MAX_LEN || depth > 24 {
            return Err(Error::InvalidEmbedding(format!("depth {depth} too large")));
        }
        if images.len() != full_tree_size(depth) {
            return Err(Error::InvalidEmbedding(format!(
                "depth {depth} needs {} images, got {}",
                full_tree_size(depth),
                images.len()
            )));
        }
        Ok(Embedding { depth, images })
    }

    pub fn from_map(depth: usize, map: &BTreeMap<BitString, BitString>) -> Result<Self> {
        if map.keys().any(|k| k.len() > depth) {
            return Err(Error::InvalidEmbedding("index beyond depth".into()));
        }
        let images = (0..full_tree_size(depth))
            .map(|i| {
                let idx = BitString::from_heap_index(i);
                map.get(&idx)
                    .copied()
                    .ok_or_else(|| Error::InvalidEmbedding(format!("no image for index {idx:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Embedding::new(depth, images)
    }

    pub fn identity(depth: usize) -> Self {
        Embedding {
            depth,
            images: (0..full_tree_size(depth)).map(BitString::from_heap_index).collect(),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn root(&self) -> BitString {
        self.images[0]
    }

    #[inline]
    pub fn image(&self, index: &BitString) -> BitString {
        self.images[index.heap_index()]
    }

    pub fn get(&self, index: &BitString) -> Option<BitString> {
        (index.len() <= self.depth).then(|| self.image(index))
    }

    /// Images in canonical index order.
    pub fn images(&self) -> &[BitString] {
        &self.images
    }

    /// `(index, image)` pairs in canonical index order.
    pub fn iter(&self) -> impl Iterator<Item = (BitString, BitString)> + '_ {
        self.images.iter().enumerate().map(|(i, &b)| (BitString::from_heap_index(i), b))
    }

    /// Longest image; the embedding lives in any host of at least this depth.
    pub fn max_image_len(&self) -> usize {
        self.images.iter().map(BitString::len).max().unwrap_or(0)
    }

    /// The same map restricted to indices of length at most `depth`.
    pub fn truncate(&self, depth: usize) -> Result<Self> {
        if depth > self.depth {
            return Err(Error::DomainMismatch(format!(
                "cannot truncate depth {} to {depth}",
                self.depth
            )));
        }
        Ok(Embedding { depth, images: self.images[..full_tree_size(depth)].to_vec() })
    }

    /// Index node whose image is `node`, if any.
    pub fn preimage(&self, node: &BitString) -> Option<BitString> {
        self.images.iter().position(|b| b == node).map(BitString::from_heap_index)
    }

    /// Maps a chain of index nodes to the chain of their images.
    pub fn map_chain(&self, chain: &Chain) -> Chain {
        Chain::new_unchecked(chain.nodes().iter().map(|i| self.image(i)).collect())
    }
}

impl fmt::Debug for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}

impl Serialize for Embedding {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.images.len() + 1))?;
        map.serialize_entry("depth", &self.depth)?;
        for (idx, img) in self.iter() {
            map.serialize_entry(&idx, &img)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Embedding {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct EmbeddingVisitor;

        impl<'de> Visitor<'de> for EmbeddingVisitor {
            type Value = Embedding;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object with \"depth\" and index-to-node entries")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<Embedding, A::Error> {
                let mut depth = None;
                let mut map = BTreeMap::new();
                while let Some(key) = access.next_key::<String>()? {
                    if key == "depth" {
                        depth = Some(access.next_value::<usize>()?);
                    } else {
                        let idx: BitString = key.parse().map_err(de::Error::custom)?;
                        let img: BitString = access.next_value()?;
                        if map.insert(idx, img).is_some() {
                            return Err(de::Error::custom(format!("duplicate index {key:?}")));
                        }
                    }
                }
                let depth = depth.ok_or_else(|| de::Error::missing_field("depth"))?;
                if map.len() != full_tree_size(depth) {
                    return Err(de::Error::custom(format!(
                        "depth {depth} needs {} entries, got {}",
                        full_tree_size(depth),
                        map.len()
                    )));
                }
                Embedding::from_map(depth, &map).map_err(de::Error::custom)
            }
        }

        deserializer.deserialize_map(EmbeddingVisitor)
    }
}

/// Something whose nodes can carry chains.
#[derive(Clone, Copy, Debug)]
pub enum Host<'a> {
    Tree(&'a TruncatedTree),
    Embedding(&'a Embedding),
}

impl<'a> From<&'a TruncatedTree> for Host<'a> {
    fn from(t: &'a TruncatedTree) -> Self {
        Host::Tree(t)
    }
}

impl<'a> From<&'a Embedding> for Host<'a> {
    fn from(e: &'a Embedding) -> Self {
        Host::Embedding(e)
    }
}

/// All strictly increasing `n`-tuples of comparable member nodes, in
/// canonical (coordinatewise) order. With `within`, only nodes extending it
/// (inclusively) are used.
pub fn enumerate_chains<'a>(host: impl Into<Host<'a>>, n: usize, within: Option<BitString>) -> Vec<Chain> {
    assert!(n >= 1, "chains have arity at least 1");
    let mut out = Vec::new();
    match host.into() {
        Host::Tree(tree) => {
            let starts: Vec<BitString> = match within {
                Some(w) if tree.contains(&w) => {
                    std::iter::once(w).chain(w.extensions(tree.depth())).filter(|x| tree.contains(x)).collect()
                }
                Some(_) => Vec::new(),
                None => tree.nodes(),
            };
            let mut stack = Vec::with_capacity(n);
            for s in starts {
                stack.push(s);
                extend_tree_chains(tree, n, &mut stack, &mut out);
                stack.pop();
            }
        }
        Host::Embedding(emb) => {
            let index_tree = TruncatedTree::full(emb.depth());
            for ic in enumerate_chains(&index_tree, n, None) {
                let c = emb.map_chain(&ic);
                if within.is_none_or(|w| w.is_prefix_of(&c.nodes()[0])) {
                    out.push(c);
                }
            }
            out.sort();
        }
    }
    out
}

fn extend_tree_chains(tree: &TruncatedTree, n: usize, stack: &mut Vec<BitString>, out: &mut Vec<Chain>) {
    if stack.len() == n {
        out.push(Chain::new_unchecked(stack.clone()));
        return;
    }
    let last = *stack.last().unwrap();
    for x in last.extensions(tree.depth()) {
        if tree.contains(&x) {
            stack.push(x);
            extend_tree_chains(tree, n, stack, out);
            stack.pop();
        }
    }
}

/// Checks every embedding invariant and host membership of every image.
///
/// Locally: each child image properly extends its parent image and sibling
/// images are incomparable. Together these imply injectivity and that
/// `σ ⊆ τ ⟺ b(σ) ⊆ b(τ)` for all index pairs.
pub fn verify_embedding(b: &Embedding, host: &TruncatedTree) -> bool {
    if !b.images.iter().all(|x| host.contains(x)) {
        return false;
    }
    let internal = full_tree_size(b.depth) - (1usize << b.depth);
    (0..internal).all(|i| {
        let parent = b.images[i];
        let left = b.images[2 * i + 1];
        let right = b.images[2 * i + 2];
        parent.is_proper_prefix_of(&left) && parent.is_proper_prefix_of(&right) && !left.comparable(&right)
    })
}

/// `σ ↦ outer(inner(σ))`.
pub fn compose_embeddings(outer: &Embedding, inner: &Embedding) -> Result<Embedding> {
    if inner.depth > outer.depth {
        return Err(Error::DomainMismatch(format!(
            "inner depth {} exceeds outer depth {}",
            inner.depth, outer.depth
        )));
    }
    let images = inner
        .images
        .iter()
        .map(|i| {
            outer.get(i).ok_or_else(|| {
                Error::DomainMismatch(format!("inner image {i:?} outside outer index tree of depth {}", outer.depth))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Embedding { depth: inner.depth, images })
}
