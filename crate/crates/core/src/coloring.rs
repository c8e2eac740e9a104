//! Colorings of chains, the induced single-node coloring, and codes for its
//! finite-set values.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bridge::{IntSource, IntTupleColoring};
use crate::error::{Error, Result};
use crate::mix;
use crate::tree::{enumerate_chains, BitString, Chain, TruncatedTree};

impl Borrow<[BitString]> for Chain {
    fn borrow(&self) -> &[BitString] {
        self.nodes()
    }
}

/// Where the colors of a [`ChainColoring`] come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ColoringSource {
    /// Explicit chain-to-color map. Chains outside the map are errors.
    Table(BTreeMap<Chain, u32>),
    /// `mix64(seed ^ fold(node codes)) mod k`, see [`crate::mix`].
    Seeded(u64),
    /// The color depends only on the lengths of the chain's nodes.
    LengthProfile(IntTupleColoring),
}

/// A `k`-coloring of the `n`-chains of the depth-`depth` full binary tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainColoring {
    n: usize,
    k: u32,
    depth: usize,
    source: ColoringSource,
}

impl ChainColoring {
    pub fn seeded(n: usize, k: u32, depth: usize, seed: u64) -> Result<Self> {
        Self::check_params(n, k, depth)?;
        Ok(ChainColoring { n, k, depth, source: ColoringSource::Seeded(seed) })
    }

    pub fn table<I>(n: usize, k: u32, depth: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Chain, u32)>,
    {
        Self::check_params(n, k, depth)?;
        let mut map = BTreeMap::new();
        for (chain, color) in entries {
            if chain.arity() != n {
                return Err(Error::ArityMismatch { expected: n, found: chain.arity() });
            }
            if chain.last().len() > depth {
                return Err(Error::DepthMismatch { len: chain.last().len(), depth });
            }
            if color >= k {
                return Err(Error::InvalidInput(format!("color {color} on {chain} is not below k = {k}")));
            }
            if map.insert(chain.clone(), color).is_some() {
                return Err(Error::InvalidInput(format!("duplicate table entry for {chain}")));
            }
        }
        Ok(ChainColoring { n, k, depth, source: ColoringSource::Table(map) })
    }

    /// Table coloring assigning `color` to every `n`-chain of the full tree.
    pub fn constant(n: usize, k: u32, depth: usize, color: u32) -> Result<Self> {
        let chains = enumerate_chains(&TruncatedTree::full(depth), n.max(1), None);
        Self::table(n, k, depth, chains.into_iter().map(|c| (c, color)))
    }

    /// Table coloring built by evaluating `color_of` on every `n`-chain of
    /// the full tree.
    pub fn from_fn(n: usize, k: u32, depth: usize, mut color_of: impl FnMut(&Chain) -> u32) -> Result<Self> {
        let chains = enumerate_chains(&TruncatedTree::full(depth), n.max(1), None);
        Self::table(n, k, depth, chains.into_iter().map(|c| {
            let col = color_of(&c);
            (c, col)
        }))
    }

    /// Length-profile coloring `g(σ₁,…,σₙ) = f(lh σ₁, …, lh σₙ)`.
    pub fn length_profile(f: IntTupleColoring, depth: usize) -> Result<Self> {
        Self::check_params(f.n(), f.k(), depth)?;
        if depth >= f.domain() {
            return Err(Error::DomainMismatch(format!(
                "tree depth {depth} needs lengths up to {depth}, but the domain is {}",
                f.domain()
            )));
        }
        Ok(ChainColoring { n: f.n(), k: f.k(), depth, source: ColoringSource::LengthProfile(f) })
    }

    fn check_params(n: usize, k: u32, depth: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidInput("arity must be at least 1".into()));
        }
        if k == 0 {
            return Err(Error::InvalidInput("need at least one color".into()));
        }
        if depth > BitString::MAX_LEN {
            return Err(Error::InvalidInput(format!("depth {depth} exceeds {}", BitString::MAX_LEN)));
        }
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.n
    }

    pub fn colors(&self) -> u32 {
        self.k
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn source(&self) -> &ColoringSource {
        &self.source
    }

    /// Color of a chain, checking arity and depth.
    pub fn eval(&self, chain: &Chain) -> Result<u32> {
        if chain.arity() != self.n {
            return Err(Error::ArityMismatch { expected: self.n, found: chain.arity() });
        }
        self.eval_nodes(chain.nodes())
    }

    /// Color of a node tuple the caller already knows to be a chain of arity `n`.
    pub(crate) fn eval_nodes(&self, nodes: &[BitString]) -> Result<u32> {
        debug_assert_eq!(nodes.len(), self.n);
        let last = nodes.last().expect("nonempty chain").len();
        if last > self.depth {
            return Err(Error::DepthMismatch { len: last, depth: self.depth });
        }
        match &self.source {
            ColoringSource::Table(map) => map
                .get(nodes)
                .copied()
                .ok_or_else(|| Error::MissingEntry(Chain::new_unchecked(nodes.to_vec()).to_string())),
            ColoringSource::Seeded(seed) => Ok(mix::seeded_color(*seed, nodes.iter().map(BitString::code), self.k)),
            ColoringSource::LengthProfile(f) => {
                let lengths: Vec<usize> = nodes.iter().map(BitString::len).collect();
                f.eval(&lengths)
            }
        }
    }

    /// Whether every `n`-chain of the depth-`depth` full tree has a color.
    pub fn is_total(&self) -> bool {
        match &self.source {
            ColoringSource::Table(map) => {
                enumerate_chains(&TruncatedTree::full(self.depth), self.n, None).iter().all(|c| map.contains_key(c))
            }
            _ => true,
        }
    }
}

/// The chain `P = (ρ_τ : τ ⊆ σ)` of nodes chosen along one output branch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AncestorRecord(Vec<BitString>);

impl AncestorRecord {
    pub fn new(nodes: Vec<BitString>) -> Result<Self> {
        Chain::new(nodes).map(|c| AncestorRecord(c.into_nodes()))
    }

    pub fn nodes(&self) -> &[BitString] {
        &self.0
    }

    pub fn last(&self) -> &BitString {
        self.0.last().expect("ancestor records are nonempty")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, node: BitString) -> Result<()> {
        if !self.last().is_proper_prefix_of(&node) {
            return Err(Error::NotExtension(node.to_string()));
        }
        self.0.push(node);
        Ok(())
    }
}

/// Canonical code of a finite set of `(chain, color)` pairs.
///
/// Pairs are kept sorted by (chain, color) without duplicates. Codes are
/// ordered shortest first, then lexicographically over the sorted pairs.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct FinsetCode(Vec<(Chain, u32)>);

impl FinsetCode {
    pub fn empty() -> Self {
        FinsetCode(Vec::new())
    }

    pub fn from_pairs<I: IntoIterator<Item = (Chain, u32)>>(pairs: I) -> Self {
        let mut v: Vec<_> = pairs.into_iter().collect();
        v.sort();
        v.dedup();
        FinsetCode(v)
    }

    pub fn pairs(&self) -> &[(Chain, u32)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Ord for FinsetCode {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for FinsetCode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for FinsetCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (chain, color)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{chain}:{color}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for FinsetCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for FinsetCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("set code {s:?}"));
        let body = s.strip_prefix('{').and_then(|r| r.strip_suffix('}')).ok_or_else(bad)?;
        if body.is_empty() {
            return Ok(FinsetCode::empty());
        }
        let pairs = body
            .split(';')
            .map(|item| {
                let (chain, color) = item.rsplit_once(':').ok_or_else(bad)?;
                let inner = chain.strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(bad)?;
                let nodes = inner.split(',').map(str::parse).collect::<Result<Vec<BitString>>>()?;
                let color = color.parse::<u32>().map_err(|_| bad())?;
                Ok((Chain::new(nodes)?, color))
            })
            .collect::<Result<Vec<_>>>()?;
        let code = FinsetCode::from_pairs(pairs);
        if code.to_string() != s {
            return Err(Error::InvalidInput(format!("set code {s:?} is not in canonical form")));
        }
        Ok(code)
    }
}

impl Serialize for FinsetCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FinsetCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Strict total order on codes.
pub fn code_less(a: &FinsetCode, b: &FinsetCode) -> bool {
    a < b
}

/// `f_P(τ) = ⟨{(m, f(m⌢τ)) : m ∈ [P]^{n}}⟩` for a coloring `f` of `(n+1)`-chains.
pub fn induced_value(ancestors: &AncestorRecord, f: &ChainColoring, tau: &BitString) -> Result<FinsetCode> {
    let induced = InducedColoring::new(ancestors.nodes(), f)?;
    if !ancestors.last().is_proper_prefix_of(tau) {
        return Err(Error::NotExtension(tau.to_string()));
    }
    let colors = induced.colors_at(tau)?;
    Ok(induced.to_code(&colors))
}

/// The induced coloring for a fixed ancestor chain, evaluated as color
/// vectors over the subchains of `P` in canonical order.
///
/// All values share the same subchain list, so comparing color vectors
/// lexicographically agrees with comparing the corresponding [`FinsetCode`]s.
pub(crate) struct InducedColoring<'a> {
    f: &'a ChainColoring,
    subchains: Vec<Vec<BitString>>,
}

impl<'a> InducedColoring<'a> {
    pub(crate) fn new(ancestors: &[BitString], f: &'a ChainColoring) -> Result<Self> {
        if f.arity() < 2 {
            return Err(Error::ArityMismatch { expected: 2, found: f.arity() });
        }
        let mut subchains = Vec::new();
        let mut pick = Vec::with_capacity(f.arity() - 1);
        combinations(ancestors, f.arity() - 1, 0, &mut pick, &mut subchains);
        Ok(InducedColoring { f, subchains })
    }

    pub(crate) fn colors_at(&self, tau: &BitString) -> Result<Vec<u32>> {
        let mut buf = Vec::with_capacity(self.f.arity());
        self.subchains
            .iter()
            .map(|m| {
                buf.clear();
                buf.extend_from_slice(m);
                buf.push(*tau);
                self.f.eval_nodes(&buf)
            })
            .collect()
    }

    pub(crate) fn to_code(&self, colors: &[u32]) -> FinsetCode {
        FinsetCode(
            self.subchains
                .iter()
                .zip(colors)
                .map(|(m, &c)| (Chain::new_unchecked(m.clone()), c))
                .collect(),
        )
    }
}

/// Size-`r` subsequences of `items` in lexicographic index order.
fn combinations<T: Copy>(items: &[T], r: usize, start: usize, pick: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
    if pick.len() == r {
        out.push(pick.clone());
        return;
    }
    let need = r - pick.len();
    for i in start..items.len() {
        if items.len() - i < need {
            break;
        }
        pick.push(items[i]);
        combinations(items, r, i + 1, pick, out);
        pick.pop();
    }
}

// JSON: {"n", "k", "depth", "source": {"kind": ...}}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum SourceRepr {
    Table {
        entries: Vec<(Chain, u32)>,
    },
    Seeded {
        seed: u64,
    },
    LengthProfile {
        domain: usize,
        #[serde(rename = "table-or-seed")]
        table_or_seed: IntSource,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ColoringRepr {
    n: usize,
    k: u32,
    depth: usize,
    source: SourceRepr,
}

impl Serialize for ChainColoring {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let source = match &self.source {
            ColoringSource::Table(map) => {
                SourceRepr::Table { entries: map.iter().map(|(c, &v)| (c.clone(), v)).collect() }
            }
            ColoringSource::Seeded(seed) => SourceRepr::Seeded { seed: *seed },
            ColoringSource::LengthProfile(f) => {
                SourceRepr::LengthProfile { domain: f.domain(), table_or_seed: f.source().clone() }
            }
        };
        ColoringRepr { n: self.n, k: self.k, depth: self.depth, source }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ChainColoring {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let r = ColoringRepr::deserialize(deserializer)?;
        let built = match r.source {
            SourceRepr::Table { entries } => ChainColoring::table(r.n, r.k, r.depth, entries),
            SourceRepr::Seeded { seed } => ChainColoring::seeded(r.n, r.k, r.depth, seed),
            SourceRepr::LengthProfile { domain, table_or_seed } => {
                IntTupleColoring::new(r.n, r.k, domain, table_or_seed)
                    .and_then(|f| ChainColoring::length_profile(f, r.depth))
            }
        };
        built.map_err(serde::de::Error::custom)
    }
}
