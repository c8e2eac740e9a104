//! Classical Ramsey problems solved through the tree solver: lift a coloring
//! of integer tuples to chains by node length, solve on the tree, and read a
//! homogeneous set off the leftmost path of the witness.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coloring::ChainColoring;
use crate::error::{Error, Result};
use crate::mix;
use crate::solver::{tt_solve_with, SolveConfig, SolveResult};
use crate::tree::{BitString, Embedding};

/// Backend of an [`IntTupleColoring`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IntSource {
    Table(BTreeMap<Vec<usize>, u32>),
    Seeded(u64),
}

/// A `k`-coloring of the strictly increasing `n`-tuples from `{0, …, domain − 1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntTupleColoring {
    n: usize,
    k: u32,
    domain: usize,
    source: IntSource,
}

impl IntTupleColoring {
    pub fn new(n: usize, k: u32, domain: usize, source: IntSource) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidInput("arity and color count must be positive".into()));
        }
        if let IntSource::Table(map) = &source {
            for (tuple, &color) in map {
                check_tuple(n, domain, tuple)?;
                if color >= k {
                    return Err(Error::InvalidInput(format!("color {color} on {tuple:?} is not below k = {k}")));
                }
            }
        }
        Ok(IntTupleColoring { n, k, domain, source })
    }

    pub fn seeded(n: usize, k: u32, domain: usize, seed: u64) -> Result<Self> {
        Self::new(n, k, domain, IntSource::Seeded(seed))
    }

    /// Table coloring from `color_of`, evaluated on every increasing tuple.
    pub fn from_fn(n: usize, k: u32, domain: usize, mut color_of: impl FnMut(&[usize]) -> u32) -> Result<Self> {
        let map = increasing_tuples(domain, n).into_iter().map(|t| {
            let c = color_of(&t);
            (t, c)
        });
        Self::new(n, k, domain, IntSource::Table(map.collect()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn source(&self) -> &IntSource {
        &self.source
    }

    pub fn eval(&self, tuple: &[usize]) -> Result<u32> {
        check_tuple(self.n, self.domain, tuple)?;
        match &self.source {
            IntSource::Table(map) => {
                map.get(tuple).copied().ok_or_else(|| Error::MissingEntry(format!("{tuple:?}")))
            }
            IntSource::Seeded(seed) => Ok(mix::seeded_color(*seed, tuple.iter().map(|&x| x as u64), self.k)),
        }
    }
}

fn check_tuple(n: usize, domain: usize, tuple: &[usize]) -> Result<()> {
    if tuple.len() != n {
        return Err(Error::ArityMismatch { expected: n, found: tuple.len() });
    }
    if tuple.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(format!("{tuple:?} is not strictly increasing")));
    }
    if let Some(&x) = tuple.iter().find(|&&x| x >= domain) {
        return Err(Error::DomainMismatch(format!("{x} is outside the domain of size {domain}")));
    }
    Ok(())
}

/// All strictly increasing `r`-tuples from `{0, …, domain − 1}` in lexicographic order.
pub fn increasing_tuples(domain: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(domain: usize, r: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for x in start..domain {
            if domain - x < r - cur.len() {
                break;
            }
            cur.push(x);
            go(domain, r, x + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(domain, r, 0, &mut Vec::with_capacity(r), &mut out);
    out
}

/// Whether every increasing `n`-tuple from `set` has `color`.
pub fn is_homogeneous(f: &IntTupleColoring, set: &[usize], color: u32) -> bool {
    increasing_tuples(set.len(), f.n())
        .iter()
        .all(|pos| f.eval(&pos.iter().map(|&i| set[i]).collect::<Vec<_>>()).is_ok_and(|c| c == color))
}

/// `g(σ₁,…,σₙ) = f(lh σ₁, …, lh σₙ)` on the depth-`depth` tree, which must
/// satisfy `depth < domain`.
pub fn lift_length_coloring(f: &IntTupleColoring, depth: usize) -> Result<ChainColoring> {
    ChainColoring::length_profile(f.clone(), depth)
}

/// Lengths of the first `m` nodes on the leftmost path of `w`.
pub fn extract_homogeneous_set(w: &Embedding, m: usize) -> Result<Vec<usize>> {
    if m == 0 || w.depth() + 1 < m {
        return Err(Error::InvalidInput(format!("a path of {m} nodes needs depth {}, got {}", m.max(1) - 1, w.depth())));
    }
    let mut idx = BitString::root();
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        out.push(w.image(&idx).len());
        if idx.len() < w.depth() {
            idx = idx.child(0);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RtSolution {
    pub color: u32,
    pub set: Vec<usize>,
    #[serde(skip)]
    pub solve: Option<SolveResult>,
}

/// A homogeneous `m`-set for `f`, found through the tree solver at ambient
/// depth `depth`.
pub fn rt_solve(f: &IntTupleColoring, m: usize, depth: usize) -> Result<RtSolution> {
    rt_solve_with(f, m, depth, &SolveConfig::default())
}

pub fn rt_solve_with(f: &IntTupleColoring, m: usize, depth: usize, config: &SolveConfig) -> Result<RtSolution> {
    if m < f.n() {
        return Err(Error::InvalidInput(format!("set size {m} is below the arity {}", f.n())));
    }
    let lifted = lift_length_coloring(f, depth)?;
    let solved = tt_solve_with(&lifted, depth, m - 1, config)?;
    let set = extract_homogeneous_set(&solved.witness, m)?;
    if !is_homogeneous(f, &set, solved.color) {
        return Err(Error::Unverified(format!("{set:?} is not homogeneous in color {}", solved.color)));
    }
    Ok(RtSolution { color: solved.color, set, solve: Some(solved) })
}

/// Binomial coefficient, saturating.
pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// Lexicographically least homogeneous `m`-set, by exhaustion. Fails with
/// [`Error::CapExceeded`] when `C(domain, m)` exceeds `cap`.
pub fn brute_force_rt(f: &IntTupleColoring, m: usize, cap: u128) -> Result<Option<(u32, Vec<usize>)>> {
    let candidates = binomial(f.domain(), m);
    if candidates > cap {
        return Err(Error::CapExceeded { candidates, cap });
    }
    for set in increasing_tuples(f.domain(), m) {
        let color = match increasing_tuples(m, f.n()).first() {
            Some(pos) => f.eval(&pos.iter().map(|&i| set[i]).collect::<Vec<_>>())?,
            None => 0,
        };
        if is_homogeneous(f, &set, color) {
            return Ok(Some((color, set)));
        }
    }
    Ok(None)
}

// JSON: {"n", "k", "domain", "source": {"kind": "table", "entries": [[[i, j], c], …]} | {"kind": "seeded", "seed": s}}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum IntSourceRepr {
    Table { entries: Vec<(Vec<usize>, u32)> },
    Seeded { seed: u64 },
}

impl Serialize for IntSource {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            IntSource::Table(map) => {
                IntSourceRepr::Table { entries: map.iter().map(|(t, &c)| (t.clone(), c)).collect() }
            }
            IntSource::Seeded(seed) => IntSourceRepr::Seeded { seed: *seed },
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IntSource {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Ok(match IntSourceRepr::deserialize(deserializer)? {
            IntSourceRepr::Table { entries } => {
                let mut map = BTreeMap::new();
                for (t, c) in entries {
                    if map.insert(t.clone(), c).is_some() {
                        return Err(serde::de::Error::custom(format!("duplicate entry for {t:?}")));
                    }
                }
                IntSource::Table(map)
            }
            IntSourceRepr::Seeded { seed } => IntSource::Seeded(seed),
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntColoringRepr {
    n: usize,
    k: u32,
    domain: usize,
    source: IntSource,
}

impl Serialize for IntTupleColoring {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        IntColoringRepr { n: self.n, k: self.k, domain: self.domain, source: self.source.clone() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IntTupleColoring {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let r = IntColoringRepr::deserialize(deserializer)?;
        IntTupleColoring::new(r.n, r.k, r.domain, r.source).map_err(serde::de::Error::custom)
    }
}
