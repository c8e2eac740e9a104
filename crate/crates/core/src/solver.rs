//! The full pipeline: `n − 1` reductions, the single-node base case, and
//! pull-back of the witness through every stage.

use serde::{Deserialize, Serialize};

use crate::coloring::ChainColoring;
use crate::error::{Error, Result};
use crate::reduction::{at_stage, exhaustion_with_ledger, reduce_step_with, ReducePolicy, ReductionLedger};
use crate::tree::{compose_embeddings, enumerate_chains, full_tree_size, verify_embedding, BitString, Embedding, TruncatedTree};

/// Depth requested from each intermediate reduction.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageDepthPolicy {
    /// The last reduction asks for `d`; every earlier one asks for
    /// `2d' + 2`, where `d'` is the depth asked of the next, which is the
    /// least depth in which the next reduction can fit.
    #[default]
    Room,
    /// Stage `i` of `n − 1` asks for `d + (n − 1 − i) + extra`: the final
    /// depth plus the number of reductions still to come.
    RemainingStages { extra: usize },
    /// Explicit depths, one per reduction.
    Explicit(Vec<usize>),
}

impl StageDepthPolicy {
    pub fn depths(&self, n: usize, d: usize) -> Result<Vec<usize>> {
        let stages = n.saturating_sub(1);
        match self {
            StageDepthPolicy::Room => {
                let mut depths = vec![d; stages];
                for i in (0..stages.saturating_sub(1)).rev() {
                    depths[i] = 2 * depths[i + 1] + 2;
                }
                Ok(depths)
            }
            StageDepthPolicy::RemainingStages { extra } => Ok((1..=stages).map(|i| d + (n - 1 - i) + extra).collect()),
            StageDepthPolicy::Explicit(v) if v.len() == stages => Ok(v.clone()),
            StageDepthPolicy::Explicit(v) => Err(Error::InvalidInput(format!(
                "{} explicit stage depths given for {stages} reductions",
                v.len()
            ))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SolveConfig {
    pub stage_depths: StageDepthPolicy,
    pub reduce: ReducePolicy,
}

/// A verified monochromatic copy of the depth-`d` full binary tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveResult {
    pub color: u32,
    /// Embedding into the original tree.
    pub witness: Embedding,
    pub ledger: ReductionLedger,
    /// Stage embeddings, each into the index tree of the previous one
    /// (the first into the original tree); the last is the base-case witness.
    pub stages: Vec<Embedding>,
}

impl SolveResult {
    /// Composition of all stage embeddings.
    pub fn pulled_back(&self) -> Result<Embedding> {
        let (first, rest) = self.stages.split_first().ok_or_else(|| Error::InvalidInput("no stages".into()))?;
        rest.iter().try_fold(first.clone(), |acc, s| compose_embeddings(&acc, s))
    }
}

/// Whether every `n`-chain of `w` has `color` under `f`. Chains that `f`
/// cannot color count as failures.
pub fn verify_monochromatic(w: &Embedding, f: &ChainColoring, color: u32) -> bool {
    enumerate_chains(&TruncatedTree::full(w.depth()), f.arity(), None)
        .iter()
        .all(|ic| f.eval(&w.map_chain(ic)).is_ok_and(|c| c == color))
}

/// Base case: a depth-`d` sub-embedding of `s` on whose nodes `f` is constant.
///
/// Colors are tried by descending frequency on `s` (lower color first on
/// ties); for each color a memoised search decides, for every node and
/// height, whether a monochromatic copy of that height is rooted there, which
/// makes the search complete within `s`.
pub fn tt1_solve(s: &Embedding, f: &ChainColoring, d: usize) -> Result<(u32, Embedding)> {
    tt1_solve_local(s, f, d).map(|(color, local)| {
        let w = compose_embeddings(s, &local).expect("local witness lies in the index tree");
        (color, w)
    })
}

fn tt1_solve_local(s: &Embedding, f: &ChainColoring, d: usize) -> Result<(u32, Embedding)> {
    if f.arity() != 1 {
        return Err(Error::ArityMismatch { expected: 1, found: f.arity() });
    }
    let h = s.depth();
    let nodes: Vec<BitString> = (0..full_tree_size(h)).map(BitString::from_heap_index).collect();
    let colors = nodes.iter().map(|x| f.eval_nodes(&[s.image(x)])).collect::<Result<Vec<u32>>>()?;
    if d > h {
        return Err(Error::exhausted(format!("base case needs depth {d} inside a tree of depth {h}")));
    }

    let mut freq = vec![0usize; f.colors() as usize];
    for &c in &colors {
        freq[c as usize] += 1;
    }
    let mut order: Vec<u32> = (0..f.colors()).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(freq[c as usize]), c));

    for color in order {
        // ok[r][i]: a monochromatic copy of height r is rooted at node i
        let mut ok = vec![colors.iter().map(|&c| c == color).collect::<Vec<bool>>()];
        for r in 1..=d {
            let prev = &ok[r - 1];
            let row = nodes
                .iter()
                .enumerate()
                .map(|(i, x)| prev[i] && has_incomparable_pair(x.extensions(h).filter(|y| ok[r - 1][y.heap_index()])))
                .collect();
            ok.push(row);
        }
        let Some(root) = (0..nodes.len()).find(|&i| ok[d][i]) else {
            continue;
        };
        let mut images = vec![BitString::root(); full_tree_size(d)];
        images[0] = nodes[root];
        for i in 0..full_tree_size(d) {
            let idx = BitString::from_heap_index(i);
            if idx.len() == d {
                continue;
            }
            let r = d - idx.len();
            let x = images[i];
            let cands: Vec<BitString> = x.extensions(h).filter(|y| ok[r - 1][y.heap_index()]).collect();
            let (l, rr) = least_pair(&cands).expect("feasibility table guarantees a pair");
            images[idx.child(0).heap_index()] = l;
            images[idx.child(1).heap_index()] = rr;
        }
        return Ok((color, Embedding::new(d, images)?));
    }
    Err(Error::exhausted(format!("no color has a monochromatic copy of depth {d}")))
}

fn has_incomparable_pair(mut nodes: impl Iterator<Item = BitString>) -> bool {
    let Some(first) = nodes.next() else { return false };
    // a set of extensions is a chain iff every member is comparable with the deepest so far
    let mut deepest = first;
    for y in nodes {
        if !deepest.comparable(&y) {
            return true;
        }
        if y.len() > deepest.len() {
            deepest = y;
        }
    }
    false
}

fn least_pair(sorted: &[BitString]) -> Option<(BitString, BitString)> {
    sorted
        .iter()
        .enumerate()
        .find_map(|(i, l)| sorted[i + 1..].iter().find(|r| !l.comparable(r)).map(|r| (*l, *r)))
}

/// Solves the tree Ramsey problem for `f` inside the depth-`depth` full tree,
/// returning a depth-`target` monochromatic copy.
pub fn tt_solve(f: &ChainColoring, depth: usize, target: usize) -> Result<SolveResult> {
    tt_solve_with(f, depth, target, &SolveConfig::default())
}

pub fn tt_solve_with(f: &ChainColoring, depth: usize, target: usize, config: &SolveConfig) -> Result<SolveResult> {
    let n = f.arity();
    if f.depth() < depth {
        return Err(Error::DepthMismatch { len: depth, depth: f.depth() });
    }
    if depth > 20 {
        return Err(Error::InvalidInput(format!("ambient depth {depth} too large")));
    }
    let stage_depths = config.stage_depths.depths(n, target)?;

    let mut host = Embedding::identity(depth);
    let mut coloring = f.clone();
    let mut ledger = ReductionLedger::empty();
    let mut stages = Vec::with_capacity(n);
    for (i, &sd) in stage_depths.iter().enumerate() {
        let out = reduce_step_with(&host, &coloring, sd, config.reduce).map_err(|e| at_stage(e, i + 1))?;
        ledger.append(&out.ledger);
        stages.push(out.local);
        host = out.embedding;
        coloring = out.coloring;
    }

    let (color, base) = tt1_solve_local(&host, &coloring, target).map_err(|e| match e {
        Error::DepthExhausted(x) => exhaustion_with_ledger(x.reason, n, ledger.clone()),
        other => other,
    })?;
    stages.push(base);

    let mut result = SolveResult { color, witness: Embedding::identity(0), ledger, stages };
    result.witness = result.pulled_back()?;
    if !verify_embedding(&result.witness, &TruncatedTree::full(depth)) {
        return Err(Error::Unverified("witness is not an embedding".into()));
    }
    if !verify_monochromatic(&result.witness, f, color) {
        return Err(Error::Unverified(format!("witness is not monochromatic in color {color}")));
    }
    Ok(result)
}

/// Exhaustive search over all depth-`d` copies inside the depth-`depth` full
/// tree, returning the least monochromatic one.
///
/// Copies are enumerated with sibling images in increasing order, images
/// assigned breadth-first in canonical order, so the first hit is least.
/// Fails with [`Error::CapExceeded`] when there are more than `cap` copies.
pub fn brute_force_tt(f: &ChainColoring, depth: usize, d: usize, cap: u128) -> Result<Option<(u32, Embedding)>> {
    if f.depth() < depth {
        return Err(Error::DepthMismatch { len: depth, depth: f.depth() });
    }
    let candidates = count_copies(depth, d);
    if candidates > cap {
        return Err(Error::CapExceeded { candidates, cap });
    }
    let mut images = vec![BitString::root(); full_tree_size(d)];
    let mut found = None;
    search_copies(f, depth, d, 0, &mut images, &mut found);
    Ok(found)
}

fn search_copies(
    f: &ChainColoring,
    depth: usize,
    d: usize,
    pos: usize,
    images: &mut Vec<BitString>,
    found: &mut Option<(u32, Embedding)>,
) {
    if found.is_some() {
        return;
    }
    if pos == images.len() {
        let w = Embedding::new(d, images.clone()).expect("sized correctly");
        let chains = enumerate_chains(&TruncatedTree::full(d), f.arity(), None);
        let color = match chains.first() {
            Some(c) => match f.eval(&w.map_chain(c)) {
                Ok(col) => col,
                Err(_) => return,
            },
            None => 0,
        };
        if verify_monochromatic(&w, f, color) {
            *found = Some((color, w));
        }
        return;
    }
    let options: Vec<BitString> = if pos == 0 {
        std::iter::once(BitString::root()).chain(BitString::root().extensions(depth)).collect()
    } else {
        let parent = images[(pos - 1) / 2];
        let left = (pos % 2 == 0).then(|| images[pos - 1]);
        parent
            .extensions(depth)
            .filter(|y| left.is_none_or(|l| l < *y && !l.comparable(y)))
            .collect()
    };
    for y in options {
        images[pos] = y;
        search_copies(f, depth, d, pos + 1, images, found);
        if found.is_some() {
            return;
        }
    }
}

/// Number of depth-`d` copies (siblings unordered) inside the depth-`depth`
/// full tree, saturating.
pub fn count_copies(depth: usize, d: usize) -> u128 {
    // rooted[r][l]: copies of height r rooted at a fixed node on level l
    let mut rooted = vec![vec![1u128; depth + 1]];
    for r in 1..=d {
        let mut row = vec![0u128; depth + 1];
        for l in 0..=depth {
            // unordered incomparable pairs above a level-l node: split at a
            // common prefix level m ≥ l, then one node in each branch
            let mut total = 0u128;
            for m in l..depth {
                let prefixes = 1u128 << (m - l);
                let mut branch = 0u128;
                for lv in m + 1..=depth {
                    branch = branch.saturating_add((1u128 << (lv - m - 1)).saturating_mul(rooted[r - 1][lv]));
                }
                total = total.saturating_add(prefixes.saturating_mul(branch.saturating_mul(branch)));
            }
            row[l] = total;
        }
        rooted.push(row);
    }
    (0..=depth).fold(0u128, |acc, l| acc.saturating_add((1u128 << l).saturating_mul(rooted[d][l])))
}
