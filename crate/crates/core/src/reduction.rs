//! One exponent-reduction step.
//!
//! Given a copy `R` of the full binary tree and a coloring `f` of its
//! `(n+1)`-chains, the step grows a subtree `S ⊆ R` node by node. At every
//! output index `σ` it
//!
//! 1. picks the greatest induced value `c_σ` that dominates a whole cone of
//!    the current region, together with the least root `ρ` of such a cone;
//! 2. grows the standard `c_σ`-colored subtree `T` from `ρ`, whose non-root
//!    nodes all carry induced value exactly `c_σ`;
//! 3. takes the two level-one nodes of `T` as `ρ_{σ⌢0}`, `ρ_{σ⌢1}` and the
//!    parts of `T` above them as the regions for the next level.
//!
//! The coloring `g(ρ_{σ₁},…,ρ_{σₙ}) = f(ρ_{σ₁},…,ρ_{σₙ},ρ_{σₙ⌢0})` then agrees
//! with `f` on every extension inside `S`. For leaves of `S` the node
//! `ρ_{σ⌢0}` is computed one level past the output depth and kept only in
//! the ledger.
//!
//! All search happens inside the finite truncation, where the greatest value
//! and least root need not leave enough room for the levels still to come.
//! Choices are therefore tried in that order and the first one whose whole
//! construction completes is kept (see [`ReducePolicy`]). A truncation that
//! is too shallow shows up as [`Error::DepthExhausted`], never as a wrong
//! subtree, because every successor is checked to carry `c_σ` exactly.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::coloring::{AncestorRecord, ChainColoring, FinsetCode, InducedColoring};
use crate::error::{Error, Exhaustion, Result};
use crate::tree::{compose_embeddings, enumerate_chains, full_tree_size, BitString, Chain, Embedding, TruncatedTree};

/// Jump levels charged for one reduction (one `A″` oracle).
pub const JUMP_LEVELS_PER_STEP: usize = 2;

/// A set of nodes inside the depth-`depth` full tree. Unlike
/// [`TruncatedTree`] a region need not be closed under initial segments: the
/// regions above a stage root are standard subtrees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    depth: usize,
    members: Vec<bool>,
}

impl Region {
    pub fn full(depth: usize) -> Self {
        assert!(depth <= 24, "regions are limited to depth 24");
        Region { depth, members: vec![true; full_tree_size(depth)] }
    }

    pub fn from_tree(tree: &TruncatedTree) -> Self {
        let mut region = Region { depth: tree.depth(), members: vec![false; full_tree_size(tree.depth())] };
        for n in tree.nodes() {
            region.members[n.heap_index()] = true;
        }
        region
    }

    pub fn from_nodes<I: IntoIterator<Item = BitString>>(depth: usize, nodes: I) -> Result<Self> {
        if depth > 24 {
            return Err(Error::InvalidInput(format!("regions are limited to depth 24, got {depth}")));
        }
        let mut members = vec![false; full_tree_size(depth)];
        for n in nodes {
            if n.len() > depth {
                return Err(Error::DepthMismatch { len: n.len(), depth });
            }
            members[n.heap_index()] = true;
        }
        Ok(Region { depth, members })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    #[inline]
    pub fn contains(&self, node: &BitString) -> bool {
        node.len() <= self.depth && self.members[node.heap_index()]
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Limits on the search for stage choices.
///
/// At each output index the step tries values in decreasing order and, for
/// each value, cone roots in canonical order, and keeps the first choice whose
/// construction below it completes inside the truncation. In the infinite
/// tree the first candidate always completes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ReducePolicy {
    /// Candidate choices tried before giving up.
    pub search_budget: u64,
}

impl Default for ReducePolicy {
    fn default() -> Self {
        ReducePolicy { search_budget: 200_000 }
    }
}

/// Region levels a stage root needs above it to build `q` more output
/// levels: one for the witness root, one for its successors, and the same
/// again for each level below.
fn room_needed(q: usize) -> usize {
    2 * q + 2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuantifierClass {
    Sigma1,
    Sigma2,
}

/// One recorded choice. Coordinates are nodes of the ambient tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct StageChoice {
    /// 1-based reduction step this choice belongs to.
    pub stage: usize,
    pub sigma: BitString,
    pub rho: BitString,
    pub color_code: Option<FinsetCode>,
    pub witness_root: Option<BitString>,
    pub class: QuantifierClass,
}

/// Record of the choices made by one or more reduction steps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ReductionLedger {
    pub entries: Vec<StageChoice>,
    pub reductions: usize,
    pub jump_levels: usize,
}

impl ReductionLedger {
    pub fn empty() -> Self {
        ReductionLedger { entries: Vec::new(), reductions: 0, jump_levels: 0 }
    }

    fn single() -> Self {
        ReductionLedger { entries: Vec::new(), reductions: 1, jump_levels: JUMP_LEVELS_PER_STEP }
    }

    /// Appends another ledger, renumbering its entries after ours.
    pub fn append(&mut self, other: &ReductionLedger) {
        let offset = self.reductions;
        self.entries.extend(other.entries.iter().cloned().map(|mut e| {
            e.stage += offset;
            e
        }));
        self.reductions += other.reductions;
        self.jump_levels += other.jump_levels;
    }

    pub fn sigma2_count(&self) -> usize {
        self.entries.iter().filter(|e| e.class == QuantifierClass::Sigma2).count()
    }
}

/// Everything produced by [`reduce_step`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReduceOutput {
    /// `S` as an embedding into the ambient tree.
    pub embedding: Embedding,
    /// `S` as an embedding into the index tree of `R`.
    pub local: Embedding,
    /// `g` on the `n`-chains of `S` (ambient coordinates).
    pub coloring: ChainColoring,
    pub ledger: ReductionLedger,
}

/// Maps working coordinates to ambient nodes.
#[derive(Clone, Copy)]
struct Frame<'a>(Option<&'a Embedding>);

impl Frame<'_> {
    #[inline]
    fn to_host(self, x: BitString) -> BitString {
        match self.0 {
            Some(e) => e.image(&x),
            None => x,
        }
    }
}

/// Region members strictly above a root, with their induced values and the
/// data needed for the cone condition.
struct Cone {
    nodes: Vec<BitString>,
    values: Vec<Vec<u32>>,
    /// Region levels above each node.
    height: Vec<usize>,
    /// Node of least value strictly above each node, if any.
    cone_min: Vec<Option<usize>>,
}

impl Cone {
    fn build(region: &Region, root: BitString, induced: &InducedColoring<'_>, frame: Frame<'_>) -> Result<Self> {
        let nodes: Vec<BitString> = root.extensions(region.depth()).filter(|x| region.contains(x)).collect();
        let index: HashMap<BitString, usize> = nodes.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let values = nodes.iter().map(|&x| induced.colors_at(&frame.to_host(x))).collect::<Result<Vec<_>>>()?;
        let mut height = vec![0; nodes.len()];
        let mut cone_min: Vec<Option<usize>> = vec![None; nodes.len()];
        for i in (0..nodes.len()).rev() {
            let x = nodes[i];
            let parent = (root.len() + 1..x.len()).rev().find_map(|l| index.get(&x.prefix(l)).copied());
            if let Some(p) = parent {
                height[p] = height[p].max(height[i] + 1);
                let mut best = i;
                if let Some(m) = cone_min[i] {
                    if values[m] < values[best] {
                        best = m;
                    }
                }
                cone_min[p] = match cone_min[p] {
                    Some(cur) if values[cur] <= values[best] => Some(cur),
                    _ => Some(best),
                };
            }
        }
        Ok(Cone { nodes, values, height, cone_min })
    }

    fn dominated(&self, i: usize, v: &[u32]) -> bool {
        self.cone_min[i].is_some_and(|m| self.values[m].as_slice() >= v)
    }

    /// Greatest value dominated on the cone of some root with at least
    /// `room` levels above it, and the least such root.
    fn select(&self, room: usize) -> Result<(Vec<u32>, usize)> {
        let room = room.max(1);
        if self.nodes.is_empty() {
            return Err(Error::exhausted("no extension of the stage root inside the region"));
        }
        let best = self
            .eligible(room)
            .filter_map(|i| self.cone_min[i])
            .max_by(|&a, &b| self.values[a].cmp(&self.values[b]))
            .ok_or_else(|| Error::exhausted(format!("no cone root with {room} levels of room")))?;
        let c = self.values[best].clone();
        let rho = self.eligible(room).find(|&i| self.dominated(i, &c)).expect("the maximising root qualifies");
        Ok((c, rho))
    }

    fn eligible(&self, room: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&i| self.height[i] >= room)
    }

    /// Values of the range, greatest first, that some root with `room`
    /// levels above it dominates.
    fn candidate_values(&self, room: usize) -> Vec<Vec<u32>> {
        let Some(top) = self.eligible(room).filter_map(|i| self.cone_min[i]).map(|m| &self.values[m]).max() else {
            return Vec::new();
        };
        let range: BTreeSet<&Vec<u32>> = self.values.iter().filter(|v| *v <= top).collect();
        range.into_iter().rev().cloned().collect()
    }

    /// Cone nodes with value exactly `v`, in canonical order.
    fn carrying(&self, v: &[u32]) -> Vec<BitString> {
        self.nodes.iter().zip(&self.values).filter(|(_, w)| w.as_slice() == v).map(|(&x, _)| x).collect()
    }
}

/// Least pair `(l, r)`, `l < r` incomparable, of proper extensions of
/// `parent` among `sorted` (canonical order).
fn least_pair(sorted: &[BitString], parent: BitString) -> Option<(BitString, BitString)> {
    let mut x = parent;
    loop {
        let start = sorted.partition_point(|y| y.len() <= x.len());
        let mut above = sorted[start..].iter().enumerate().filter(|(_, y)| x.is_proper_prefix_of(y));
        let (i, &l) = above.next()?;
        let rest = &sorted[start + i + 1..];
        if let Some(&r) = rest.iter().find(|y| x.is_proper_prefix_of(y) && !l.comparable(y)) {
            return Some((l, r));
        }
        // everything else above `x` extends `l`
        x = l;
    }
}

fn code_colors(induced: &InducedColoring<'_>, code: &FinsetCode) -> Option<Vec<u32>> {
    let colors: Vec<u32> = code.pairs().iter().map(|(_, c)| *c).collect();
    (induced.to_code(&colors) == *code).then_some(colors)
}

/// Chooses `(c_σ, ρ)` above `rho_sigma` inside `region`: `c_σ` is the
/// greatest induced value `v` such that some `ρ ⊃ rho_sigma` in the region
/// has induced value `≥ v` on every region node above it, and `ρ` is the
/// least such root. Roots without any region node above them are not counted.
pub fn select_color_and_root(
    region: &Region,
    rho_sigma: BitString,
    ancestors: &AncestorRecord,
    f: &ChainColoring,
) -> Result<(FinsetCode, BitString)> {
    check_stage_root(region, rho_sigma, ancestors)?;
    let induced = InducedColoring::new(ancestors.nodes(), f)?;
    let cone = Cone::build(region, rho_sigma, &induced, Frame(None))?;
    let (c, rho) = cone.select(1)?;
    Ok((induced.to_code(&c), cone.nodes[rho]))
}

/// Least pair of incomparable proper extensions of `parent` in `region`
/// whose induced value is exactly `c`.
pub fn standard_subtree_successors(
    region: &Region,
    parent: BitString,
    c: &FinsetCode,
    ancestors: &AncestorRecord,
    f: &ChainColoring,
) -> Result<(BitString, BitString)> {
    if !region.contains(&parent) {
        return Err(Error::InvalidInput(format!("{parent:?} is not in the region")));
    }
    if !ancestors.last().is_prefix_of(&parent) {
        return Err(Error::NotExtension(parent.to_string()));
    }
    let induced = InducedColoring::new(ancestors.nodes(), f)?;
    let none = || Error::exhausted(format!("fewer than two incomparable extensions of {parent:?} carry {c}"));
    let colors = code_colors(&induced, c).ok_or_else(none)?;
    let cone = Cone::build(region, parent, &induced, Frame(None))?;
    least_pair(&cone.carrying(&colors), parent).ok_or_else(none)
}

fn check_stage_root(region: &Region, rho_sigma: BitString, ancestors: &AncestorRecord) -> Result<()> {
    if !region.contains(&rho_sigma) {
        return Err(Error::InvalidInput(format!("{rho_sigma:?} is not in the region")));
    }
    if *ancestors.last() != rho_sigma {
        return Err(Error::InvalidInput("the ancestor record must end at the stage root".into()));
    }
    Ok(())
}

struct StageState {
    rho: BitString,
    region: Region,
    ancestors: Vec<BitString>,
}

/// Choices below one output index, in working coordinates.
#[derive(Default)]
struct Built {
    nodes: Vec<(BitString, BitString)>,
    boundary: Vec<(BitString, BitString)>,
    entries: Vec<StageChoice>,
}

impl Built {
    fn absorb(&mut self, other: Built) {
        self.nodes.extend(other.nodes);
        self.boundary.extend(other.boundary);
        self.entries.extend(other.entries);
    }
}

struct Search<'a> {
    f: &'a ChainColoring,
    frame: Frame<'a>,
    d: usize,
    budget: u64,
    tried: u64,
    trail: Vec<StageChoice>,
    /// Where the first candidate broke down, with the choices leading there.
    first_failure: Option<(BitString, String, Vec<StageChoice>)>,
}

impl Search<'_> {
    fn fail(&mut self, sigma: BitString, reason: String) {
        if self.first_failure.is_none() {
            self.first_failure = Some((sigma, reason, self.trail.clone()));
        }
    }

    fn choice(&self, class: QuantifierClass, sigma: BitString, rho: BitString, code: &FinsetCode, witness: BitString) -> StageChoice {
        StageChoice {
            stage: 1,
            sigma,
            rho: self.frame.to_host(rho),
            color_code: Some(code.clone()),
            witness_root: Some(self.frame.to_host(witness)),
            class,
        }
    }

    fn stage(&mut self, sigma: BitString, state: StageState) -> Result<Option<Built>> {
        let q = self.d - sigma.len();
        let host_ancestors: Vec<BitString> = state.ancestors.iter().map(|&x| self.frame.to_host(x)).collect();
        let induced = InducedColoring::new(&host_ancestors, self.f)?;
        let cone = Cone::build(&state.region, state.rho, &induced, self.frame)?;
        // the witness root needs its successors and everything below them
        let room = room_needed(q) - 1;
        let values = cone.candidate_values(room);
        if values.is_empty() {
            let reason = if cone.nodes.is_empty() {
                "no extension of the stage root inside the region".to_string()
            } else {
                format!("no cone root with {room} levels of room above {:?}", self.frame.to_host(state.rho))
            };
            self.fail(sigma, reason);
            return Ok(None);
        }

        for v in values {
            let carrying = cone.carrying(&v);
            let code = induced.to_code(&v);
            let mut pairs: HashMap<BitString, Option<(BitString, BitString)>> = HashMap::new();
            let mut pair_of = |x: BitString| *pairs.entry(x).or_insert_with(|| least_pair(&carrying, x));
            for i in cone.eligible(room).filter(|&i| cone.dominated(i, &v)) {
                self.tried += 1;
                if self.tried > self.budget {
                    return Err(Error::exhausted(format!("search budget of {} candidate choices used up", self.budget)));
                }
                let witness = cone.nodes[i];
                let Some((left, right)) = pair_of(witness) else {
                    self.fail(sigma, format!("no successors above {:?}", self.frame.to_host(witness)));
                    continue;
                };
                let entry = self.choice(QuantifierClass::Sigma2, sigma, state.rho, &code, witness);

                if q == 0 {
                    let mut built = Built::default();
                    built.nodes.push((sigma, state.rho));
                    built.boundary.push((sigma, left));
                    built.entries.push(entry);
                    built.entries.push(self.choice(QuantifierClass::Sigma1, sigma.child(0), left, &code, witness));
                    return Ok(Some(built));
                }

                // the standard v-colored subtree above each successor
                let mut regions = Vec::with_capacity(2);
                for top in [left, right] {
                    let mut members = Vec::new();
                    let mut height = HashMap::new();
                    let mut stack = vec![(top, 0usize)];
                    while let Some((x, h)) = stack.pop() {
                        members.push(x);
                        height.insert(x, h);
                        if let Some((a, b)) = pair_of(x) {
                            stack.push((a, h + 1));
                            stack.push((b, h + 1));
                        }
                    }
                    let levels = height.values().copied().max().unwrap_or(0);
                    regions.push((top, levels, members));
                }
                if regions.iter().any(|(_, levels, _)| *levels < room_needed(q - 1)) {
                    self.fail(sigma, format!("standard subtree above {:?} too shallow", self.frame.to_host(witness)));
                    continue;
                }

                self.trail.push(entry.clone());
                let mut built = Built::default();
                built.nodes.push((sigma, state.rho));
                built.entries.push(entry);
                let mut complete = true;
                for (e, (top, _, members)) in regions.into_iter().enumerate() {
                    let mut ancestors = state.ancestors.clone();
                    ancestors.push(top);
                    let child = StageState { rho: top, region: Region::from_nodes(state.region.depth(), members)?, ancestors };
                    match self.stage(sigma.child(e as u8), child)? {
                        Some(b) => built.absorb(b),
                        None => {
                            complete = false;
                            break;
                        }
                    }
                }
                self.trail.pop();
                if complete {
                    return Ok(Some(built));
                }
            }
        }
        Ok(None)
    }
}

/// One reduction: from `f` on the `(n+1)`-chains of `r`, build a depth-`d`
/// subtree `S` of `r` and `g` on the `n`-chains of `S` such that
/// `f(ρ₁,…,ρₙ,τ) = g(ρ₁,…,ρₙ)` whenever `ρ₁ ⊂ … ⊂ ρₙ ⊂ τ` all lie in `S`.
pub fn reduce_step(r: &Embedding, f: &ChainColoring, d: usize) -> Result<ReduceOutput> {
    reduce_step_with(r, f, d, ReducePolicy::default())
}

pub fn reduce_step_with(r: &Embedding, f: &ChainColoring, d: usize, policy: ReducePolicy) -> Result<ReduceOutput> {
    if f.arity() < 2 {
        return Err(Error::ArityMismatch { expected: 2, found: f.arity() });
    }
    let n = f.arity() - 1;
    let frame = Frame(Some(r));
    let mut ledger = ReductionLedger::single();

    // a lone node carries no chains of length two or more
    if d == 0 && n >= 2 {
        let local = Embedding::identity(0);
        ledger.entries.push(StageChoice {
            stage: 1,
            sigma: BitString::root(),
            rho: r.root(),
            color_code: None,
            witness_root: None,
            class: QuantifierClass::Sigma1,
        });
        return Ok(ReduceOutput {
            embedding: compose_embeddings(r, &local)?,
            local,
            coloring: ChainColoring::table(n, f.colors(), f.depth(), [])?,
            ledger,
        });
    }
    if d > 24 || r.depth() > 24 {
        return Err(Error::InvalidInput(format!("depths above 24 are not supported (target {d}, tree {})", r.depth())));
    }

    let mut search = Search { f, frame, d, budget: policy.search_budget, tried: 0, trail: Vec::new(), first_failure: None };
    let start = StageState { rho: BitString::root(), region: Region::full(r.depth()), ancestors: vec![BitString::root()] };
    let outcome = search.stage(BitString::root(), start);
    let built = match outcome {
        Ok(Some(b)) => b,
        Ok(None) | Err(Error::DepthExhausted(_)) => {
            let reason = match outcome {
                Err(Error::DepthExhausted(x)) => x.reason,
                _ => String::new(),
            };
            let (sigma, first, trail) =
                search.first_failure.unwrap_or_else(|| (BitString::root(), "no candidate choice".into(), Vec::new()));
            ledger.entries = trail;
            let reason = if reason.is_empty() { format!("{first}; no other choice completes") } else { reason };
            return Err(Error::DepthExhausted(Box::new(Exhaustion {
                stage: None,
                sigma: Some(sigma.to_string()),
                reason,
                ledger: Some(ledger),
            })));
        }
        Err(e) => return Err(e),
    };

    let mut local = vec![BitString::root(); full_tree_size(d)];
    for (sigma, rho) in &built.nodes {
        local[sigma.heap_index()] = *rho;
    }
    let boundary: HashMap<BitString, BitString> = built.boundary.into_iter().collect();
    let mut entries = built.entries;
    entries.sort_by_key(|e| (e.sigma, e.class == QuantifierClass::Sigma1));
    ledger.entries = entries;

    let local = Embedding::new(d, local)?;
    let embedding = compose_embeddings(r, &local)?;

    // g(ρ_{σ₁},…,ρ_{σₙ}) = f(ρ_{σ₁},…,ρ_{σₙ},ρ_{σₙ⌢0})
    let mut entries = Vec::new();
    for ic in enumerate_chains(&TruncatedTree::full(d), n, None) {
        let last = *ic.last();
        let ext = if last.len() < d { local.image(&last.child(0)) } else { boundary[&last] };
        let mut nodes: Vec<BitString> = ic.nodes().iter().map(|x| embedding.image(x)).collect();
        nodes.push(frame.to_host(ext));
        let color = f.eval_nodes(&nodes)?;
        nodes.pop();
        entries.push((Chain::new_unchecked(nodes), color));
    }
    let coloring = ChainColoring::table(n, f.colors(), f.depth(), entries)?;

    Ok(ReduceOutput { embedding, local, coloring, ledger })
}

/// Attaches stage information to a failure from [`reduce_step`].
pub(crate) fn at_stage(e: Error, stage: usize) -> Error {
    e.with_stage(stage)
}

pub(crate) fn exhaustion_with_ledger(reason: String, stage: usize, ledger: ReductionLedger) -> Error {
    Error::DepthExhausted(Box::new(Exhaustion { stage: Some(stage), sigma: None, reason, ledger: Some(ledger) }))
}
