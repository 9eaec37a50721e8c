//! Sacks conditions and the construction engine for preserving a maximal
//! antichain family.
//!
//! A condition is a perfect binary tree given by a finite antichain of free
//! stems: the tree holds every prefix of a stem and everything above one. Such
//! a tree is determined by the clopen set of its branches, so conditions reuse
//! the canonical [`ClopenSet`] form, and equality of trees is structural.
//!
//! Splitting levels are 0-indexed: `split_set(p, 0)` is the first splitting
//! node and `split_set(p, n)` has `2^n` elements.
//!
//! Names are abstracted by [`NameOracle`]: given a condition and a request it
//! returns a stronger condition and finitely many elements that condition
//! forces into the named antichain.

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use serde::Serialize;

use crate::error::{OracleError, SacksError};
use crate::families::LazyNodeSet;
use crate::measure::{self, ClopenSet};
use crate::treecore::{BinNode, Node, NodeSet, TreeNode};

/// A perfect binary tree in stem-antichain normal form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct SacksCondition(ClopenSet);

impl SacksCondition {
    pub fn full() -> Self {
        SacksCondition(ClopenSet::whole())
    }

    pub fn from_stems<I: IntoIterator<Item = BinNode>>(stems: I) -> Result<Self, SacksError> {
        Self::from_clopen(ClopenSet::from_stems(stems))
    }

    pub fn from_clopen(c: ClopenSet) -> Result<Self, SacksError> {
        if c.is_empty() {
            return Err(SacksError::PreconditionViolated(
                "a condition needs at least one stem".into(),
            ));
        }
        Ok(SacksCondition(c))
    }

    pub fn stems(&self) -> impl Iterator<Item = &BinNode> {
        self.0.stems().iter()
    }

    pub fn clopen(&self) -> &ClopenSet {
        &self.0
    }

    pub fn is_full(&self) -> bool {
        self.0.is_whole()
    }

    pub fn contains(&self, tau: &BinNode) -> bool {
        self.0.meets_node(tau)
    }

    /// The least splitting node extending `tau`, which must be in the tree.
    fn first_split_above(&self, tau: &BinNode) -> BinNode {
        let mut cur = tau.clone();
        loop {
            if self.0.contains_branch_prefix(&cur) {
                return cur;
            }
            let (c0, c1) = (cur.child(false), cur.child(true));
            match (self.contains(&c0), self.contains(&c1)) {
                (true, true) => return cur,
                (true, false) => cur = c0,
                (false, true) => cur = c1,
                (false, false) => unreachable!("{cur} is a leaf of a perfect tree"),
            }
        }
    }

    pub fn is_split(&self, tau: &BinNode) -> bool {
        self.contains(&tau.child(false)) && self.contains(&tau.child(true))
    }

    /// Tree nodes of level `< depth`.
    pub fn nodes_upto(&self, depth: usize) -> NodeSet<BinNode> {
        let mut out = NodeSet::new();
        let mut stack = vec![BinNode::root()];
        while let Some(t) = stack.pop() {
            if t.level() >= depth || !self.contains(&t) {
                continue;
            }
            stack.push(t.child(false));
            stack.push(t.child(true));
            out.insert(t);
        }
        out
    }
}

impl fmt::Debug for SacksCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

pub fn full_tree() -> SacksCondition {
    SacksCondition::full()
}

/// Splitting nodes with exactly `n` splitting nodes strictly below them.
pub fn split_set(p: &SacksCondition, n: usize) -> NodeSet<BinNode> {
    let mut level = vec![p.first_split_above(&BinNode::root())];
    for _ in 0..n {
        level = level
            .iter()
            .flat_map(|s| [s.child(false), s.child(true)])
            .map(|c| p.first_split_above(&c))
            .collect();
    }
    level.into_iter().collect()
}

/// `p ≤ q`: the tree of `p` is contained in the tree of `q`.
pub fn sacks_leq(p: &SacksCondition, q: &SacksCondition) -> bool {
    p.0.is_subset(&q.0)
}

/// `p ≤_n q`: `p ≤ q` and both have the same `n`-th splitting level.
pub fn leq_n(p: &SacksCondition, q: &SacksCondition, n: usize) -> bool {
    sacks_leq(p, q) && split_set(p, n) == split_set(q, n)
}

/// `{τ ∈ p : τ comparable with σ}`
pub fn restrict(p: &SacksCondition, sigma: &BinNode) -> Result<SacksCondition, SacksError> {
    if !p.contains(sigma) {
        return Err(SacksError::NotInCondition {
            node: sigma.to_string(),
        });
    }
    Ok(SacksCondition(measure::meet(
        &p.0,
        &measure::interval(sigma),
    )))
}

/// A condition of the countable product: finitely many coordinates carry a
/// non-full tree; every other coordinate is the full tree.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct ProdCondition {
    entries: BTreeMap<usize, SacksCondition>,
}

impl ProdCondition {
    pub fn full() -> Self {
        ProdCondition::default()
    }

    pub fn get(&self, i: usize) -> SacksCondition {
        self.entries
            .get(&i)
            .cloned()
            .unwrap_or_else(SacksCondition::full)
    }

    pub fn set(&mut self, i: usize, c: SacksCondition) {
        if c.is_full() {
            self.entries.remove(&i);
        } else {
            self.entries.insert(i, c);
        }
    }

    pub fn with(mut self, i: usize, c: SacksCondition) -> Self {
        self.set(i, c);
        self
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    fn joint_support(&self, other: &ProdCondition) -> Vec<usize> {
        self.support()
            .chain(other.support())
            .sorted()
            .dedup()
            .collect()
    }

    /// Coordinatewise `≤`.
    pub fn leq(&self, other: &ProdCondition) -> bool {
        self.joint_support(other)
            .into_iter()
            .all(|i| sacks_leq(&self.get(i), &other.get(i)))
    }

    /// `self ≤ other` and the two share every `n`-th vector splitting point:
    /// `split_{n-i}` agrees at each coordinate `i ≤ n`.
    pub fn leq_n(&self, other: &ProdCondition, n: usize) -> bool {
        self.leq(other)
            && (0..=n).all(|i| split_set(&self.get(i), n - i) == split_set(&other.get(i), n - i))
    }

    /// Inverse of [`ProdCondition::summary`].
    pub fn from_summary(m: &BTreeMap<usize, Vec<String>>) -> Result<Self, SacksError> {
        let mut out = ProdCondition::full();
        for (i, stems) in m {
            let stems = stems
                .iter()
                .map(|s| s.parse::<BinNode>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| SacksError::PreconditionViolated(e.to_string()))?;
            out.set(*i, SacksCondition::from_stems(stems)?);
        }
        Ok(out)
    }

    /// Per-coordinate stem literals, for traces.
    pub fn summary(&self) -> BTreeMap<usize, Vec<String>> {
        self.entries
            .iter()
            .map(|(i, c)| (*i, c.stems().map(|s| s.to_string()).collect()))
            .collect()
    }
}

/// A vector splitting point `⟨σ₀,…,σ_n⟩` with `σ_i ∈ split_{n−i}(p(i))`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct VecSplit(pub Vec<BinNode>);

impl VecSplit {
    /// The index `n` of the splitting level this point lives on.
    pub fn level(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn parts(&self) -> &[BinNode] {
        &self.0
    }
}

impl fmt::Debug for VecSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// All `n`-th vector splitting points, with coordinate 0 varying slowest.
pub fn vec_splits(p: &ProdCondition, n: usize) -> Vec<VecSplit> {
    (0..=n)
        .map(|i| split_set(&p.get(i), n - i).into_iter().collect::<Vec<_>>())
        .multi_cartesian_product()
        .map(VecSplit)
        .collect()
}

fn check_vec_split(p: &ProdCondition, v: &VecSplit) -> Result<(), SacksError> {
    if v.0.is_empty() {
        return Err(SacksError::InvalidVecSplit("empty vector".into()));
    }
    let n = v.level();
    for (i, s) in v.0.iter().enumerate() {
        if !split_set(&p.get(i), n - i).contains(s) {
            return Err(SacksError::InvalidVecSplit(format!(
                "coordinate {i}: {s} is not in split_{}",
                n - i
            )));
        }
    }
    Ok(())
}

/// Coordinatewise restriction to the parts of `v`, without requiring them to
/// be splitting points of `p`.
fn restrict_parts(p: &ProdCondition, v: &VecSplit) -> Result<ProdCondition, SacksError> {
    let mut out = p.clone();
    for (i, s) in v.0.iter().enumerate() {
        out.set(i, restrict(&p.get(i), s)?);
    }
    Ok(out)
}

/// `(p↾σ⃗)(i) = p(i)↾σ_i` for `i ≤ n`, `p(i)` beyond.
pub fn restrict_vec(p: &ProdCondition, v: &VecSplit) -> Result<ProdCondition, SacksError> {
    check_vec_split(p, v)?;
    restrict_parts(p, v)
}

/// Puts `refined` (an extension of `base↾v`) back together with the other
/// branches of `base` at the splitting level of `v`. The level is read off
/// `v`: for `v` on level `m`, coordinates `i ≤ m` become
/// `refined(i) ∪ ⋃{base(i)↾σ : σ ∈ split_{m−i}(base(i)), σ ≠ v(i)}` and
/// coordinates beyond `m` are taken from `refined`.
pub fn amalgamate(
    base: &ProdCondition,
    refined: &ProdCondition,
    v: &VecSplit,
) -> Result<ProdCondition, SacksError> {
    amalgamate_with_frame(base, base, refined, v)
}

/// As [`amalgamate`], with the splitting points taken from `frame` rather
/// than `base`. The stage engine keeps the condition it started the stage
/// from as the frame so that its splitting level is preserved while `base`
/// keeps shrinking.
pub fn amalgamate_with_frame(
    base: &ProdCondition,
    frame: &ProdCondition,
    refined: &ProdCondition,
    v: &VecSplit,
) -> Result<ProdCondition, SacksError> {
    check_vec_split(frame, v)?;
    let restricted = restrict_parts(base, v)?;
    if !refined.leq(&restricted) {
        return Err(SacksError::PreconditionViolated(format!(
            "refined condition does not extend the restriction to {v:?}"
        )));
    }
    let m = v.level();
    let mut out = refined.clone();
    for (i, vi) in v.0.iter().enumerate() {
        let b = base.get(i);
        let mut stems: Vec<BinNode> = refined.get(i).stems().cloned().collect();
        for sigma in split_set(&frame.get(i), m - i) {
            if &sigma != vi {
                stems.extend(restrict(&b, &sigma)?.stems().cloned());
            }
        }
        out.set(i, SacksCondition::from_stems(stems)?);
    }
    Ok(out)
}

/// What the engine asks of a name.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RevealRequest {
    pub count: usize,
    pub forbidden: NodeSet,
    pub incomparable_to: NodeSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Revelation {
    pub condition: ProdCondition,
    pub revealed: Vec<Node>,
}

/// A name for an antichain of the ω-tree, seen through what conditions force
/// about it.
///
/// Contract: the returned condition extends the given one; the revealed
/// elements form an antichain of exactly `count` nodes, avoid `forbidden`,
/// and are incomparable with every node of `incomparable_to`; anything
/// revealed under `q` is revealed again under extensions of the returned
/// condition.
pub trait NameOracle {
    fn decide(&self, q: &ProdCondition, req: &RevealRequest) -> Result<Revelation, OracleError>;

    fn describe(&self) -> String;
}

fn admissible(candidate: &Node, req: &RevealRequest, chosen: &[Node]) -> bool {
    !req.forbidden.contains(candidate)
        && req
            .incomparable_to
            .iter()
            .chain(chosen)
            .all(|t| !t.comparable(candidate))
}

/// A ground-model set viewed as a name: never strengthens the condition and
/// reveals elements of the set in level-then-lexicographic order.
#[derive(Clone, Debug)]
pub struct GroundSetName {
    set: LazyNodeSet,
    probe_depth: usize,
}

pub fn ground_set_name(set: LazyNodeSet, probe_depth: usize) -> GroundSetName {
    GroundSetName { set, probe_depth }
}

impl NameOracle for GroundSetName {
    fn decide(&self, q: &ProdCondition, req: &RevealRequest) -> Result<Revelation, OracleError> {
        let mut revealed = Vec::with_capacity(req.count);
        for c in self.set.iter_upto(self.probe_depth) {
            if revealed.len() == req.count {
                break;
            }
            if admissible(&c, req, &revealed) {
                revealed.push(c);
            }
        }
        if revealed.len() < req.count {
            return Err(OracleError::Exhausted {
                wanted: req.count,
                found: revealed.len(),
                depth: self.probe_depth,
            });
        }
        Ok(Revelation {
            condition: q.clone(),
            revealed,
        })
    }

    fn describe(&self) -> String {
        format!("ground set {:?} to depth {}", self.set, self.probe_depth)
    }
}

/// The name `{c_{2k + g(k)} : k ∈ ω}` where `g` is the generic real added at
/// `coordinate` and `c_0, c_1, …` is a fixed antichain. Deciding bit `k`
/// strengthens the condition along its leftmost node of level `k + 1`, so
/// this oracle exercises amalgamation.
#[derive(Clone, Debug)]
pub struct SelectorName {
    candidates: Vec<Node>,
    coordinate: usize,
}

impl SelectorName {
    pub fn new(candidates: Vec<Node>, coordinate: usize) -> Self {
        SelectorName {
            candidates,
            coordinate,
        }
    }

    fn decided_bit(tree: &SacksCondition, k: usize) -> Option<bool> {
        let mut seen = [false; 2];
        for s in tree.stems() {
            match s.bits().get(k) {
                Some(&b) => seen[b as usize] = true,
                None => return None,
            }
        }
        match seen {
            [true, false] => Some(false),
            [false, true] => Some(true),
            _ => None,
        }
    }

    fn leftmost(tree: &SacksCondition, len: usize) -> BinNode {
        let mut cur = BinNode::root();
        while cur.level() < len {
            let c0 = cur.child(false);
            cur = if tree.contains(&c0) {
                c0
            } else {
                cur.child(true)
            };
        }
        cur
    }
}

impl NameOracle for SelectorName {
    fn decide(&self, q: &ProdCondition, req: &RevealRequest) -> Result<Revelation, OracleError> {
        let mut tree = q.get(self.coordinate);
        let mut revealed = Vec::with_capacity(req.count);
        let mut k = 0;
        while revealed.len() < req.count {
            if 2 * k >= self.candidates.len() {
                return Err(OracleError::Exhausted {
                    wanted: req.count,
                    found: revealed.len(),
                    depth: self.candidates.len(),
                });
            }
            let bit = match Self::decided_bit(&tree, k) {
                Some(b) => b,
                None => {
                    let node = Self::leftmost(&tree, k + 1);
                    tree = restrict(&tree, &node).expect("leftmost node is in the tree");
                    node.bits()[k]
                }
            };
            let c = &self.candidates[2 * k + bit as usize];
            if admissible(c, req, &revealed) {
                revealed.push(c.clone());
            }
            k += 1;
        }
        Ok(Revelation {
            condition: q.clone().with(self.coordinate, tree),
            revealed,
        })
    }

    fn describe(&self) -> String {
        format!(
            "selector over {} candidates at coordinate {}",
            self.candidates.len(),
            self.coordinate
        )
    }
}

/// Engine parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EngineConfig {
    /// Number of admissible elements a name must still reveal for a pairing
    /// choice (and the end-of-stage check) to count as "infinitely many".
    pub probe_count: usize,
    /// Largest `k` with `|a_i| = 2^k` the engine will attempt.
    pub max_exponent: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            probe_count: 4,
            max_exponent: 10,
        }
    }
}

/// State carried between stages.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageState {
    pub n: usize,
    pub p: ProdCondition,
    pub s_blocks: Vec<NodeSet>,
    pub b_list: Vec<NodeSet>,
}

impl StageState {
    /// Stage 0: `p₀` and `S₀ = ∅`.
    pub fn initial(p0: ProdCondition, b_list: Vec<NodeSet>) -> Self {
        StageState {
            n: 0,
            p: p0,
            s_blocks: vec![NodeSet::new()],
            b_list,
        }
    }

    pub fn union_s(&self) -> NodeSet {
        self.s_blocks.iter().flatten().cloned().collect()
    }

    /// `B_0 ∪ … ∪ B_i`; missing entries are empty.
    pub fn forbidden_upto(&self, i: usize) -> NodeSet {
        self.b_list.iter().take(i + 1).flatten().cloned().collect()
    }

    /// Violations of the carried invariants, if any.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        let all = self.union_s();
        if all.len() != self.s_blocks.iter().map(|b| b.len()).sum::<usize>() {
            out.push("S blocks overlap".to_string());
        }
        if !crate::treecore::is_antichain(&all) {
            out.push("union of S blocks is not an antichain".to_string());
        }
        for (m, block) in self.s_blocks.iter().enumerate() {
            for (i, b) in self.b_list.iter().enumerate().take(m + 1) {
                if !block.is_disjoint(b) {
                    out.push(format!("S_{m} meets B_{i}"));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairChoice {
    pub chosen: Node,
    pub rejected: Node,
}

/// One amalgamation `r_{i,j}` of the stage grid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GridStep {
    pub i: usize,
    pub j: usize,
    pub vec_split: VecSplit,
    /// Empty for the step that reveals `a_i`.
    pub pairs: Vec<PairChoice>,
    pub condition: BTreeMap<usize, Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageRecord {
    pub stage: usize,
    pub vec_splits: Vec<VecSplit>,
    pub a_sets: Vec<Vec<Node>>,
    pub pairing_rounds: Vec<GridStep>,
    pub survivors: Vec<Node>,
    pub leq_n_check: bool,
    #[serde(rename = "S_block")]
    pub s_block: NodeSet,
    /// `p_{n+1}`
    pub condition: BTreeMap<usize, Vec<String>>,
}

struct Pairing<'a> {
    stage: usize,
    frame: &'a ProdCondition,
    forbidden: &'a NodeSet,
    incumbent: &'a NodeSet,
    probe_count: usize,
}

fn violated(stage: usize, detail: impl Into<String>) -> SacksError {
    SacksError::OracleContractViolated {
        stage,
        detail: detail.into(),
    }
}

fn checked_decide(
    oracle: &dyn NameOracle,
    q: &ProdCondition,
    req: &RevealRequest,
    stage: usize,
) -> Result<Result<Revelation, OracleError>, SacksError> {
    let rev = match oracle.decide(q, req) {
        Ok(r) => r,
        Err(e) => return Ok(Err(e)),
    };
    if !rev.condition.leq(q) {
        return Err(violated(
            stage,
            "returned condition does not extend the query",
        ));
    }
    if rev.revealed.len() != req.count {
        return Err(violated(
            stage,
            format!(
                "asked for {} elements, got {}",
                req.count,
                rev.revealed.len()
            ),
        ));
    }
    for (idx, x) in rev.revealed.iter().enumerate() {
        if !admissible(x, req, &rev.revealed[..idx]) {
            return Err(violated(
                stage,
                format!("revealed {x} breaks the request constraints"),
            ));
        }
    }
    Ok(Ok(rev))
}

impl Pairing<'_> {
    /// Runs one halving round per entry of `v_list` until one element of `a`
    /// is left. Each pair keeps the element that the name still avoids
    /// infinitely often, as far as `probe_count` can tell.
    fn run(
        &self,
        mut p: ProdCondition,
        v_list: &[(usize, VecSplit)],
        a: &[Node],
        oracle: &dyn NameOracle,
        i: usize,
        steps: &mut Vec<GridStep>,
    ) -> Result<(ProdCondition, Node), SacksError> {
        if !a.len().is_power_of_two() {
            return Err(SacksError::NotPowerOfTwo(a.len()));
        }
        let rounds = a.len().trailing_zeros() as usize;
        if v_list.len() < rounds {
            return Err(SacksError::PreconditionViolated(format!(
                "{rounds} pairing rounds need as many vector splitting points, got {}",
                v_list.len()
            )));
        }
        let mut remaining = a.to_vec();
        for (j, v) in v_list.iter().take(rounds) {
            let mut q = restrict_parts(&p, v)?;
            let mut kept = Vec::with_capacity(remaining.len() / 2);
            let mut pairs = Vec::with_capacity(remaining.len() / 2);
            for pair in remaining.chunks(2) {
                let (t1, t2) = (&pair[0], &pair[1]);
                let mut decided = None;
                for (t, other) in [(t1, t2), (t2, t1)] {
                    let mut incomparable_to = self.incumbent.clone();
                    incomparable_to.insert(t.clone());
                    let req = RevealRequest {
                        count: self.probe_count,
                        forbidden: self.forbidden.clone(),
                        incomparable_to,
                    };
                    if let Ok(rev) = checked_decide(oracle, &q, &req, self.stage)? {
                        decided = Some((rev.condition, t.clone(), other.clone()));
                        break;
                    }
                }
                let Some((cond, chosen, rejected)) = decided else {
                    return Err(violated(
                        self.stage,
                        format!("name keeps neither {t1} nor {t2} avoided"),
                    ));
                };
                q = cond;
                kept.push(chosen.clone());
                pairs.push(PairChoice { chosen, rejected });
            }
            p = amalgamate_with_frame(&p, self.frame, &q, v)?;
            steps.push(GridStep {
                i,
                j: *j,
                vec_split: v.clone(),
                pairs,
                condition: p.summary(),
            });
            remaining = kept;
        }
        Ok((p, remaining.pop().expect("one element left")))
    }
}

/// Reduces `a` (of size `2^m`) to a single survivor in `m` pairing rounds,
/// the `r`-th round working below `v_list[r]` and amalgamating back against
/// the splitting points of `frame`.
#[allow(clippy::too_many_arguments)]
pub fn pair_reduce(
    p: &ProdCondition,
    frame: &ProdCondition,
    v_list: &[VecSplit],
    a: &[Node],
    oracle: &dyn NameOracle,
    incumbent: &NodeSet,
    forbidden: &NodeSet,
    probe_count: usize,
) -> Result<(ProdCondition, Node), SacksError> {
    let ctx = Pairing {
        stage: 0,
        frame,
        forbidden,
        incumbent,
        probe_count,
    };
    let v_list: Vec<(usize, VecSplit)> = v_list.iter().cloned().enumerate().collect();
    ctx.run(p.clone(), &v_list, a, oracle, 0, &mut Vec::new())
}

/// Builds `p_{n+1}` and `S_{n+1}` from stage `n`.
pub fn stage_step(
    state: &StageState,
    oracle: &dyn NameOracle,
    cfg: &EngineConfig,
) -> Result<(StageState, StageRecord), SacksError> {
    let stage = state.n + 1;
    let frame = &state.p;
    let vecs = vec_splits(frame, stage);
    let k = vecs.len() - 1;
    if k > cfg.max_exponent {
        return Err(SacksError::BudgetExceeded {
            exponent: k,
            budget: cfg.max_exponent,
        });
    }
    let forbidden = state.forbidden_upto(stage);
    let earlier = state.union_s();

    let mut current = frame.clone();
    let mut survivors: Vec<Node> = Vec::with_capacity(k + 1);
    let mut a_sets = Vec::with_capacity(k + 1);
    let mut steps = Vec::new();

    for (i, vi) in vecs.iter().enumerate() {
        let incumbent: NodeSet = earlier.iter().chain(&survivors).cloned().collect();
        let q = restrict_parts(&current, vi)?;
        let req = RevealRequest {
            count: 1 << k,
            forbidden: forbidden.clone(),
            incomparable_to: incumbent.clone(),
        };
        let rev = checked_decide(oracle, &q, &req, stage)?
            .map_err(|e| violated(stage, format!("revealing a_{i}: {e}")))?;
        current = amalgamate_with_frame(&current, frame, &rev.condition, vi)?;
        steps.push(GridStep {
            i,
            j: i,
            vec_split: vi.clone(),
            pairs: Vec::new(),
            condition: current.summary(),
        });

        let order: Vec<(usize, VecSplit)> = (0..vecs.len())
            .filter(|&j| j != i)
            .map(|j| (j, vecs[j].clone()))
            .collect();
        let ctx = Pairing {
            stage,
            frame,
            forbidden: &forbidden,
            incumbent: &incumbent,
            probe_count: cfg.probe_count,
        };
        let (next, s) = ctx.run(current, &order, &rev.revealed, oracle, i, &mut steps)?;
        current = next;
        a_sets.push(rev.revealed);
        survivors.push(s);
    }

    let s_block: NodeSet = survivors.iter().cloned().collect();
    let mut s_blocks = state.s_blocks.clone();
    s_blocks.push(s_block.clone());
    let next = StageState {
        n: stage,
        p: current,
        s_blocks,
        b_list: state.b_list.clone(),
    };

    // the name must still avoid everything built so far
    let req = RevealRequest {
        count: cfg.probe_count,
        forbidden,
        incomparable_to: next.union_s(),
    };
    checked_decide(oracle, &next.p, &req, stage)?
        .map_err(|e| violated(stage, format!("after the stage: {e}")))?;

    let leq_n_check = next.p.leq_n(frame, state.n);
    let record = StageRecord {
        stage,
        vec_splits: vecs,
        a_sets,
        pairing_rounds: steps,
        survivors,
        leq_n_check,
        s_block,
        condition: next.p.summary(),
    };
    Ok((next, record))
}

/// Runs `stages` stage steps from `initial`, returning every state (starting
/// with `initial`) and the stage records.
pub fn run_stages(
    initial: StageState,
    oracle: &dyn NameOracle,
    cfg: &EngineConfig,
    stages: usize,
) -> Result<(Vec<StageState>, Vec<StageRecord>), SacksError> {
    let mut states = vec![initial];
    let mut records = Vec::with_capacity(stages);
    for _ in 0..stages {
        let (next, rec) = stage_step(states.last().unwrap(), oracle, cfg)?;
        states.push(next);
        records.push(rec);
    }
    Ok((states, records))
}

/// The coordinatewise intersection of a fusion sequence, examined to a depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Fusion {
    pub depth: usize,
    pub limit: ProdCondition,
    /// `agreement[n]`: the limit has the same vector splitting levels
    /// `0..=n` as `seq[n]`, among points lying below `depth`.
    pub agreement: Vec<bool>,
}

impl Fusion {
    /// Nodes of coordinate `i` below the depth.
    pub fn nodes(&self, i: usize) -> NodeSet<BinNode> {
        self.limit.get(i).nodes_upto(self.depth)
    }

    /// Every truncated node has a splitting node above it inside the
    /// truncation, or an extension reaching the last level.
    pub fn truncated_is_perfect(&self, coordinates: usize) -> bool {
        (0..coordinates).all(|i| {
            let tree = self.limit.get(i);
            let nodes = self.nodes(i);
            nodes.iter().all(|t| {
                nodes
                    .range(t.clone()..)
                    .take_while(|x| t.is_prefix_of(x))
                    .any(|x| tree.is_split(x) || x.level() + 1 == self.depth)
            })
        })
    }
}

fn split_level_below(p: &ProdCondition, j: usize, depth: usize) -> Vec<NodeSet<BinNode>> {
    (0..=j)
        .map(|i| {
            split_set(&p.get(i), j - i)
                .into_iter()
                .filter(|s| s.level() < depth)
                .collect()
        })
        .collect()
}

/// Checks `seq[n+1] ≤_n seq[n]` throughout and intersects coordinatewise.
pub fn fuse(seq: &[ProdCondition], depth: usize) -> Result<Fusion, SacksError> {
    if seq.is_empty() {
        return Err(SacksError::PreconditionViolated("empty sequence".into()));
    }
    for n in 0..seq.len() - 1 {
        if !seq[n + 1].leq_n(&seq[n], n) {
            return Err(SacksError::NotAFusionSequence(n));
        }
    }
    let coords: Vec<usize> = seq
        .iter()
        .flat_map(|p| p.support())
        .sorted()
        .dedup()
        .collect();
    let mut limit = ProdCondition::full();
    for i in coords {
        let c = seq
            .iter()
            .skip(1)
            .fold(seq[0].get(i).clopen().clone(), |acc, p| {
                measure::meet(&acc, p.get(i).clopen())
            });
        limit.set(i, SacksCondition::from_clopen(c)?);
    }
    let agreement = seq
        .iter()
        .enumerate()
        .map(|(n, p)| {
            (0..=n).all(|j| split_level_below(&limit, j, depth) == split_level_below(p, j, depth))
        })
        .collect();
    Ok(Fusion {
        depth,
        limit,
        agreement,
    })
}
