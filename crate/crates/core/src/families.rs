//! Lazily described node sets, families of them, and the transformations
//! between families: the block-of-ones embedding of the ω-tree into the
//! binary tree and the two pullbacks, the disjointification `h` of a list of
//! sets, restriction of a decomposition to a set, and the translation of node
//! sets to subsets of ω×ω along a list of branches.
//!
//! All finite evidence is computed on the *window* of depth `d`: nodes of
//! level `< d` whose coordinates are all `< d`. For subsets of the binary tree
//! (and `d ≥ 2`) the window is exactly the levels below `d`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::FamilyError;
use crate::treecore::{self, BinNode, EpBranch, Node, NodeSet, TreeNode};

/// Default chain length at which [`offbranch_upto`] reports a chain.
pub const DEFAULT_CHAIN_THRESHOLD: usize = 4;

pub fn in_window(sigma: &Node, depth: usize) -> bool {
    sigma.level() < depth && sigma.coords().iter().all(|&c| (c as usize) < depth)
}

/// Every node of the window of depth `depth` with coordinates below `width`,
/// ordered by level and then lexicographically.
pub fn box_nodes(depth: usize, width: u32) -> impl Iterator<Item = Node> {
    (0..depth).flat_map(move |len| LevelIter::new(len, width))
}

/// Odometer over all nodes of one level with coordinates `< width`.
struct LevelIter {
    cur: Option<Vec<u32>>,
    width: u32,
}

impl LevelIter {
    fn new(len: usize, width: u32) -> Self {
        let cur = if len > 0 && width == 0 {
            None
        } else {
            Some(vec![0; len])
        };
        LevelIter { cur, width }
    }
}

impl Iterator for LevelIter {
    type Item = Node;

    fn next(&mut self) -> Option<Node> {
        let out = self.cur.clone()?;
        let cur = self.cur.as_mut().unwrap();
        let mut i = cur.len();
        loop {
            if i == 0 {
                self.cur = None;
                break;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < self.width {
                break;
            }
            cur[i] = 0;
        }
        Some(Node::new(out))
    }
}

fn level_lex_key(n: &Node) -> (usize, &[u32]) {
    (n.level(), n.coords())
}

type Predicate = dyn Fn(&Node) -> bool + Send + Sync;

enum SetKind {
    Explicit(NodeSet),
    Level(usize),
    BranchPrefixes(EpBranch),
    HairOfBranch(EpBranch),
    ZerosThenOne,
    PiImage(LazyNodeSet),
    BinaryPart(LazyNodeSet),
    PiPullback(LazyNodeSet),
    Intersection(LazyNodeSet, LazyNodeSet),
    Predicate {
        name: String,
        contains: Arc<Predicate>,
        infinite: bool,
    },
}

/// A possibly infinite set of nodes, given by a membership test and an
/// enumerator of its finite windows.
#[derive(Clone)]
pub struct LazyNodeSet(Arc<SetKind>);

impl LazyNodeSet {
    fn wrap(k: SetKind) -> Self {
        LazyNodeSet(Arc::new(k))
    }

    pub fn explicit<I: IntoIterator<Item = Node>>(nodes: I) -> Self {
        Self::wrap(SetKind::Explicit(nodes.into_iter().collect()))
    }

    /// All nodes of level `n`.
    pub fn level(n: usize) -> Self {
        Self::wrap(SetKind::Level(n))
    }

    pub fn branch_prefixes(b: EpBranch) -> Self {
        Self::wrap(SetKind::BranchPrefixes(b))
    }

    /// `{rs(σ) : σ a nonempty prefix of b}`.
    pub fn hair_of_branch(b: EpBranch) -> Self {
        Self::wrap(SetKind::HairOfBranch(b))
    }

    /// The binary antichain `{0ⁿ⌢⟨1⟩ : n ∈ ω}`.
    pub fn zeros_then_one() -> Self {
        Self::wrap(SetKind::ZerosThenOne)
    }

    /// Image of `of` under [`pi_embed`], as a set of binary nodes.
    pub fn pi_image(of: LazyNodeSet) -> Self {
        Self::wrap(SetKind::PiImage(of))
    }

    /// `of ∩ 2^<ω`
    pub fn binary_part(of: LazyNodeSet) -> Self {
        Self::wrap(SetKind::BinaryPart(of))
    }

    /// `{σ : π(σ) ∈ of}`
    pub fn pi_pullback(of: LazyNodeSet) -> Self {
        Self::wrap(SetKind::PiPullback(of))
    }

    pub fn intersection(a: LazyNodeSet, b: LazyNodeSet) -> Self {
        Self::wrap(SetKind::Intersection(a, b))
    }

    /// An arbitrary pure membership predicate. Windows are enumerated by
    /// scanning every node of the window, which costs `d^d` at depth `d`.
    pub fn from_predicate<F>(name: impl Into<String>, infinite: bool, contains: F) -> Self
    where
        F: Fn(&Node) -> bool + Send + Sync + 'static,
    {
        Self::wrap(SetKind::Predicate {
            name: name.into(),
            contains: Arc::new(contains),
            infinite,
        })
    }

    pub fn contains(&self, sigma: &Node) -> bool {
        match &*self.0 {
            SetKind::Explicit(s) => s.contains(sigma),
            SetKind::Level(n) => sigma.level() == *n,
            SetKind::BranchPrefixes(b) => b.contains(sigma),
            SetKind::HairOfBranch(b) => match treecore::left_shift(sigma) {
                Some(ls) => b.contains(&ls),
                None => false,
            },
            SetKind::ZerosThenOne => match sigma.coords().split_last() {
                Some((1, init)) => init.iter().all(|&c| c == 0),
                _ => false,
            },
            SetKind::PiImage(of) => match BinNode::try_from(sigma) {
                Ok(t) => pi_decode(&t).map(|s| of.contains(&s)).unwrap_or(false),
                Err(_) => false,
            },
            SetKind::BinaryPart(of) => sigma.is_binary() && of.contains(sigma),
            SetKind::PiPullback(of) => of.contains(&Node::from(&pi_embed(sigma))),
            SetKind::Intersection(a, b) => a.contains(sigma) && b.contains(sigma),
            SetKind::Predicate { contains, .. } => contains(sigma),
        }
    }

    /// Members of the window of depth `depth`, by level then lexicographically.
    pub fn iter_upto(&self, depth: usize) -> Box<dyn Iterator<Item = Node> + '_> {
        let width = depth as u32;
        match &*self.0 {
            SetKind::Explicit(s) => {
                let mut v: Vec<Node> = s.iter().filter(|n| in_window(n, depth)).cloned().collect();
                v.sort_by(|a, b| level_lex_key(a).cmp(&level_lex_key(b)));
                Box::new(v.into_iter())
            }
            SetKind::Level(n) => {
                if *n < depth {
                    Box::new(LevelIter::new(*n, width))
                } else {
                    Box::new(std::iter::empty())
                }
            }
            SetKind::BranchPrefixes(b) => Box::new(
                b.prefixes_upto(depth)
                    .into_iter()
                    .filter(move |n| in_window(n, depth)),
            ),
            SetKind::HairOfBranch(b) => Box::new(
                (1..depth)
                    .map(|l| treecore::rs(&b.node_at(l)).expect("nonempty"))
                    .filter(move |n| in_window(n, depth)),
            ),
            SetKind::ZerosThenOne => Box::new(
                (1..depth.max(1))
                    .map(|l| {
                        let mut v = vec![0; l];
                        v[l - 1] = 1;
                        Node::new(v)
                    })
                    .filter(move |n| in_window(n, depth)),
            ),
            SetKind::PiImage(_) | SetKind::BinaryPart(_) => {
                Box::new(box_nodes(depth, width.min(2)).filter(move |n| self.contains(n)))
            }
            SetKind::Intersection(a, b) => {
                Box::new(a.iter_upto(depth).filter(move |n| b.contains(n)))
            }
            SetKind::PiPullback(_) | SetKind::Predicate { .. } => {
                Box::new(box_nodes(depth, width).filter(move |n| self.contains(n)))
            }
        }
    }

    pub fn enumerate_upto(&self, depth: usize) -> NodeSet {
        self.iter_upto(depth).collect()
    }

    /// Declared certificate of infinitude; spot-checked, never proved.
    pub fn claims_infinite(&self) -> bool {
        match &*self.0 {
            SetKind::Explicit(_) => false,
            SetKind::Level(n) => *n > 0,
            SetKind::BranchPrefixes(_) | SetKind::HairOfBranch(_) | SetKind::ZerosThenOne => true,
            SetKind::PiImage(of) => of.claims_infinite(),
            SetKind::BinaryPart(of) | SetKind::PiPullback(of) => of.claims_infinite(),
            SetKind::Intersection(a, b) => a.claims_infinite() && b.claims_infinite(),
            SetKind::Predicate { infinite, .. } => *infinite,
        }
    }
}

impl fmt::Debug for LazyNodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            SetKind::Explicit(s) => write!(f, "explicit{s:?}"),
            SetKind::Level(n) => write!(f, "level({n})"),
            SetKind::BranchPrefixes(b) => write!(f, "branch-prefixes({b:?})"),
            SetKind::HairOfBranch(b) => write!(f, "hair-of-branch({b:?})"),
            SetKind::ZerosThenOne => write!(f, "zeros-then-one"),
            SetKind::PiImage(of) => write!(f, "pi-image({of:?})"),
            SetKind::BinaryPart(of) => write!(f, "binary-part({of:?})"),
            SetKind::PiPullback(of) => write!(f, "pi-pullback({of:?})"),
            SetKind::Intersection(a, b) => write!(f, "({a:?} ∩ {b:?})"),
            SetKind::Predicate { name, .. } => write!(f, "predicate({name})"),
        }
    }
}

/// Desk-scale stand-in for "infinite": the truncation at depth `d` has at
/// least `d/2` elements, or reaches the top third of the probed levels.
pub fn meets_infinitude_threshold(truncation: &NodeSet, depth: usize) -> bool {
    2 * truncation.len() >= depth || truncation.iter().any(|n| 3 * n.level() >= 2 * depth)
}

#[derive(Clone, Debug)]
pub struct Member {
    pub label: String,
    pub set: LazyNodeSet,
}

/// A finite list of labelled node sets with unique labels.
#[derive(Clone, Debug, Default)]
pub struct Family {
    members: Vec<Member>,
}

impl Family {
    pub fn new<I, S>(members: I) -> Result<Self, FamilyError>
    where
        I: IntoIterator<Item = (S, LazyNodeSet)>,
        S: Into<String>,
    {
        let mut fam = Family::default();
        for (label, set) in members {
            fam.push(label, set)?;
        }
        Ok(fam)
    }

    pub fn push(&mut self, label: impl Into<String>, set: LazyNodeSet) -> Result<(), FamilyError> {
        let label = label.into();
        if self.get(&label).is_some() {
            return Err(FamilyError::DuplicateLabel(label));
        }
        self.members.push(Member { label, set });
        Ok(())
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn get(&self, label: &str) -> Option<&LazyNodeSet> {
        self.members
            .iter()
            .find(|m| m.label == label)
            .map(|m| &m.set)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.members.iter().map(|m| m.label.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// A family produced by a transformation, with the labels of the members
/// that were dropped for failing the infinitude threshold.
#[derive(Clone, Debug)]
pub struct Filtered {
    pub family: Family,
    pub dropped: Vec<String>,
    pub probe_depth: usize,
}

fn filter_infinite(
    source: &Family,
    probe_depth: usize,
    map: impl Fn(&LazyNodeSet) -> LazyNodeSet,
) -> Filtered {
    let mut family = Family::default();
    let mut dropped = Vec::new();
    for m in source.members() {
        let set = map(&m.set);
        if meets_infinitude_threshold(&set.enumerate_upto(probe_depth), probe_depth) {
            family
                .push(m.label.clone(), set)
                .expect("labels already unique");
        } else {
            dropped.push(m.label.clone());
        }
    }
    Filtered {
        family,
        dropped,
        probe_depth,
    }
}

/// `⟨n₀,…,n_k⟩ ↦ 1^{n₀}⌢0⌢…⌢1^{n_k}⌢0`
pub fn pi_embed(sigma: &Node) -> BinNode {
    let mut bits = Vec::with_capacity(sigma.weight() as usize);
    for &c in sigma.coords() {
        bits.extend(std::iter::repeat_n(true, c as usize));
        bits.push(false);
    }
    BinNode::from_bools(bits)
}

pub fn pi_decode(tau: &BinNode) -> Result<Node, FamilyError> {
    if tau.last() == Some(true) {
        return Err(FamilyError::NotInImage(tau.to_string()));
    }
    let mut coords = Vec::new();
    let mut run = 0u32;
    for &bit in tau.bits() {
        if bit {
            run += 1;
        } else {
            coords.push(run);
            run = 0;
        }
    }
    Ok(Node::new(coords))
}

/// Replaces each member `A` by `A ∩ 2^<ω`, keeping those that still look
/// infinite at `probe_depth`.
pub fn pullback_identity(o: &Family, probe_depth: usize) -> Filtered {
    filter_infinite(o, probe_depth, |a| LazyNodeSet::binary_part(a.clone()))
}

/// Replaces each binary member `Ā` by `{σ : π(σ) ∈ Ā}`, keeping those that
/// still look infinite at `probe_depth`.
pub fn pullback_pi(obar: &Family, probe_depth: usize) -> Filtered {
    filter_infinite(obar, probe_depth, |a| LazyNodeSet::pi_pullback(a.clone()))
}

fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of nodes of weight `w` with `k` coordinates.
fn count_weight_len(w: u64, k: u64) -> u64 {
    match (w, k) {
        (0, 0) => 1,
        (_, 0) | (0, _) => 0,
        _ => binom(w - 1, k - 1),
    }
}

/// The canonical enumeration of all nodes: by weight (length plus sum of
/// coordinates), then by length, then lexicographically. Every weight class
/// is finite, so this is a bijection between ω and the tree.
pub fn canonical_node(index: u64) -> Node {
    if index == 0 {
        return Node::root();
    }
    let w = 64 - index.leading_zeros() as u64;
    let mut r = index - (1u64 << (w - 1));
    let mut k = 1;
    loop {
        let c = count_weight_len(w, k);
        if r < c {
            break;
        }
        r -= c;
        k += 1;
    }
    let mut coords = Vec::with_capacity(k as usize);
    let (mut w, mut k) = (w, k);
    while k > 0 {
        let mut part = 1;
        loop {
            let c = count_weight_len(w - part, k - 1);
            if r < c {
                break;
            }
            r -= c;
            part += 1;
        }
        coords.push((part - 1) as u32);
        w -= part;
        k -= 1;
    }
    Node::new(coords)
}

/// Inverse of [`canonical_node`].
pub fn canonical_index(sigma: &Node) -> u64 {
    let w = sigma.weight();
    if w == 0 {
        return 0;
    }
    let k = sigma.level() as u64;
    let mut r: u64 = (1..k).map(|j| count_weight_len(w, j)).sum();
    let (mut w_left, mut k_left) = (w, k);
    for &c in sigma.coords() {
        let part = c as u64 + 1;
        r += (1..part)
            .map(|p| count_weight_len(w_left - p, k_left - 1))
            .sum::<u64>();
        w_left -= part;
        k_left -= 1;
    }
    (1u64 << (w - 1)) + r
}

/// `h(n) = ({g(n)} ∪ f(n)) ∖ ⋃_{k<n} ({g(k)} ∪ f(k))`, truncated to the
/// window of depth `depth`.
///
/// Subtracting only the earlier `f(k)` is not enough: if `g(n)` lies in a
/// later `f(m)` and in no earlier one it would land in both `h(n)` and
/// `h(m)`. Removing the earlier `g(k)` as well changes each `h(n)` by at most
/// `n` nodes.
pub fn h_decomp(
    f: &[LazyNodeSet],
    g: impl Fn(usize) -> Node,
    n: usize,
    depth: usize,
) -> Result<NodeSet, FamilyError> {
    let fn_ = f.get(n).ok_or(FamilyError::IndexOutOfRange {
        index: n,
        len: f.len(),
    })?;
    let mut out = fn_.enumerate_upto(depth);
    let gn = g(n);
    if in_window(&gn, depth) {
        out.insert(gn);
    }
    let earlier_g: NodeSet = (0..n).map(&g).filter(|s| out.contains(s)).collect();
    out.retain(|s| !earlier_g.contains(s) && !f[..n].iter().any(|fk| fk.contains(s)));
    Ok(out)
}

/// `{D_n ∩ A : D_n ∩ A infinite}`, with "infinite" judged at `depth`.
pub fn restrict_decomposition(d: &Family, a: &LazyNodeSet, depth: usize) -> Filtered {
    filter_infinite(d, depth, |dn| {
        LazyNodeSet::intersection(dn.clone(), a.clone())
    })
}

/// A finite subset of ω×ω; `(n, i)` sits in column `n`.
pub type PairSet = BTreeSet<(usize, usize)>;

fn check_branch_roots(bs: &[EpBranch]) -> Result<(), FamilyError> {
    for (n, b) in bs.iter().enumerate() {
        let at1 = b.node_at(1);
        if at1.coords() != [n as u32] {
            return Err(FamilyError::BranchRootMismatch {
                index: n,
                found: at1.to_string(),
            });
        }
    }
    Ok(())
}

/// The canonical branches `b_n = ⟨n,0,0,…⟩` for `n < count`.
pub fn canonical_branches(count: usize) -> Vec<EpBranch> {
    (0..count as u32).map(EpBranch::canonical_through).collect()
}

/// `{(n, i) : i < depth, b_n↾i ∈ O}`
pub fn bar_o(o: &LazyNodeSet, bs: &[EpBranch], depth: usize) -> Result<PairSet, FamilyError> {
    check_branch_roots(bs)?;
    Ok(bs
        .iter()
        .enumerate()
        .flat_map(|(n, b)| {
            (0..depth)
                .filter(move |&i| o.contains(&b.node_at(i)))
                .map(move |i| (n, i))
        })
        .collect())
}

/// `{b_n↾i : (n, i) ∈ B̄}`
pub fn unbar(bbar: &PairSet, bs: &[EpBranch]) -> Result<NodeSet, FamilyError> {
    check_branch_roots(bs)?;
    bbar.iter()
        .map(|&(n, i)| {
            bs.get(n)
                .map(|b| b.node_at(i))
                .ok_or(FamilyError::PairOutOfRange {
                    n,
                    i,
                    len: bs.len(),
                })
        })
        .collect()
}

/// Largest number of pairs in a single column.
pub fn column_multiplicity(b: &PairSet) -> usize {
    let mut best = 0;
    let mut cur = (usize::MAX, 0);
    for &(n, _) in b {
        cur = if cur.0 == n { (n, cur.1 + 1) } else { (n, 1) };
        best = best.max(cur.1);
    }
    best
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentWithAd,
    ChainFound(usize),
    Inconclusive,
}

/// Finite evidence about almost-disjointness or off-branchness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AdReport {
    pub intersection_count: usize,
    pub last_hit_level: Option<usize>,
    pub depth_checked: usize,
    pub verdict: Verdict,
}

fn in_final_third(level: usize, depth: usize) -> bool {
    3 * level >= 2 * depth
}

/// Counts `A ∩ B` inside the window of depth `depth`. The verdict is
/// heuristic: consistent when no intersection reaches the final third of
/// the probed levels.
pub fn ad_upto(a: &LazyNodeSet, b: &LazyNodeSet, depth: usize) -> AdReport {
    let mut count = 0;
    let mut last = None;
    for s in a.iter_upto(depth).filter(|s| b.contains(s)) {
        count += 1;
        last = Some(last.map_or(s.level(), |l: usize| l.max(s.level())));
    }
    let verdict = match last {
        Some(l) if in_final_third(l, depth) => Verdict::Inconclusive,
        _ => Verdict::ConsistentWithAd,
    };
    AdReport {
        intersection_count: count,
        last_hit_level: last,
        depth_checked: depth,
        verdict,
    }
}

/// A set is off-branch iff it contains no infinite chain; this reports the
/// longest chain in the window and flags it once it reaches `chain_threshold`.
pub fn offbranch_upto(a: &LazyNodeSet, depth: usize, chain_threshold: usize) -> AdReport {
    let t = a.enumerate_upto(depth);
    let chain = treecore::max_chain_len(&t);
    let verdict = if chain >= chain_threshold {
        Verdict::ChainFound(chain)
    } else {
        Verdict::ConsistentWithAd
    };
    AdReport {
        intersection_count: t.len(),
        last_hit_level: t.iter().map(|s| s.level()).max(),
        depth_checked: depth,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treecore::{hair_omega, is_antichain};

    fn n(s: &str) -> Node {
        s.parse().unwrap()
    }

    fn nodes(xs: &[&str]) -> NodeSet {
        xs.iter().map(|s| n(s)).collect()
    }

    fn b(s: &str) -> BinNode {
        s.parse().unwrap()
    }

    #[test]
    fn pi_examples() {
        assert_eq!(pi_embed(&n("2.1")), b("1.1.0.1.0"));
        assert_eq!(pi_embed(&n("0")), b("0"));
        assert_eq!(pi_embed(&n("e")), b("e"));
        assert_eq!(pi_decode(&b("1.1.0.1.0")), Ok(n("2.1")));
        assert_eq!(pi_decode(&b("e")), Ok(n("e")));
        assert!(matches!(
            pi_decode(&b("1")),
            Err(FamilyError::NotInImage(_))
        ));
    }

    #[test]
    fn pi_exhaustive_roundtrip_and_image() {
        let dom: Vec<Node> = box_nodes(5, 4).collect();
        let mut images = BTreeSet::new();
        for s in &dom {
            let p = pi_embed(s);
            assert_eq!(p.level() as u64, s.weight());
            assert_eq!(pi_decode(&p).unwrap(), *s);
            assert!(images.insert(p));
        }
        // every binary node ending in 0 (or empty) decodes
        for t in box_nodes(8, 2) {
            let t = BinNode::try_from(&t).unwrap();
            assert_eq!(pi_decode(&t).is_ok(), t.last() != Some(true));
        }
    }

    #[test]
    fn windows() {
        let l2: NodeSet = LazyNodeSet::level(2).enumerate_upto(3);
        assert_eq!(l2.len(), 9);
        let z = LazyNodeSet::zeros_then_one().enumerate_upto(5);
        assert_eq!(z, nodes(&["1", "0.1", "0.0.1", "0.0.0.1"]));
        let order: Vec<Node> = LazyNodeSet::explicit(nodes(&["0.0", "1", "e"]))
            .iter_upto(4)
            .collect();
        assert_eq!(order, vec![n("e"), n("1"), n("0.0")]);
        assert_eq!(box_nodes(3, 3).count(), 1 + 3 + 9);
    }

    #[test]
    fn pullback_identity_examples() {
        let fam = Family::new([
            ("L2", LazyNodeSet::level(2)),
            ("big", LazyNodeSet::explicit(nodes(&["2", "3.4", "2.2.2"]))),
            ("Z", LazyNodeSet::zeros_then_one()),
        ])
        .unwrap();
        let out = pullback_identity(&fam, 6);
        assert_eq!(out.dropped, vec!["big".to_string()]);
        let l2 = out.family.get("L2").unwrap();
        let lvl2: NodeSet = l2.iter_upto(6).filter(|s| s.level() == 2).collect();
        assert_eq!(lvl2, nodes(&["0.0", "0.1", "1.0", "1.1"]));
        let z = out.family.get("Z").unwrap();
        assert_eq!(z.enumerate_upto(7), fam.get("Z").unwrap().enumerate_upto(7));
    }

    #[test]
    fn pullback_pi_examples() {
        let fam = Family::new([
            ("one", LazyNodeSet::explicit(nodes(&["1.1.0.1.0"]))),
            ("odd", LazyNodeSet::explicit(nodes(&["1", "0.1", "1.1"]))),
        ])
        .unwrap();
        let a = LazyNodeSet::pi_pullback(fam.get("one").unwrap().clone());
        assert_eq!(a.enumerate_upto(4), nodes(&["2.1"]));
        let out = pullback_pi(&fam, 4);
        assert_eq!(out.dropped, vec!["one".to_string(), "odd".to_string()]);

        let ac = LazyNodeSet::explicit(nodes(&["0.2", "1", "3.0.0"]));
        let back = LazyNodeSet::pi_pullback(LazyNodeSet::pi_image(ac.clone()));
        assert_eq!(back.enumerate_upto(5), ac.enumerate_upto(5));
        assert!(is_antichain(&back.enumerate_upto(5)));
    }

    #[test]
    fn canonical_enumeration_is_a_bijection_on_an_initial_segment() {
        let first: Vec<Node> = (0..1024).map(canonical_node).collect();
        let distinct: BTreeSet<_> = first.iter().cloned().collect();
        assert_eq!(distinct.len(), 1024);
        for (i, s) in first.iter().enumerate() {
            assert_eq!(canonical_index(s), i as u64);
        }
        assert_eq!(first[0], n("e"));
        assert_eq!(first[1], n("0"));
        assert_eq!(&first[2..4], &[n("1"), n("0.0")]);
        // weights are nondecreasing; class w has 2^(w-1) nodes
        assert!(first.windows(2).all(|w| w[0].weight() <= w[1].weight()));
        assert_eq!(first.iter().filter(|s| s.weight() == 10).count(), 512);
    }

    #[test]
    fn h_decomp_examples() {
        let f = vec![
            LazyNodeSet::explicit(nodes(&["0", "1"])),
            LazyNodeSet::explicit(nodes(&["2", "0.5"])),
        ];
        let h0 = h_decomp(&f, |i| canonical_node(i as u64), 0, 6).unwrap();
        assert!(h0.contains(&n("e")));
        assert!(nodes(&["0", "1"]).is_subset(&h0));
        let h1 = h_decomp(&f, |i| canonical_node(i as u64), 1, 6).unwrap();
        // g(1) = ⟨0⟩ ∈ f(0) is subtracted
        assert_eq!(h1, nodes(&["2", "0.5"]));
        assert!(h0.is_disjoint(&h1));

        let g = vec![
            LazyNodeSet::explicit(nodes(&["0", "1"])),
            LazyNodeSet::explicit(nodes(&["1"])),
        ];
        assert!(h_decomp(&g, |i| canonical_node(i as u64), 1, 6)
            .unwrap()
            .is_empty());
        assert_eq!(
            h_decomp(&g, |i| canonical_node(i as u64), 2, 6),
            Err(FamilyError::IndexOutOfRange { index: 2, len: 2 })
        );

        // g(0) = ⟨⟩ sits in f(1) but not in f(0)
        let f = vec![
            LazyNodeSet::explicit(nodes(&["5"])),
            LazyNodeSet::explicit(nodes(&["e", "3"])),
        ];
        let h0 = h_decomp(&f, |i| canonical_node(i as u64), 0, 6).unwrap();
        let h1 = h_decomp(&f, |i| canonical_node(i as u64), 1, 6).unwrap();
        assert_eq!(h0, nodes(&["e", "5"]));
        assert_eq!(h1, nodes(&["0", "3"]));
    }

    #[test]
    fn restrict_decomposition_examples() {
        let levels = Family::new((0..6).map(|l| (format!("D{l}"), LazyNodeSet::level(l)))).unwrap();
        // meets every level once: the hair of the zero branch plus the root
        let a = LazyNodeSet::hair_of_branch(EpBranch::constant(0));
        let out = restrict_decomposition(&levels, &a, 6);
        // singletons per level never meet the threshold at depth 6 except
        // in the top third of levels
        assert_eq!(out.family.labels(), vec!["D4", "D5"]);
        for m in out.family.members() {
            assert_eq!(m.set.enumerate_upto(6).len(), 1);
        }

        let z = LazyNodeSet::zeros_then_one();
        let dec = Family::new([
            ("D0", LazyNodeSet::zeros_then_one()),
            ("D1", LazyNodeSet::level(2)),
        ])
        .unwrap();
        let out = restrict_decomposition(&dec, &z, 8);
        assert_eq!(out.family.labels(), vec!["D0"]);
        assert_eq!(
            out.family.get("D0").unwrap().enumerate_upto(8),
            z.enumerate_upto(8)
        );

        let far = LazyNodeSet::explicit(nodes(&["7.7"]));
        assert!(restrict_decomposition(&dec, &far, 8).family.is_empty());
    }

    #[test]
    fn bar_o_examples() {
        let bs = canonical_branches(4);
        let o = LazyNodeSet::explicit(nodes(&["2"]));
        assert_eq!(bar_o(&o, &bs, 5).unwrap(), [(2, 1)].into_iter().collect());
        assert_eq!(
            unbar(&[(2, 1)].into_iter().collect(), &bs).unwrap(),
            nodes(&["2"])
        );
        assert!(unbar(&PairSet::new(), &bs).unwrap().is_empty());

        let off = LazyNodeSet::explicit(nodes(&["5.5", "1.1"]));
        assert!(bar_o(&off, &bs, 5).unwrap().is_empty());

        let pre = LazyNodeSet::explicit(nodes(&["0", "0.0", "0.0.0"]));
        let bar = bar_o(&pre, &bs, 5).unwrap();
        assert_eq!(bar, [(0, 1), (0, 2), (0, 3)].into_iter().collect());
        assert_eq!(column_multiplicity(&bar), 3);

        let bad = vec![
            EpBranch::canonical_through(0),
            EpBranch::canonical_through(5),
        ];
        assert!(matches!(
            bar_o(&o, &bad, 3),
            Err(FamilyError::BranchRootMismatch { index: 1, .. })
        ));
        assert!(matches!(
            unbar(&[(9, 1)].into_iter().collect(), &bs),
            Err(FamilyError::PairOutOfRange { .. })
        ));
    }

    #[test]
    fn column_multiplicity_examples() {
        assert_eq!(
            column_multiplicity(&[(0, 1), (1, 5)].into_iter().collect()),
            1
        );
        assert_eq!(
            column_multiplicity(&[(0, 1), (0, 2)].into_iter().collect()),
            2
        );
        assert_eq!(column_multiplicity(&PairSet::new()), 0);
        let ac = LazyNodeSet::explicit(nodes(&["0.0.1", "1", "2.0", "3.1"]));
        let bar = bar_o(&ac, &canonical_branches(4), 6).unwrap();
        assert_eq!(column_multiplicity(&bar), 1);
    }

    #[test]
    fn ad_examples() {
        let a = LazyNodeSet::explicit(nodes(&["0", "1"]));
        let b = LazyNodeSet::explicit(nodes(&["2", "3.3"]));
        let r = ad_upto(&a, &b, 6);
        assert_eq!(
            (r.intersection_count, r.verdict),
            (0, Verdict::ConsistentWithAd)
        );

        let z = LazyNodeSet::zeros_then_one();
        let r4 = ad_upto(&z, &z, 4);
        let r8 = ad_upto(&z, &z, 8);
        assert!(r8.intersection_count > r4.intersection_count);
        assert_eq!(r8.verdict, Verdict::Inconclusive);

        let l3 = LazyNodeSet::level(3);
        let br = LazyNodeSet::branch_prefixes(EpBranch::new(vec![1], vec![2, 0]).unwrap());
        let r = ad_upto(&l3, &br, 6);
        assert_eq!(r.intersection_count, 1);
        assert_eq!(r.last_hit_level, Some(3));
    }

    #[test]
    fn offbranch_examples() {
        let ac = LazyNodeSet::explicit(nodes(&["0", "1", "2.2"]));
        let r = offbranch_upto(&ac, 6, DEFAULT_CHAIN_THRESHOLD);
        assert_eq!(r.verdict, Verdict::ConsistentWithAd);

        let br = LazyNodeSet::branch_prefixes(EpBranch::constant(1));
        for d in 4..9 {
            assert_eq!(
                offbranch_upto(&br, d, DEFAULT_CHAIN_THRESHOLD).verdict,
                Verdict::ChainFound(d)
            );
        }

        let hair = LazyNodeSet::hair_of_branch(EpBranch::new(vec![2, 0], vec![1]).unwrap());
        for d in 4..9 {
            let t = hair.enumerate_upto(d);
            assert_eq!(treecore::max_chain_len(&t), 1);
            assert_eq!(
                t,
                hair_omega(&EpBranch::new(vec![2, 0], vec![1]).unwrap().prefixes_upto(d))
                    .into_iter()
                    .filter(|s| in_window(s, d))
                    .collect()
            );
        }
    }
}
