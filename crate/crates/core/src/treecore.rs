//! Nodes of the trees of finite sequences of naturals and of bits, the prefix
//! order on them, finite antichain/chain utilities, eventually periodic
//! branches, and the primitive node operators (right shift, binary
//! predecessor, hair of a branch).
//!
//! Node literals are written in dotted decimal (`2.0.1`); the empty node is `e`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::TreeError;

/// A finite set of nodes. Ordered so that iteration and serialization are
/// deterministic.
pub type NodeSet<N = Node> = BTreeSet<N>;

/// Behaviour shared by nodes of both trees.
pub trait TreeNode: Clone + Ord + fmt::Debug {
    fn level(&self) -> usize;

    /// The prefix of length `len`. Panics if `len > self.level()`.
    fn prefix(&self, len: usize) -> Self;

    /// `self ≤ other` in the tree order: `self` is an initial segment of `other`.
    fn is_prefix_of(&self, other: &Self) -> bool;

    fn comparable(&self, other: &Self) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// All prefixes, from the root up to and including `self`.
    fn prefixes(&self) -> Vec<Self> {
        (0..=self.level()).map(|l| self.prefix(l)).collect()
    }
}

/// A node of the tree of finite sequences of natural numbers.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Node(Vec<u32>);

impl Node {
    pub fn root() -> Self {
        Node(Vec::new())
    }

    pub fn new(coords: Vec<u32>) -> Self {
        Node(coords)
    }

    pub fn coords(&self) -> &[u32] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<u32> {
        self.0.last().copied()
    }

    pub fn max_coord(&self) -> Option<u32> {
        self.0.iter().copied().max()
    }

    /// `self⌢⟨c⟩`
    pub fn child(&self, c: u32) -> Self {
        let mut v = self.0.clone();
        v.push(c);
        Node(v)
    }

    pub fn concat(&self, tail: &[u32]) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(tail);
        Node(v)
    }

    pub fn is_binary(&self) -> bool {
        self.0.iter().all(|&c| c <= 1)
    }

    /// Sum of coordinates plus length. There are exactly `2^(w-1)` nodes of
    /// weight `w ≥ 1`, which makes weight-graded enumeration a bijection.
    pub fn weight(&self) -> u64 {
        self.0.iter().map(|&c| c as u64 + 1).sum()
    }
}

impl TreeNode for Node {
    fn level(&self) -> usize {
        self.0.len()
    }

    fn prefix(&self, len: usize) -> Self {
        Node(self.0[..len].to_vec())
    }

    fn is_prefix_of(&self, other: &Self) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl From<Vec<u32>> for Node {
    fn from(v: Vec<u32>) -> Self {
        Node(v)
    }
}

impl From<&BinNode> for Node {
    fn from(b: &BinNode) -> Self {
        Node(b.0.iter().map(|&x| x as u32).collect())
    }
}

/// A node of the binary tree.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BinNode(Vec<bool>);

impl BinNode {
    pub fn root() -> Self {
        BinNode(Vec::new())
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self, TreeError> {
        bits.iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(TreeError::NotBinary(other as u32)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BinNode)
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        BinNode(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<bool> {
        self.0.last().copied()
    }

    pub fn child(&self, bit: bool) -> Self {
        let mut v = self.0.clone();
        v.push(bit);
        BinNode(v)
    }

    /// The other child of this node's parent. `None` at the root.
    pub fn sibling(&self) -> Option<Self> {
        let mut v = self.0.clone();
        let last = v.pop()?;
        v.push(!last);
        Some(BinNode(v))
    }
}

impl TreeNode for BinNode {
    fn level(&self) -> usize {
        self.0.len()
    }

    fn prefix(&self, len: usize) -> Self {
        BinNode(self.0[..len].to_vec())
    }

    fn is_prefix_of(&self, other: &Self) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl TryFrom<&Node> for BinNode {
    type Error = TreeError;

    fn try_from(n: &Node) -> Result<Self, TreeError> {
        n.0.iter()
            .map(|&c| match c {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(TreeError::NotBinary(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BinNode)
    }
}

fn write_dotted<I: Iterator<Item = u32>>(f: &mut fmt::Formatter<'_>, it: I) -> fmt::Result {
    let mut first = true;
    for c in it {
        if !first {
            f.write_str(".")?;
        }
        write!(f, "{c}")?;
        first = false;
    }
    if first {
        f.write_str("e")?;
    }
    Ok(())
}

fn parse_dotted(s: &str) -> Result<Vec<u32>, TreeError> {
    let s = s.trim();
    if s == "e" {
        return Ok(Vec::new());
    }
    if s.is_empty() {
        return Err(TreeError::BadLiteral(s.to_string()));
    }
    s.split('.')
        .map(|part| {
            part.parse::<u32>()
                .map_err(|_| TreeError::BadLiteral(s.to_string()))
        })
        .collect()
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_dotted(f, self.0.iter().copied())
    }
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{self}⟩")
    }
}

impl fmt::Display for BinNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_dotted(f, self.0.iter().map(|&b| b as u32))
    }
}

impl fmt::Debug for BinNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{self}⟩")
    }
}

impl FromStr for Node {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, TreeError> {
        parse_dotted(s).map(Node)
    }
}

impl FromStr for BinNode {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, TreeError> {
        let n: Node = s.parse()?;
        BinNode::try_from(&n)
    }
}

macro_rules! serde_via_literal {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

serde_via_literal!(Node);
serde_via_literal!(BinNode);

pub fn is_prefix<N: TreeNode>(sigma: &N, tau: &N) -> bool {
    sigma.is_prefix_of(tau)
}

pub fn level<N: TreeNode>(sigma: &N) -> usize {
    sigma.level()
}

/// Right shift: `⟨n₀,…,n_k⟩ ↦ ⟨n₀,…,n_k+1⟩`.
pub fn rs(sigma: &Node) -> Result<Node, TreeError> {
    let mut v = sigma.0.clone();
    let last = v.last_mut().ok_or(TreeError::EmptySequence)?;
    *last += 1;
    Ok(Node(v))
}

/// Inverse of [`rs`]: `None` when `σ` is the root or ends in 0.
pub fn left_shift(sigma: &Node) -> Option<Node> {
    let mut v = sigma.0.clone();
    let last = v.last_mut()?;
    if *last == 0 {
        return None;
    }
    *last -= 1;
    Some(Node(v))
}

/// Binary predecessor; the root is its own predecessor.
pub fn pred(sigma: &BinNode) -> BinNode {
    let mut v = sigma.0.clone();
    v.pop();
    BinNode(v)
}

/// Elements of `set` with no proper prefix in `set`.
pub fn minimal_elements<N: TreeNode>(set: &BTreeSet<N>) -> BTreeSet<N> {
    // Lexicographic order puts every prefix before its extensions, so a
    // single pass keeping the last accepted minimal element suffices.
    let mut out: BTreeSet<N> = BTreeSet::new();
    let mut last: Option<&N> = None;
    for s in set {
        match last {
            Some(m) if m.is_prefix_of(s) => {}
            _ => {
                out.insert(s.clone());
                last = Some(s);
            }
        }
    }
    out
}

pub fn is_antichain<N: TreeNode>(set: &BTreeSet<N>) -> bool {
    // In lexicographic order a comparable pair always has some comparable
    // pair among consecutive elements.
    let v: Vec<&N> = set.iter().collect();
    v.windows(2).all(|w| !w[0].is_prefix_of(w[1]))
}

/// Length of the longest prefix-linearly-ordered subset of `set`.
pub fn max_chain_len<N: TreeNode>(set: &BTreeSet<N>) -> usize {
    // Chains inside a set are exactly subsets of the prefixes of one element.
    set.iter()
        .map(|s| {
            (0..=s.level())
                .filter(|&l| set.contains(&s.prefix(l)))
                .count()
        })
        .max()
        .unwrap_or(0)
}

/// `{rs(σ) : σ ∈ chain, σ ≠ ⟨⟩}`.
pub fn hair_omega(chain: &[Node]) -> NodeSet {
    chain
        .iter()
        .filter(|s| !s.is_root())
        .map(|s| rs(s).expect("nonempty"))
        .collect()
}

/// `{τ⌢⟨1−i⟩ : τ⌢⟨i⟩ a nonempty prefix of g}`.
pub fn hair_binary(g_stem: &BinNode) -> NodeSet<BinNode> {
    (1..=g_stem.level())
        .map(|l| g_stem.prefix(l).sibling().expect("nonempty"))
        .collect()
}

/// An eventually periodic branch `stem⌢period⌢period⌢…` of the tree of
/// sequences of naturals.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EpBranch {
    stem: Vec<u32>,
    period: Vec<u32>,
}

impl EpBranch {
    pub fn new(stem: Vec<u32>, period: Vec<u32>) -> Result<Self, TreeError> {
        if period.is_empty() {
            return Err(TreeError::EmptyPeriod);
        }
        Ok(EpBranch { stem, period })
    }

    pub fn constant(c: u32) -> Self {
        EpBranch {
            stem: Vec::new(),
            period: vec![c],
        }
    }

    /// The branch `⟨n,0,0,…⟩` through `⟨n⟩`.
    pub fn canonical_through(n: u32) -> Self {
        EpBranch {
            stem: vec![n],
            period: vec![0],
        }
    }

    pub fn stem(&self) -> &[u32] {
        &self.stem
    }

    pub fn period(&self) -> &[u32] {
        &self.period
    }

    pub fn value(&self, n: usize) -> u32 {
        if n < self.stem.len() {
            self.stem[n]
        } else {
            self.period[(n - self.stem.len()) % self.period.len()]
        }
    }

    /// The first `n` values as a node.
    pub fn node_at(&self, n: usize) -> Node {
        Node((0..n).map(|i| self.value(i)).collect())
    }

    pub fn contains(&self, sigma: &Node) -> bool {
        sigma
            .coords()
            .iter()
            .enumerate()
            .all(|(i, &c)| self.value(i) == c)
    }

    /// Prefix nodes at levels `< depth`.
    pub fn prefixes_upto(&self, depth: usize) -> Vec<Node> {
        (0..depth).map(|l| self.node_at(l)).collect()
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Decides `f <* g`, i.e. `{n : g(n) ≤ f(n)}` is finite. Beyond both stems the
/// pair is periodic with period `lcm`, so one window decides the tail.
pub fn eventually_dominates(f: &EpBranch, g: &EpBranch) -> bool {
    let start = f.stem.len().max(g.stem.len());
    let window = lcm(f.period.len(), g.period.len());
    (start..start + window).all(|n| g.value(n) > f.value(n))
}
