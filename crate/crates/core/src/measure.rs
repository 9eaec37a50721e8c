//! Exact measure algebra on clopen subsets of Cantor space.
//!
//! A clopen set is a finite union of Baire intervals `[σ]` (all branches
//! through the binary node `σ`), kept in a canonical antichain form with
//! sibling pairs merged, so that structural equality is equality of sets.
//! Measures are dyadic rationals and are computed exactly.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::Add;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Serialize, Serializer};

use crate::error::MeasureError;
use crate::treecore::{minimal_elements, pred, BinNode, NodeSet, TreeNode};

/// `numerator / 2^exponent`, normalized (odd numerator, or zero over `2^0`).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numerator: BigUint,
    exponent: u64,
}

impl Dyadic {
    pub fn new(numerator: impl Into<BigUint>, exponent: u64) -> Self {
        let mut d = Dyadic {
            numerator: numerator.into(),
            exponent,
        };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        Dyadic::new(0u32, 0)
    }

    pub fn one() -> Self {
        Dyadic::new(1u32, 0)
    }

    /// `2^-k`
    pub fn pow2_neg(k: u64) -> Self {
        Dyadic::new(1u32, k)
    }

    fn normalize(&mut self) {
        if self.numerator.is_zero() {
            self.exponent = 0;
            return;
        }
        let tz = self
            .numerator
            .trailing_zeros()
            .unwrap_or(0)
            .min(self.exponent);
        self.numerator >>= tz;
        self.exponent -= tz;
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    fn aligned(&self, exponent: u64) -> BigUint {
        &self.numerator << (exponent - self.exponent)
    }

    pub fn double(&self) -> Self {
        if self.exponent == 0 {
            Dyadic::new(&self.numerator << 1u32, 0)
        } else {
            Dyadic::new(self.numerator.clone(), self.exponent - 1)
        }
    }

    /// `self - other`, or `None` if negative.
    pub fn checked_sub(&self, other: &Dyadic) -> Option<Dyadic> {
        let e = self.exponent.max(other.exponent);
        let (a, b) = (self.aligned(e), other.aligned(e));
        (a >= b).then(|| Dyadic::new(a - b, e))
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;

    fn add(self, other: &Dyadic) -> Dyadic {
        let e = self.exponent.max(other.exponent);
        Dyadic::new(self.aligned(e) + other.aligned(e), e)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;

    fn add(self, other: Dyadic) -> Dyadic {
        &self + &other
    }
}

impl std::iter::Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::zero(), |a, b| a + b)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exponent.max(other.exponent);
        self.aligned(e).cmp(&other.aligned(e))
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.numerator, self.exponent)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A clopen subset of Cantor space in canonical stem form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct ClopenSet {
    stems: BTreeSet<BinNode>,
}

impl ClopenSet {
    pub fn empty() -> Self {
        ClopenSet::default()
    }

    pub fn whole() -> Self {
        interval(&BinNode::root())
    }

    /// Canonical form of the union of `[σ]` over `stems`: minimal elements,
    /// then sibling pairs merged until none remain.
    pub fn from_stems<I: IntoIterator<Item = BinNode>>(stems: I) -> Self {
        let mut set = minimal_elements(&stems.into_iter().collect());
        // Merging σ⌢0, σ⌢1 into σ keeps the set an antichain: any other stem
        // comparable with σ would have been comparable with one of them.
        let mut frontier: Vec<BinNode> = set.iter().cloned().collect();
        while let Some(s) = frontier.pop() {
            if !set.contains(&s) {
                continue;
            }
            let Some(sib) = s.sibling() else { continue };
            if set.contains(&sib) {
                set.remove(&s);
                set.remove(&sib);
                let parent = pred(&s);
                set.insert(parent.clone());
                frontier.push(parent);
            }
        }
        ClopenSet { stems: set }
    }

    pub fn stems(&self) -> &BTreeSet<BinNode> {
        &self.stems
    }

    pub fn is_empty(&self) -> bool {
        self.stems.is_empty()
    }

    pub fn is_whole(&self) -> bool {
        self.stems.len() == 1 && self.stems.iter().next().unwrap().is_root()
    }

    /// Whether the branch `x` (given by a long enough prefix) lies in the set.
    pub fn contains_branch_prefix(&self, x: &BinNode) -> bool {
        self.stems.iter().any(|s| s.is_prefix_of(x))
    }

    /// Whether some branch of the set passes through `τ`.
    pub fn meets_node(&self, tau: &BinNode) -> bool {
        self.stems.iter().any(|s| s.comparable(tau))
    }

    pub fn is_subset(&self, other: &ClopenSet) -> bool {
        diff(self, other).is_empty()
    }
}

impl fmt::Debug for ClopenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, s) in self.stems.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("]")
    }
}

pub fn interval(sigma: &BinNode) -> ClopenSet {
    ClopenSet {
        stems: [sigma.clone()].into_iter().collect(),
    }
}

pub fn union(a: &ClopenSet, b: &ClopenSet) -> ClopenSet {
    ClopenSet::from_stems(a.stems.iter().chain(b.stems.iter()).cloned())
}

pub fn meet(a: &ClopenSet, b: &ClopenSet) -> ClopenSet {
    let mut out = Vec::new();
    for s in &a.stems {
        for t in &b.stems {
            if s.is_prefix_of(t) {
                out.push(t.clone());
            } else if t.is_prefix_of(s) {
                out.push(s.clone());
            }
        }
    }
    ClopenSet::from_stems(out)
}

fn subtract_from(stem: &BinNode, b: &BTreeSet<BinNode>, out: &mut Vec<BinNode>) {
    if b.iter().any(|t| t.is_prefix_of(stem)) {
        return;
    }
    if !b.iter().any(|t| stem.is_prefix_of(t)) {
        out.push(stem.clone());
        return;
    }
    subtract_from(&stem.child(false), b, out);
    subtract_from(&stem.child(true), b, out);
}

pub fn diff(a: &ClopenSet, b: &ClopenSet) -> ClopenSet {
    let mut out = Vec::new();
    for s in &a.stems {
        subtract_from(s, &b.stems, &mut out);
    }
    ClopenSet::from_stems(out)
}

pub fn complement(a: &ClopenSet) -> ClopenSet {
    diff(&ClopenSet::whole(), a)
}

/// Sum of `2^-len(σ)` over an antichain of stems.
pub fn antichain_measure<'a, I: IntoIterator<Item = &'a BinNode>>(stems: I) -> Dyadic {
    stems
        .into_iter()
        .map(|s| Dyadic::pow2_neg(s.level() as u64))
        .sum()
}

pub fn measure(c: &ClopenSet) -> Dyadic {
    antichain_measure(&c.stems)
}

fn check_window(len: usize, from: usize, to: usize) -> Result<(), MeasureError> {
    if from <= to && to <= len {
        Ok(())
    } else {
        Err(MeasureError::WindowOutOfRange { from, to, len })
    }
}

/// `⋃_{from ≤ k < to} [f(k)]`
pub fn window_union(f: &[BinNode], from: usize, to: usize) -> Result<ClopenSet, MeasureError> {
    check_window(f.len(), from, to)?;
    Ok(ClopenSet::from_stems(f[from..to].iter().cloned()))
}

/// The antichain of minimal elements of `{f(k) : from ≤ k < to}`.
pub fn window_minimal(
    f: &[BinNode],
    from: usize,
    to: usize,
) -> Result<NodeSet<BinNode>, MeasureError> {
    check_window(f.len(), from, to)?;
    Ok(minimal_elements(&f[from..to].iter().cloned().collect()))
}

/// `⋃_{from ≤ k < to} [pred(f(k))]`
pub fn pred_window_union(f: &[BinNode], from: usize, to: usize) -> Result<ClopenSet, MeasureError> {
    check_window(f.len(), from, to)?;
    Ok(ClopenSet::from_stems(f[from..to].iter().map(pred)))
}

/// `(n, measure of ⋃_{n ≤ k < to} [f(k)])` for every `n ≤ to`. The tails are
/// nested, so the table is the finite view of `⋂_n ⋃_{k≥n} [f(k)]`.
pub fn tail_decay_table(f: &[BinNode], to: usize) -> Result<Vec<(usize, Dyadic)>, MeasureError> {
    check_window(f.len(), 0, to)?;
    (0..=to)
        .map(|n| Ok((n, measure(&window_union(f, n, to)?))))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PredBound {
    pub lhs: Dyadic,
    pub rhs: Dyadic,
    pub holds: bool,
}

/// Compares the measure of the predecessor intervals of a window with twice
/// the measure of the window's minimal elements.
pub fn pred_window_bound(f: &[BinNode], from: usize, to: usize) -> Result<PredBound, MeasureError> {
    let lhs = measure(&pred_window_union(f, from, to)?);
    let rhs = antichain_measure(&window_minimal(f, from, to)?).double();
    let holds = lhs <= rhs;
    Ok(PredBound { lhs, rhs, holds })
}

/// `q ∖ ⋃_{from ≤ k < to} [f(k)]`
pub fn shrink_condition(
    q: &ClopenSet,
    f: &[BinNode],
    from: usize,
    to: usize,
) -> Result<ClopenSet, MeasureError> {
    Ok(diff(q, &window_union(f, from, to)?))
}

/// `q ∖ ⋃_{from ≤ k < to} [pred(f(k))]`, the variant that removes the
/// predecessor intervals.
pub fn shrink_condition_pred(
    q: &ClopenSet,
    f: &[BinNode],
    from: usize,
    to: usize,
) -> Result<ClopenSet, MeasureError> {
    Ok(diff(q, &pred_window_union(f, from, to)?))
}

/// `{0^k⌢1 : k < count}`, the enumeration used throughout the examples.
pub fn zeros_then_one(count: usize) -> Vec<BinNode> {
    (0..count)
        .map(|k| {
            let mut v = vec![false; k + 1];
            v[k] = true;
            BinNode::from_bools(v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BinNode {
        s.parse().unwrap()
    }

    fn c(xs: &[&str]) -> ClopenSet {
        ClopenSet::from_stems(xs.iter().map(|s| b(s)))
    }

    fn d(num: u32, exp: u64) -> Dyadic {
        Dyadic::new(num, exp)
    }

    /// Depth-6 bitset model: bit `i` is the branch whose first six bits spell `i`.
    fn bits(x: &ClopenSet) -> u64 {
        let mut out = 0u64;
        for leaf in 0..64u64 {
            let node = BinNode::from_bools((0..6).map(|j| (leaf >> (5 - j)) & 1 == 1).collect());
            if x.contains_branch_prefix(&node) {
                out |= 1 << leaf;
            }
        }
        out
    }

    #[test]
    fn dyadic_normal_form() {
        assert_eq!(d(2, 2), d(1, 1));
        assert_eq!(d(0, 7).to_string(), "0/2^0");
        assert_eq!(d(4, 0).to_string(), "4/2^0");
        assert_eq!((d(1, 1) + d(1, 2)).to_string(), "3/2^2");
        assert!(d(3, 2) > d(1, 1));
        assert_eq!(d(3, 2).checked_sub(&d(1, 1)), Some(d(1, 2)));
        assert_eq!(d(1, 2).checked_sub(&d(1, 1)), None);
        assert_eq!(d(7, 3).double(), d(7, 2));
        assert_eq!(d(1, 0).double(), d(2, 0));
    }

    #[test]
    fn interval_examples() {
        assert_eq!(measure(&interval(&b("0.1"))), d(1, 2));
        assert!(interval(&b("e")).is_whole());
        assert_eq!(measure(&interval(&b("e"))), Dyadic::one());
        assert_eq!(measure(&interval(&b("1"))), d(1, 1));
    }

    #[test]
    fn union_examples() {
        assert!(union(&c(&["0"]), &c(&["1"])).is_whole());
        assert_eq!(union(&c(&["0"]), &c(&["0.1"])), c(&["0"]));
        let u = union(&c(&["0.0"]), &c(&["1.1"]));
        assert_eq!(u.stems().len(), 2);
        assert_eq!(measure(&u), d(1, 1));
        // cascading sibling merges
        assert!(c(&["0.0", "0.1", "1.0", "1.1.0", "1.1.1"]).is_whole());
    }

    #[test]
    fn meet_diff_examples() {
        assert_eq!(meet(&c(&["0"]), &c(&["0.1"])), c(&["0.1"]));
        assert!(meet(&c(&["0"]), &c(&["1"])).is_empty());
        let r = diff(&ClopenSet::whole(), &c(&["0.0"]));
        assert_eq!(r.stems(), c(&["0.1", "1"]).stems());
        assert_eq!(measure(&r), d(3, 2));
    }

    #[test]
    fn measure_examples() {
        assert_eq!(measure(&ClopenSet::whole()), Dyadic::one());
        assert_eq!(measure(&ClopenSet::empty()), Dyadic::zero());
        assert_eq!(measure(&c(&["0", "1.0"])), d(3, 2));
    }

    #[test]
    fn window_examples() {
        let f = zeros_then_one(3);
        let w = window_union(&f, 0, 3).unwrap();
        assert_eq!(w, c(&["1", "0.1", "0.0.1"]));
        assert_eq!(measure(&w), d(7, 3));
        assert!(window_union(&f, 2, 2).unwrap().is_empty());
        let g = vec![b("0"), b("0.1.1")];
        assert_eq!(window_union(&g, 0, 2).unwrap(), c(&["0"]));
        assert_eq!(
            window_union(&f, 2, 4),
            Err(MeasureError::WindowOutOfRange {
                from: 2,
                to: 4,
                len: 3
            })
        );
        assert!(window_union(&f, 3, 2).is_err());
    }

    #[test]
    fn decay_examples() {
        let f = zeros_then_one(8);
        let table = tail_decay_table(&f, 8).unwrap();
        // Σ_{k=n}^{7} 2^{-(k+1)} by direct summation
        for (n, m) in &table {
            let direct: Dyadic = (*n..8).map(|k| Dyadic::pow2_neg(k as u64 + 1)).sum();
            assert_eq!(*m, direct);
        }
        assert_eq!(table[0].1, d(255, 8));
        assert_eq!(table[8].1, Dyadic::zero());

        let sigma = b("1.0.1");
        let f = vec![sigma.clone(); 5];
        for (_, m) in tail_decay_table(&f, 5).unwrap().iter().take(5) {
            assert_eq!(*m, d(1, 3));
        }
        let f = vec![b("1"), b("0.0"), b("1.1.1"), b("0")];
        let t = tail_decay_table(&f, 4).unwrap();
        assert!(t.windows(2).all(|w| w[0].1 >= w[1].1));
    }

    #[test]
    fn pred_bound_examples() {
        let f = zeros_then_one(3);
        let r = pred_window_bound(&f, 0, 3).unwrap();
        assert_eq!(r.lhs, Dyadic::one());
        assert_eq!(r.rhs, d(7, 2));
        assert!(r.holds);

        let f = vec![b("0.1.1")];
        let r = pred_window_bound(&f, 0, 1).unwrap();
        assert_eq!(r.lhs, d(1, 2));
        assert_eq!(r.rhs, d(1, 2));
        let root = vec![b("e")];
        let r = pred_window_bound(&root, 0, 1).unwrap();
        assert_eq!((r.lhs, r.rhs), (Dyadic::one(), d(2, 0)));

        let r = pred_window_bound(&f, 1, 1).unwrap();
        assert_eq!(
            (r.lhs.is_zero(), r.rhs.is_zero(), r.holds),
            (true, true, true)
        );
    }

    #[test]
    fn shrink_examples() {
        let f = zeros_then_one(8);
        let q = ClopenSet::whole();
        let r = shrink_condition(&q, &f, 2, 8).unwrap();
        let bound = Dyadic::one()
            .checked_sub(
                &Dyadic::pow2_neg(2)
                    .checked_sub(&Dyadic::pow2_neg(8))
                    .unwrap(),
            )
            .unwrap();
        assert!(measure(&r) >= bound);
        assert_eq!(measure(&r), bound);

        let q = c(&["1"]);
        assert_eq!(shrink_condition(&q, &f, 2, 8).unwrap(), q);
        let q = c(&["0.0.1"]);
        assert!(shrink_condition(&q, &f, 0, 8).unwrap().is_empty());

        let p = shrink_condition_pred(&ClopenSet::whole(), &f, 2, 8).unwrap();
        assert_eq!(p, c(&["1", "0.1"]));
    }

    #[test]
    fn bitset_model_spot_checks() {
        let a = c(&["0.1", "1.1.0"]);
        let x = c(&["0", "1.1.0.1"]);
        assert_eq!(bits(&union(&a, &x)), bits(&a) | bits(&x));
        assert_eq!(bits(&meet(&a, &x)), bits(&a) & bits(&x));
        assert_eq!(bits(&diff(&a, &x)), bits(&a) & !bits(&x));
        let m = measure(&a);
        assert_eq!(m, Dyadic::new(bits(&a).count_ones(), 6));
    }
}
