//! Cohen forcing on the ω-tree ordered by end-extension: the dense open sets
//! `D_A` of conditions none of whose extensions right-shift into `A`, an
//! explicit density witness, finite generic runs, and the check that the hair
//! of the generic branch meets each target only below the point where the run
//! entered `D_A`.

use serde::Serialize;

use crate::error::CohenError;
use crate::treecore::{hair_omega, left_shift, Node, NodeSet, TreeNode};

/// A condition; `p ≤ q` iff `p` end-extends `q`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CohenCondition(pub Node);

impl CohenCondition {
    pub fn node(&self) -> &Node {
        &self.0
    }

    /// `self ≤ other`
    pub fn extends(&self, other: &CohenCondition) -> bool {
        other.0.is_prefix_of(&self.0)
    }
}

/// `σ ∈ D_A` iff `rs(σ⌢τ) ∉ A` for every `τ`. For finite `A` that means no
/// element of `A` has a left shift extending `σ`.
pub fn dense_member(sigma: &Node, a: &NodeSet) -> bool {
    !a.iter()
        .filter_map(left_shift)
        .any(|ls| sigma.is_prefix_of(&ls))
}

/// Extends `p` by one coordinate larger than every coordinate occurring in
/// `A`; no left shift of an element of `A` can pass through that coordinate.
pub fn dense_extend(p: &CohenCondition, a: &NodeSet) -> CohenCondition {
    let m = a
        .iter()
        .filter_map(Node::max_coord)
        .max()
        .map_or(0, |c| c + 1);
    let q = CohenCondition(p.0.child(m));
    debug_assert!(dense_member(q.node(), a));
    q
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Met {
    pub label: String,
    pub witness: Node,
    pub level: usize,
}

/// A finite descending chain of conditions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GenericRun {
    pub chain: Vec<CohenCondition>,
    pub stem: Node,
    pub met: Vec<Met>,
}

/// Meets `D_A` for each target in order, starting below `p0`.
pub fn run_generic(p0: &CohenCondition, targets: &[(String, NodeSet)]) -> GenericRun {
    let mut chain = vec![p0.clone()];
    let mut met = Vec::with_capacity(targets.len());
    for (label, a) in targets {
        let q = dense_extend(chain.last().unwrap(), a);
        met.push(Met {
            label: label.clone(),
            witness: q.0.clone(),
            level: q.0.level(),
        });
        chain.push(q);
    }
    let stem = chain.last().unwrap().0.clone();
    GenericRun { chain, stem, met }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HairRecord {
    pub label: String,
    pub witness: Node,
    pub intersection: NodeSet,
    pub bound_ok: bool,
}

/// For each target, the hair of the run's stem intersected with the target,
/// and whether every hit is `rs(τ)` for some `τ` below the witness.
pub fn hair_report(
    run: &GenericRun,
    targets: &[(String, NodeSet)],
) -> Result<Vec<HairRecord>, CohenError> {
    let expected: Vec<String> = run.met.iter().map(|m| m.label.clone()).collect();
    let got: Vec<String> = targets.iter().map(|(l, _)| l.clone()).collect();
    if expected != got {
        return Err(CohenError::MismatchedTargets { expected, got });
    }
    let hair = hair_omega(&run.stem.prefixes());
    Ok(run
        .met
        .iter()
        .zip(targets)
        .map(|(m, (label, a))| {
            let intersection: NodeSet = hair.intersection(a).cloned().collect();
            let bound_ok = intersection
                .iter()
                .all(|h| left_shift(h).is_some_and(|tau| tau.is_prefix_of(&m.witness)));
            HairRecord {
                label: label.clone(),
                witness: m.witness.clone(),
                intersection,
                bound_ok,
            }
        })
        .collect())
}
