use proptest::prelude::*;

use offbranch::cohen::dense_member;
use offbranch::families::{canonical_index, canonical_node, pi_decode, pi_embed};
use offbranch::measure::{self, ClopenSet, Dyadic};
use offbranch::sacks::{
    amalgamate, leq_n, restrict_vec, sacks_leq, split_set, vec_splits, ProdCondition,
    SacksCondition,
};
use offbranch::treecore::{is_antichain, BinNode, Node, NodeSet, TreeNode};

fn node() -> impl Strategy<Value = Node> {
    prop::collection::vec(0u32..4, 0..5).prop_map(Node::new)
}

fn bin(max_len: usize) -> impl Strategy<Value = BinNode> {
    prop::collection::vec(any::<bool>(), 0..=max_len).prop_map(BinNode::from_bools)
}

fn clopen(max_len: usize) -> impl Strategy<Value = Vec<BinNode>> {
    prop::collection::vec(bin(max_len), 0..6)
}

fn condition() -> impl Strategy<Value = SacksCondition> {
    prop::collection::vec(bin(5), 1..5)
        .prop_map(|s| SacksCondition::from_stems(s).expect("nonempty stem list"))
}

/// Membership of every length-6 string, as a bitmask.
fn bits6(stems: &[BinNode]) -> u64 {
    let mut m = 0u64;
    for x in 0..64u32 {
        let word = BinNode::from_bools((0..6).map(|i| x >> (5 - i) & 1 == 1).collect());
        if stems.iter().any(|s| s.is_prefix_of(&word)) {
            m |= 1 << x;
        }
    }
    m
}

fn stems_of(c: &ClopenSet) -> Vec<BinNode> {
    c.stems().iter().cloned().collect()
}

proptest! {
    #[test]
    fn prefix_is_a_partial_order(a in node(), b in node(), c in node()) {
        prop_assert!(a.is_prefix_of(&a));
        if a.is_prefix_of(&b) && b.is_prefix_of(&a) {
            prop_assert_eq!(&a, &b);
        }
        if a.is_prefix_of(&b) && b.is_prefix_of(&c) {
            prop_assert!(a.is_prefix_of(&c));
        }
    }

    #[test]
    fn pi_preserves_and_reflects_prefix(a in node(), b in node()) {
        prop_assert_eq!(a.is_prefix_of(&b), pi_embed(&a).is_prefix_of(&pi_embed(&b)));
        prop_assert_eq!(pi_decode(&pi_embed(&a)), Ok(a.clone()));
        prop_assert_eq!(pi_embed(&a).level() as u64, a.weight());
    }

    #[test]
    fn canonical_enumeration_roundtrips(i in 0u64..100_000) {
        prop_assert_eq!(canonical_index(&canonical_node(i)), i);
    }

    #[test]
    fn clopen_ops_match_bitsets(a in clopen(6), b in clopen(6)) {
        let (ca, cb) = (ClopenSet::from_stems(a.clone()), ClopenSet::from_stems(b.clone()));
        let (ma, mb) = (bits6(&a), bits6(&b));
        prop_assert_eq!(bits6(&stems_of(&measure::union(&ca, &cb))), ma | mb);
        prop_assert_eq!(bits6(&stems_of(&measure::meet(&ca, &cb))), ma & mb);
        prop_assert_eq!(bits6(&stems_of(&measure::diff(&ca, &cb))), ma & !mb);
        prop_assert_eq!(bits6(&stems_of(&measure::complement(&ca))), !ma);
        prop_assert_eq!(measure::measure(&ca), Dyadic::new(ma.count_ones(), 6));
    }

    #[test]
    fn measure_is_modular_and_complemented(a in clopen(8), b in clopen(8)) {
        let (ca, cb) = (ClopenSet::from_stems(a), ClopenSet::from_stems(b));
        let lhs = measure::measure(&measure::union(&ca, &cb)) + measure::measure(&measure::meet(&ca, &cb));
        let rhs = measure::measure(&ca) + measure::measure(&cb);
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(
            measure::measure(&ca) + measure::measure(&measure::complement(&ca)),
            Dyadic::one()
        );
    }

    #[test]
    fn canonical_form_ignores_order_and_redundancy(mut a in clopen(7), extra in bin(7)) {
        let c = ClopenSet::from_stems(a.clone());
        a.reverse();
        prop_assert_eq!(&ClopenSet::from_stems(a.clone()), &c);
        // adding an extension of an existing stem changes nothing
        if let Some(s) = a.first().cloned() {
            let bits: Vec<bool> = s.bits().iter().copied().chain(extra.bits().iter().copied()).collect();
            a.push(BinNode::from_bools(bits));
            prop_assert_eq!(&ClopenSet::from_stems(a), &c);
        }
        prop_assert!(is_antichain(&c.stems().clone()));
    }

    #[test]
    fn pred_window_bound_holds(f in prop::collection::vec(bin(9), 1..12), split in 0usize..12) {
        let from = split.min(f.len());
        let r = measure::pred_window_bound(&f, from, f.len()).unwrap();
        prop_assert!(r.holds, "{:?} > {:?}", r.lhs, r.rhs);
    }

    #[test]
    fn dense_sets_are_open(sigma in node(), tail in node(), a in prop::collection::btree_set(node(), 0..6)) {
        let a: NodeSet = a;
        if dense_member(&sigma, &a) {
            prop_assert!(dense_member(&sigma.concat(tail.coords()), &a));
        }
    }

    #[test]
    fn split_levels_are_antichains_of_the_right_size(p in condition(), n in 0usize..4) {
        let s = split_set(&p, n);
        prop_assert_eq!(s.len(), 1 << n);
        prop_assert!(is_antichain(&s));
        for t in &s {
            prop_assert!(p.is_split(t));
        }
    }

    #[test]
    fn leq_n_is_monotone_in_n(q in condition(), r in condition(), n in 0usize..4) {
        let p = match SacksCondition::from_clopen(measure::meet(q.clopen(), r.clopen())) {
            Ok(p) => p,
            Err(_) => return Ok(()),
        };
        prop_assert!(sacks_leq(&p, &q));
        if leq_n(&p, &q, n + 1) {
            prop_assert!(leq_n(&p, &q, n));
        }
        prop_assert!(leq_n(&q, &q, n));
    }

    #[test]
    fn amalgamating_a_restriction_is_identity(c0 in condition(), c1 in condition(), c2 in condition(), n in 0usize..3) {
        let p = ProdCondition::full().with(0, c0).with(1, c1).with(2, c2);
        for v in vec_splits(&p, n) {
            let r = restrict_vec(&p, &v).unwrap();
            prop_assert!(r.leq(&p));
            prop_assert_eq!(&amalgamate(&p, &r, &v).unwrap(), &p);
        }
    }
}
