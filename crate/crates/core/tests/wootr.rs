mod common;

use std::collections::BTreeSet;

use tree_crdt::causal::{ReplicaClock, ReplicaId};
use tree_crdt::ordered::{WootrElement, WootrSequence};
use tree_crdt::set_crdt::{Flavor, SetKind};

#[test]
fn concurrent_single_inserts_agree_in_every_order() {
    let mut ops = Vec::new();
    for (i, atom) in ["d", "b", "a", "c"].iter().enumerate() {
        let mut s = WootrSequence::new(SetKind::OrSet, Flavor::OpBased).unwrap();
        let mut clock = ReplicaClock::new(ReplicaId(i as u32 + 1));
        ops.push(s.insert_at(atom, 0, &mut clock).unwrap());
    }
    let mut seen = BTreeSet::new();
    for order in common::linear_extensions(&[0; 4]) {
        let mut s = WootrSequence::new(SetKind::OrSet, Flavor::OpBased).unwrap();
        for k in order {
            s.apply(&ops[k]);
        }
        seen.insert(s.order().concat());
    }
    assert_eq!(seen.len(), 1);
    assert_eq!(seen.into_iter().next().unwrap(), "abcd");
}

#[test]
fn insert_after_removed_neighbour() {
    let mut s = WootrSequence::new(SetKind::LwwSet, Flavor::OpBased).unwrap();
    let mut clock = ReplicaClock::new(ReplicaId(1));
    for (i, a) in ["x", "y", "z"].iter().enumerate() {
        s.insert_at(a, i, &mut clock).unwrap();
    }
    let y = s.elements()[1].clone();
    let mut other = s.clone();
    s.remove(&y, &mut clock).unwrap();
    let mut c2 = ReplicaClock::new(ReplicaId(2));
    c2.observe(clock.now());
    let w = other.insert_at("w", 2, &mut c2).unwrap();
    s.apply(&w);
    assert_eq!(s.order().concat(), "xwz");
    assert!(!s.elements().contains(&y));
    assert!(matches!(w.element, WootrElement::Triple(_)));
}

#[test]
fn state_merge_matches_op_delivery() {
    let mut a = WootrSequence::new(SetKind::CSet, Flavor::StateBased).unwrap();
    let mut b = WootrSequence::new(SetKind::CSet, Flavor::StateBased).unwrap();
    let (mut ca, mut cb) = (ReplicaClock::new(ReplicaId(1)), ReplicaClock::new(ReplicaId(2)));
    a.insert_at("a", 0, &mut ca).unwrap();
    b.insert_at("b", 0, &mut cb).unwrap();
    b.insert_at("c", 1, &mut cb).unwrap();
    let mut ab = a.clone();
    ab.merge(&b).unwrap();
    let mut ba = b.clone();
    ba.merge(&a).unwrap();
    assert_eq!(ab.order(), ba.order());
    assert_eq!(ab.order().len(), 3);
}
