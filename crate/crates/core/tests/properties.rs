mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tree_crdt::causal::{ReplicaClock, ReplicaId};
use tree_crdt::combo::{AnyTree, Combo, Repr};
use tree_crdt::graph_tree::GraphTree;
use tree_crdt::ordered::{upi_between, Upi};
use tree_crdt::set_crdt::{Flavor, SetKind, SetState};
use tree_crdt::sim::{self, GenParams};
use tree_crdt::tree::{ConnectionPolicy, PiMode};
use tree_crdt::replica::Replica;
use tree_crdt::word_tree::{Path, WordTree, WORD_ROOT};

fn kind() -> impl Strategy<Value = SetKind> {
    prop::sample::select(SetKind::ALL.to_vec())
}

/// A local history on one replica: (element, remove?) pairs.
fn script() -> impl Strategy<Value = Vec<(u8, bool)>> {
    prop::collection::vec((0u8..4, any::<bool>()), 0..10)
}

fn play(kind: SetKind, flavor: Flavor, id: u32, steps: &[(u8, bool)]) -> SetState<u8> {
    let mut s = SetState::new(kind, flavor);
    let mut clock = ReplicaClock::new(ReplicaId(id));
    for &(e, rmv) in steps {
        let _ = if rmv { s.gen_rmv(&e, &mut clock) } else { s.gen_add(&e, &mut clock) };
    }
    s
}

fn merged(a: &SetState<u8>, b: &SetState<u8>) -> SetState<u8> {
    let mut x = a.clone();
    x.merge(b).unwrap();
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn state_merge_is_a_semilattice(k in kind(), a in script(), b in script(), c in script()) {
        let (a, b, c) = (
            play(k, Flavor::StateBased, 1, &a),
            play(k, Flavor::StateBased, 2, &b),
            play(k, Flavor::StateBased, 3, &c),
        );
        prop_assert_eq!(merged(&a, &b).lookup(), merged(&b, &a).lookup());
        prop_assert_eq!(merged(&a, &b), merged(&b, &a));
        prop_assert_eq!(merged(&merged(&a, &b), &c), merged(&a, &merged(&b, &c)));
        prop_assert_eq!(merged(&a, &a), a);
    }

    #[test]
    fn concurrent_ops_commute(k in kind(), base in script(), a in script(), b in script()) {
        // two replicas start from the same prefix, then act without seeing each other
        let mut r1 = SetState::<u8>::new(k, Flavor::OpBased);
        let mut c1 = ReplicaClock::new(ReplicaId(1));
        let mut shared = Vec::new();
        for &(e, rmv) in &base {
            let op = if rmv { r1.gen_rmv(&e, &mut c1) } else { r1.gen_add(&e, &mut c1) };
            shared.extend(op.ok());
        }
        let mut r2 = SetState::<u8>::new(k, Flavor::OpBased);
        let mut c2 = ReplicaClock::new(ReplicaId(2));
        for op in &shared {
            r2.apply(op);
        }
        c2.observe(c1.now());
        let mut left = Vec::new();
        for &(e, rmv) in &a {
            let op = if rmv { r1.gen_rmv(&e, &mut c1) } else { r1.gen_add(&e, &mut c1) };
            left.extend(op.ok());
        }
        let mut right = Vec::new();
        for &(e, rmv) in &b {
            let op = if rmv { r2.gen_rmv(&e, &mut c2) } else { r2.gen_add(&e, &mut c2) };
            right.extend(op.ok());
        }
        for op in &right {
            r1.apply(op);
        }
        for op in &left {
            r2.apply(op);
        }
        prop_assert_eq!(r1.lookup(), r2.lookup());
        let all: Vec<_> = shared.iter().chain(&left).chain(&right).cloned().collect();
        prop_assert_eq!(r1.lookup(), common::members(k, &all));
    }

    #[test]
    fn set_canonical_roundtrip(k in kind(), s in script(), state in any::<bool>()) {
        let flavor = if state { Flavor::StateBased } else { Flavor::OpBased };
        let a = play(k, flavor, 1, &s);
        let text = a.to_canonical();
        let b = SetState::<u8>::from_canonical(&text).unwrap();
        prop_assert_eq!(b.to_canonical(), text);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn upi_insert_between_always_succeeds(seed in any::<u64>(), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..60)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut clock = ReplicaClock::new(ReplicaId(1));
        let mut seq: Vec<Upi> = Vec::new();
        for p in picks {
            let i = p.index(seq.len() + 1);
            let u = upi_between(i.checked_sub(1).map(|j| &seq[j]), seq.get(i), &mut clock, &mut rng).unwrap();
            seq.insert(i, u);
        }
        prop_assert!(seq.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn reappear_word_lookup_is_prefix_closed(seed in 0u64..10_000, k in prop::sample::select(vec![SetKind::GSet, SetKind::LwwSet, SetKind::OrSet])) {
        let combo = Combo::word(k, Flavor::OpBased, ConnectionPolicy::Reappear);
        let h = sim::generate(combo, GenParams { replicas: 3, ops: 8, seed }).unwrap();
        prop_assert!(h.trace.iter().all(|s| s.incremental_ok));
        let rep = sim::explore(&h, None).unwrap();
        prop_assert!(rep.is_clean(), "{:?}", rep.failures());

        let mut obs = Replica::new(ReplicaId(9), combo, seed).unwrap();
        for o in &h.ops {
            obs.receive(o.env.clone());
        }
        let t = obs.lookup().unwrap();
        for (k, n) in t.nodes() {
            let Some(p) = &n.parent else { continue };
            let want = k.rsplit_once('/').map_or(WORD_ROOT, |(pre, _)| pre);
            prop_assert_eq!(p.as_str(), want, "{}", t.dump());
        }
    }
}

#[test]
fn generated_states_roundtrip() {
    for c in Combo::all().into_iter().filter(|c| c.flavor == Flavor::StateBased && c.pi == PiMode::Unordered) {
        let h = sim::generate(c, GenParams { replicas: 2, ops: 6, seed: 3 }).unwrap();
        for o in &h.ops {
            let Some(tree) = &o.snapshot else { continue };
            let text = tree.to_canonical();
            match (c.repr, tree) {
                (Repr::Word, AnyTree::Word(_)) => {
                    let back = WordTree::from_canonical(&text).unwrap();
                    assert_eq!(back.to_canonical(), text, "{c}");
                }
                (_, AnyTree::Graph(g)) => {
                    let back = GraphTree::from_canonical(&text).unwrap();
                    assert_eq!(&back, g, "{c}");
                    assert_eq!(back.to_canonical(), text);
                }
                _ => unreachable!(),
            }
        }
    }
}

#[test]
fn word_paths_order_by_length_then_atoms() {
    let ps: BTreeSet<Path> = ["ba", "b", "", "ab", "a", "abc"].iter().map(|w| Path::from_atoms(w)).collect();
    let got: Vec<String> = ps.iter().map(Path::compact).collect();
    assert_eq!(got, ["ε", "a", "b", "ab", "ba", "abc"]);
}
