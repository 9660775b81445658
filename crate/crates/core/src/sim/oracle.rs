//! Set membership recomputed from the set operations a replica has seen,
//! without going through any set payload.

use std::collections::{BTreeMap, BTreeSet};

use crate::causal::{LamportTimestamp, Tag};
use crate::combo::{AnyTree, SetEvents};
use crate::set_crdt::{OpMeta, SetKind, SetOp, SetState, Verb};

#[derive(Default)]
struct Facts {
    added: bool,
    removed: bool,
    last: Option<(LamportTimestamp, Verb)>,
    delta: i64,
    add_tags: BTreeSet<Tag>,
    rmv_tags: BTreeSet<Tag>,
}

/// Elements a set of `kind` contains after delivering `ops` in any causal
/// order.
pub fn members<'a, E: Ord + Clone + 'a>(
    kind: SetKind,
    ops: impl IntoIterator<Item = &'a SetOp<E>>,
) -> BTreeSet<E> {
    let mut facts: BTreeMap<&E, Facts> = BTreeMap::new();
    for op in ops {
        let f = facts.entry(&op.element).or_default();
        match op.verb {
            Verb::Add => f.added = true,
            Verb::Rmv => f.removed = true,
        }
        match &op.meta {
            OpMeta::Stamp(s) => {
                if f.last.is_none_or(|(t, _)| *s > t) {
                    f.last = Some((*s, op.verb));
                }
            }
            OpMeta::Delta { delta, .. } => f.delta += delta,
            OpMeta::Tags(tags) => match op.verb {
                Verb::Add => f.add_tags.extend(tags),
                Verb::Rmv => f.rmv_tags.extend(tags),
            },
            OpMeta::None => {}
        }
    }
    facts
        .into_iter()
        .filter(|(_, f)| match kind {
            SetKind::GSet => f.added,
            SetKind::TwoPSet => f.added && !f.removed,
            SetKind::LwwSet => matches!(f.last, Some((_, Verb::Add))),
            SetKind::CSet => f.delta > 0,
            SetKind::OrSet => !f.add_tags.is_subset(&f.rmv_tags),
        })
        .map(|(e, _)| e.clone())
        .collect()
}

fn compare<E: Ord + Clone + std::fmt::Debug + serde::Serialize + serde::de::DeserializeOwned>(
    what: &str,
    state: &SetState<E>,
    ops: &[&SetOp<E>],
) -> Result<usize, String> {
    let expected = members(state.kind(), ops.iter().copied());
    let actual = state.lookup();
    if expected != actual {
        return Err(format!(
            "{what} set: oracle {expected:?}, replica {actual:?}"
        ));
    }
    Ok(ops.len())
}

/// Checks every set of `tree` against the oracle over `events`. Returns
/// the number of set operations considered.
pub fn check<'a>(tree: &AnyTree, events: impl IntoIterator<Item = &'a SetEvents>) -> Result<usize, String> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut paths = Vec::new();
    for ev in events {
        match ev {
            SetEvents::Graph(a) => {
                nodes.extend(a.nodes.iter());
                edges.extend(a.edges.iter());
            }
            SetEvents::Word(p) => paths.extend(p.iter()),
        }
    }
    match tree {
        AnyTree::Graph(t) => {
            let mut n = compare("edge", t.edge_set(), &edges)?;
            if let Some(ns) = t.node_set() {
                n += compare("node", ns, &nodes)?;
            }
            Ok(n)
        }
        AnyTree::Word(t) => compare("path", t.path_set(), &paths),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::ReplicaId;

    fn op(verb: Verb, e: char, meta: OpMeta) -> SetOp<char> {
        SetOp {
            verb,
            element: e,
            meta,
        }
    }

    #[test]
    fn rules_per_kind() {
        let t = |c, r| LamportTimestamp::new(c, ReplicaId(r));
        let lww = [
            op(Verb::Add, 'x', OpMeta::Stamp(t(1, 1))),
            op(Verb::Rmv, 'x', OpMeta::Stamp(t(2, 1))),
            op(Verb::Add, 'y', OpMeta::Stamp(t(3, 2))),
            op(Verb::Rmv, 'y', OpMeta::Stamp(t(3, 1))),
        ];
        assert_eq!(members(SetKind::LwwSet, &lww), BTreeSet::from(['y']));
        let tag = |s| Tag {
            origin: ReplicaId(1),
            seq: s,
        };
        let or = [
            op(Verb::Add, 'x', OpMeta::Tags(vec![tag(0)])),
            op(Verb::Add, 'x', OpMeta::Tags(vec![tag(1)])),
            op(Verb::Rmv, 'x', OpMeta::Tags(vec![tag(0)])),
        ];
        assert_eq!(members(SetKind::OrSet, &or), BTreeSet::from(['x']));
        let c = [
            op(Verb::Add, 'x', OpMeta::Delta { delta: 1, tags: vec![] }),
            op(Verb::Add, 'x', OpMeta::Delta { delta: 1, tags: vec![] }),
            op(Verb::Rmv, 'x', OpMeta::Delta { delta: -1, tags: vec![] }),
        ];
        assert_eq!(members(SetKind::CSet, &c), BTreeSet::from(['x']));
        let two = [op(Verb::Add, 'x', OpMeta::None), op(Verb::Rmv, 'x', OpMeta::None)];
        assert!(members(SetKind::TwoPSet, &two).is_empty());
        assert_eq!(members(SetKind::GSet, &two), BTreeSet::from(['x']));
    }
}
