//! Reference computations shared by the integration tests. None of them go
//! through the library's own algorithms.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use tree_crdt::causal::{LamportTimestamp, Tag};
use tree_crdt::ordered::WootrElement;
use tree_crdt::set_crdt::{OpMeta, SetKind, SetOp, Verb};

/// Membership after a set of delivered operations, from the one-line rule
/// of each set kind.
pub fn members<E: Ord + Clone>(kind: SetKind, ops: &[SetOp<E>]) -> BTreeSet<E> {
    let elems: BTreeSet<&E> = ops.iter().map(|o| &o.element).collect();
    elems
        .into_iter()
        .filter(|e| {
            let mine = ops.iter().filter(|o| &o.element == *e);
            match kind {
                SetKind::GSet => mine.clone().any(|o| o.verb == Verb::Add),
                SetKind::TwoPSet => {
                    mine.clone().any(|o| o.verb == Verb::Add) && !mine.clone().any(|o| o.verb == Verb::Rmv)
                }
                SetKind::LwwSet => {
                    let last: Option<(LamportTimestamp, Verb)> = mine
                        .filter_map(|o| match o.meta {
                            OpMeta::Stamp(s) => Some((s, o.verb)),
                            _ => None,
                        })
                        .max();
                    matches!(last, Some((_, Verb::Add)))
                }
                SetKind::CSet => {
                    let k: i64 = mine
                        .map(|o| match &o.meta {
                            OpMeta::Delta { delta, .. } => *delta,
                            _ => 0,
                        })
                        .sum();
                    k > 0
                }
                SetKind::OrSet => {
                    let mut added: BTreeSet<Tag> = BTreeSet::new();
                    let mut removed: BTreeSet<Tag> = BTreeSet::new();
                    for o in mine {
                        if let OpMeta::Tags(t) = &o.meta {
                            match o.verb {
                                Verb::Add => added.extend(t.iter().copied()),
                                Verb::Rmv => removed.extend(t.iter().copied()),
                            }
                        }
                    }
                    added.difference(&removed).next().is_some()
                }
            }
        })
        .cloned()
        .collect()
}

/// Number of simple paths starting at the root of a graph given as
/// adjacency lists, by plain enumeration.
pub fn count_simple_paths(adj: &BTreeMap<usize, Vec<usize>>, root: usize) -> usize {
    fn go(adj: &BTreeMap<usize, Vec<usize>>, at: usize, on: &mut Vec<bool>) -> usize {
        let mut n = 0;
        for &v in adj.get(&at).map(Vec::as_slice).unwrap_or(&[]) {
            if !on[v] {
                on[v] = true;
                n += 1 + go(adj, v, on);
                on[v] = false;
            }
        }
        n
    }
    let size = adj.keys().chain(adj.values().flatten()).max().map_or(1, |m| m + 1);
    let mut on = vec![false; size];
    on[root] = true;
    go(adj, root, &mut on)
}

/// Sequence with tombstones: every element ever delivered stays in place,
/// each one integrated once, in delivery order.
#[derive(Clone, Debug)]
pub struct TombstoneWoot {
    seq: Vec<WootrElement>,
}

impl Default for TombstoneWoot {
    fn default() -> Self {
        TombstoneWoot {
            seq: vec![WootrElement::Begin, WootrElement::End],
        }
    }
}

impl TombstoneWoot {
    fn pos(&self, e: &WootrElement) -> usize {
        self.seq.iter().position(|x| x == e).expect("neighbour delivered first")
    }

    pub fn deliver(&mut self, e: &WootrElement) {
        if self.seq.contains(e) {
            return;
        }
        let (p, n) = e.neighbours().expect("only triples are delivered");
        let (p, n) = (p.clone(), n.clone());
        self.integrate(e, &p, &n);
    }

    fn integrate(&mut self, e: &WootrElement, p: &WootrElement, n: &WootrElement) {
        let (ip, inx) = (self.pos(p), self.pos(n));
        if ip + 1 == inx {
            self.seq.insert(inx, e.clone());
            return;
        }
        let mut l = vec![p.clone()];
        for d in &self.seq[ip + 1..inx] {
            let (dp, dn) = d.neighbours().unwrap();
            if self.pos(dp) <= ip && self.pos(dn) >= inx {
                l.push(d.clone());
            }
        }
        l.push(n.clone());
        let mut i = 1;
        while i < l.len() - 1 && l[i] < *e {
            i += 1;
        }
        let (a, b) = (l[i - 1].clone(), l[i].clone());
        self.integrate(e, &a, &b);
    }

    /// Atoms of the elements in `visible`, in sequence order.
    pub fn read(&self, visible: &BTreeSet<WootrElement>) -> Vec<String> {
        self.seq
            .iter()
            .filter(|e| visible.contains(*e))
            .filter_map(|e| e.atom().map(str::to_owned))
            .collect()
    }
}

/// All orderings of `0..n` in which every index comes after the ones in its
/// `before` mask.
pub fn linear_extensions(before: &[u64]) -> Vec<Vec<usize>> {
    fn go(before: &[u64], done: u64, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == before.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..before.len() {
            if done >> i & 1 == 0 && before[i] & !done == 0 {
                cur.push(i);
                go(before, done | 1 << i, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(before, 0, &mut Vec::new(), &mut out);
    out
}
