//! Recursive WOOT: a sequence CRDT whose elements are `(atom, prev, next)`
//! triples built from the begin and end markers.
//!
//! Elements are compared structurally, so two replicas inserting the same
//! atom between the same neighbours produce the same element. Removed
//! elements need not be kept: each element embeds its neighbours, so the
//! ordering procedure can rebuild the positions of removed neighbours from
//! the surviving elements alone.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::causal::ReplicaClock;
use crate::error::{precondition, Error, Result};
use crate::set_crdt::{Flavor, SetKind, SetOp, SetState};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WootrElement {
    Begin,
    Triple(Arc<WootrTriple>),
    End,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WootrTriple {
    pub atom: String,
    pub prev: WootrElement,
    pub next: WootrElement,
}

impl WootrElement {
    pub fn triple(atom: impl Into<String>, prev: WootrElement, next: WootrElement) -> Self {
        WootrElement::Triple(Arc::new(WootrTriple {
            atom: atom.into(),
            prev,
            next,
        }))
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            WootrElement::Triple(t) => Some(&t.atom),
            _ => None,
        }
    }

    pub fn neighbours(&self) -> Option<(&WootrElement, &WootrElement)> {
        match self {
            WootrElement::Triple(t) => Some((&t.prev, &t.next)),
            _ => None,
        }
    }

    /// Nesting depth; markers have depth zero.
    pub fn depth(&self) -> usize {
        match self {
            WootrElement::Triple(t) => 1 + t.prev.depth().max(t.next.depth()),
            _ => 0,
        }
    }

    /// Canonical recursive text form; equal elements have equal encodings.
    pub fn encode(&self) -> String {
        let mut out = String::new();
        self.encode_into(&mut out);
        out
    }

    fn encode_into(&self, out: &mut String) {
        match self {
            WootrElement::Begin => out.push('^'),
            WootrElement::End => out.push('$'),
            WootrElement::Triple(t) => {
                out.push('<');
                out.push_str(&t.atom);
                out.push(',');
                t.prev.encode_into(out);
                out.push(',');
                t.next.encode_into(out);
                out.push('>');
            }
        }
    }
}

impl fmt::Debug for WootrElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

impl fmt::Display for WootrElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

/// Every triple reachable from `elements` through prev/next links.
pub fn closure<'a, I>(elements: I) -> BTreeSet<WootrElement>
where
    I: IntoIterator<Item = &'a WootrElement>,
{
    let mut seen = BTreeSet::new();
    let mut stack: Vec<WootrElement> = elements.into_iter().cloned().collect();
    while let Some(e) = stack.pop() {
        if let Some((p, n)) = e.neighbours() {
            if seen.insert(e.clone()) {
                stack.push(p.clone());
                stack.push(n.clone());
            }
        }
    }
    seen
}

/// Runs WOOT integration over `universe` (which must be closed under
/// prev/next) and returns the full sequence without the markers.
pub fn integrate(universe: &BTreeSet<WootrElement>) -> Vec<WootrElement> {
    let mut order: Vec<&WootrElement> = universe.iter().collect();
    order.sort_by_key(|e| e.depth());
    let mut seq = vec![WootrElement::Begin, WootrElement::End];
    for e in order {
        let (p, n) = e.neighbours().expect("markers are not integrated");
        integrate_between(&mut seq, e, p, n);
    }
    seq.pop();
    seq.remove(0);
    seq
}

fn position(seq: &[WootrElement], e: &WootrElement) -> usize {
    seq.iter()
        .position(|x| x == e)
        .expect("neighbours are integrated before their dependents")
}

fn integrate_between(
    seq: &mut Vec<WootrElement>,
    e: &WootrElement,
    prev: &WootrElement,
    next: &WootrElement,
) {
    let ip = position(seq, prev);
    let inx = position(seq, next);
    if inx == ip + 1 {
        seq.insert(inx, e.clone());
        return;
    }
    let mut bounds = vec![prev.clone()];
    for d in &seq[ip + 1..inx] {
        let (dp, dn) = d.neighbours().expect("markers only at the ends");
        if position(seq, dp) <= ip && position(seq, dn) >= inx {
            bounds.push(d.clone());
        }
    }
    bounds.push(next.clone());
    let mut i = 1;
    while i < bounds.len() - 1 && bounds[i] < *e {
        i += 1;
    }
    let (lo, hi) = (bounds[i - 1].clone(), bounds[i].clone());
    integrate_between(seq, e, &lo, &hi);
}

/// Orders a set of elements. Removed neighbours are reconstructed from the
/// embedded prev/next links and then hidden again.
pub fn order_elements<'a, I>(elements: I) -> Vec<WootrElement>
where
    I: IntoIterator<Item = &'a WootrElement>,
{
    let visible: BTreeSet<WootrElement> = elements
        .into_iter()
        .filter(|e| e.neighbours().is_some())
        .cloned()
        .collect();
    let universe = closure(visible.iter());
    integrate(&universe)
        .into_iter()
        .filter(|e| visible.contains(e))
        .collect()
}

/// A replicated sequence of atoms backed by a set CRDT of WOOTR elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WootrSequence {
    set: SetState<WootrElement>,
}

impl WootrSequence {
    pub fn new(kind: SetKind, flavor: Flavor) -> Result<Self> {
        match kind {
            SetKind::LwwSet | SetKind::CSet | SetKind::OrSet => Ok(WootrSequence {
                set: SetState::new(kind, flavor),
            }),
            other => Err(Error::IllegalCombo(format!(
                "WOOTR sequences need a set that allows re-insertion, got {other:?}"
            ))),
        }
    }

    pub fn set(&self) -> &SetState<WootrElement> {
        &self.set
    }

    /// Visible elements in sequence order.
    pub fn elements(&self) -> Vec<WootrElement> {
        order_elements(self.set.present())
    }

    /// The atoms of the sequence in order.
    pub fn order(&self) -> Vec<String> {
        self.elements()
            .iter()
            .filter_map(|e| e.atom().map(str::to_owned))
            .collect()
    }

    /// Inserts `atom` between two elements, `prev` strictly before `next`.
    pub fn insert(
        &mut self,
        atom: &str,
        prev: &WootrElement,
        next: &WootrElement,
        clock: &mut ReplicaClock,
    ) -> Result<SetOp<WootrElement>> {
        let seq = self.elements();
        let locate = |e: &WootrElement| -> Option<usize> {
            match e {
                WootrElement::Begin => Some(0),
                WootrElement::End => Some(seq.len() + 1),
                _ => seq.iter().position(|x| x == e).map(|i| i + 1),
            }
        };
        match (locate(prev), locate(next)) {
            (Some(p), Some(n)) if p < n => {}
            _ => return Err(precondition("prev must precede next in the current sequence")),
        }
        let element = WootrElement::triple(atom, prev.clone(), next.clone());
        self.set.gen_add(&element, clock)
    }

    /// Inserts `atom` at `index` of the current visible sequence.
    pub fn insert_at(
        &mut self,
        atom: &str,
        index: usize,
        clock: &mut ReplicaClock,
    ) -> Result<SetOp<WootrElement>> {
        let seq = self.elements();
        if index > seq.len() {
            return Err(precondition("insertion index past the end"));
        }
        let prev = if index == 0 {
            WootrElement::Begin
        } else {
            seq[index - 1].clone()
        };
        let next = seq.get(index).cloned().unwrap_or(WootrElement::End);
        self.insert(atom, &prev, &next, clock)
    }

    pub fn remove(
        &mut self,
        element: &WootrElement,
        clock: &mut ReplicaClock,
    ) -> Result<SetOp<WootrElement>> {
        self.set.gen_rmv(element, clock)
    }

    pub fn apply(&mut self, op: &SetOp<WootrElement>) {
        self.set.apply(op);
    }

    pub fn merge(&mut self, other: &WootrSequence) -> Result<()> {
        self.set.merge(&other.set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::ReplicaId;

    fn t(a: &str, p: &WootrElement, n: &WootrElement) -> WootrElement {
        WootrElement::triple(a, p.clone(), n.clone())
    }

    #[test]
    fn three_element_example_reads_abc() {
        let b = WootrElement::Begin;
        let e = WootrElement::End;
        let a = t("a", &b, &e);
        let bb = t("b", &a, &e);
        let c = t("c", &b, &e);
        let atoms = |v: Vec<WootrElement>| -> String {
            v.iter().map(|x| x.atom().unwrap()).collect()
        };
        assert_eq!(atoms(order_elements([&a, &bb, &c])), "abc");
        assert_eq!(atoms(order_elements([&c, &bb, &a])), "abc");
    }

    #[test]
    fn structural_equality_collapses_concurrent_inserts() {
        let mut r1 = WootrSequence::new(SetKind::OrSet, Flavor::OpBased).unwrap();
        let mut r2 = r1.clone();
        let mut c1 = ReplicaClock::new(ReplicaId(1));
        let mut c2 = ReplicaClock::new(ReplicaId(2));
        let o1 = r1.insert("x", &WootrElement::Begin, &WootrElement::End, &mut c1).unwrap();
        let o2 = r2.insert("x", &WootrElement::Begin, &WootrElement::End, &mut c2).unwrap();
        assert_eq!(o1.element, o2.element);
        r1.apply(&o2);
        r2.apply(&o1);
        assert_eq!(r1.order(), vec!["x"]);
        assert_eq!(r2.order(), vec!["x"]);
    }

    #[test]
    fn removed_neighbour_still_places_dependent() {
        let b = WootrElement::Begin;
        let e = WootrElement::End;
        let a = t("a", &b, &e);
        let z = t("z", &a, &e);
        let m = t("m", &a, &z);
        // `a` and `z` removed: `m` is still placed relative to the rebuilt `a`/`z`.
        let q = t("q", &b, &e);
        let order: Vec<_> = order_elements([&m, &q]);
        let full = integrate(&closure([&m, &q]));
        let expected: Vec<_> = full.into_iter().filter(|x| *x == m || *x == q).collect();
        assert_eq!(order, expected);
    }

    #[test]
    fn insert_requires_ordered_neighbours() {
        let mut s = WootrSequence::new(SetKind::LwwSet, Flavor::OpBased).unwrap();
        let mut c = ReplicaClock::new(ReplicaId(1));
        s.insert_at("a", 0, &mut c).unwrap();
        let a = s.elements()[0].clone();
        assert!(matches!(
            s.insert("b", &WootrElement::End, &a, &mut c),
            Err(Error::PreconditionViolation(_))
        ));
        assert!(WootrSequence::new(SetKind::GSet, Flavor::OpBased).is_err());
    }

    #[test]
    fn empty_sequence_orders_to_nothing() {
        let s = WootrSequence::new(SetKind::CSet, Flavor::StateBased).unwrap();
        assert!(s.order().is_empty());
    }

    #[test]
    fn encoding_is_structural() {
        let a = t("a", &WootrElement::Begin, &WootrElement::End);
        assert_eq!(t("b", &a, &WootrElement::End).encode(), "<b,<a,^,$>,$>");
    }
}
