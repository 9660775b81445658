//! Incremental skip lookup for trees whose nodes are added once, under a
//! single parent (two-phase node and edge sets).

use std::collections::{BTreeMap, BTreeSet};

use super::mapping::edge_position;
use crate::tree::{Edge, LookupTree, LookupTreeBuilder, NodeKey, ROOT};

/// Keeps the set of nodes connected to the root up to date as set elements
/// come and go. `touched` counts node visits and is the cost measure.
#[derive(Clone, Debug)]
pub struct SkipIndex {
    /// Node presence follows from incoming edges (edge-only trees).
    implicit_nodes: bool,
    present: BTreeSet<NodeKey>,
    into: BTreeMap<NodeKey, BTreeSet<Edge>>,
    out: BTreeMap<NodeKey, BTreeSet<Edge>>,
    attached: BTreeSet<NodeKey>,
    /// Set once some node has two live incoming edges; the index no longer
    /// describes a tree and callers fall back to a full lookup.
    broken: bool,
    pub touched: u64,
}

impl SkipIndex {
    pub fn new(implicit_nodes: bool) -> Self {
        SkipIndex {
            implicit_nodes,
            present: BTreeSet::from([NodeKey::root()]),
            into: BTreeMap::new(),
            out: BTreeMap::new(),
            attached: BTreeSet::from([NodeKey::root()]),
            broken: false,
            touched: 0,
        }
    }

    pub fn is_broken(&self) -> bool {
        self.broken
    }

    fn is_present(&self, n: &NodeKey) -> bool {
        if n.is_root() {
            return true;
        }
        if self.implicit_nodes {
            self.into.get(n).is_some_and(|s| !s.is_empty())
        } else {
            self.present.contains(n)
        }
    }

    fn in_edge(&self, n: &NodeKey) -> Option<&Edge> {
        self.into.get(n).and_then(|s| s.iter().next())
    }

    fn attach(&mut self, n: &NodeKey) {
        let mut stack = vec![n.clone()];
        while let Some(x) = stack.pop() {
            if !self.attached.insert(x.clone()) {
                continue;
            }
            self.touched += 1;
            for e in self.out.get(&x).into_iter().flatten() {
                if self.is_present(&e.child) && !self.attached.contains(&e.child) {
                    stack.push(e.child.clone());
                }
            }
        }
    }

    fn detach(&mut self, n: &NodeKey) {
        let mut stack = vec![n.clone()];
        while let Some(x) = stack.pop() {
            if !self.attached.remove(&x) {
                continue;
            }
            self.touched += 1;
            for e in self.out.get(&x).into_iter().flatten() {
                if self.attached.contains(&e.child) {
                    stack.push(e.child.clone());
                }
            }
        }
    }

    fn try_attach(&mut self, n: &NodeKey) {
        let parent_attached = self
            .in_edge(n)
            .is_some_and(|e| self.attached.contains(&e.parent));
        if self.is_present(n) && parent_attached {
            self.attach(n);
        }
    }

    pub fn add_node(&mut self, n: &NodeKey) {
        self.touched += 1;
        self.present.insert(n.clone());
        self.try_attach(n);
    }

    pub fn remove_node(&mut self, n: &NodeKey) {
        self.touched += 1;
        self.present.remove(n);
        self.detach(n);
    }

    pub fn add_edge(&mut self, e: &Edge) {
        self.touched += 1;
        let into = self.into.entry(e.child.clone()).or_default();
        into.insert(e.clone());
        if into.len() > 1 {
            self.broken = true;
        }
        self.out.entry(e.parent.clone()).or_default().insert(e.clone());
        self.try_attach(&e.child);
    }

    pub fn remove_edge(&mut self, e: &Edge) {
        self.touched += 1;
        if let Some(s) = self.into.get_mut(&e.child) {
            s.remove(e);
            if s.is_empty() {
                self.into.remove(&e.child);
            }
        }
        if let Some(s) = self.out.get_mut(&e.parent) {
            s.remove(e);
        }
        if self.in_edge(&e.child).is_none() || !self.is_present(&e.child) {
            self.detach(&e.child);
        }
    }

    /// Renders the connected nodes. With `path_keys`, instances are keyed by
    /// their root path as under the several policy.
    pub fn render(&self, path_keys: bool) -> LookupTree {
        let key = |n: &NodeKey| -> String {
            if !path_keys {
                return n.to_string();
            }
            let mut segs = Vec::new();
            let mut x = n.clone();
            while !x.is_root() {
                let e = self.in_edge(&x).expect("attached nodes have a parent");
                segs.push(if e.pos.is_none() {
                    e.child.to_string()
                } else {
                    format!("{}@{}", e.child, e.pos)
                });
                x = e.parent.clone();
            }
            segs.reverse();
            segs.join("/")
        };
        let mut b = LookupTreeBuilder::new(ROOT);
        for n in &self.attached {
            if n.is_root() {
                continue;
            }
            let e = self.in_edge(n).expect("attached nodes have a parent");
            let parent = if e.parent.is_root() {
                ROOT.to_owned()
            } else {
                key(&e.parent)
            };
            b.add(key(n), n.id.0.clone(), parent, edge_position(e), false, None);
        }
        b.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(s: &str) -> NodeKey {
        NodeKey::plain(s)
    }

    fn e(p: &str, c: &str) -> Edge {
        Edge::new(k(p), k(c))
    }

    #[test]
    fn orphan_add_is_constant_work() {
        let mut ix = SkipIndex::new(false);
        ix.add_node(&k("a"));
        ix.add_edge(&e("root", "a"));
        ix.remove_node(&k("a"));
        ix.remove_edge(&e("root", "a"));
        let before = ix.touched;
        ix.add_node(&k("b"));
        ix.add_edge(&e("a", "b"));
        assert_eq!(ix.touched - before, 2);
        assert_eq!(ix.render(false).dump(), "root\n");
    }

    #[test]
    fn late_parent_attaches_waiting_children() {
        let mut ix = SkipIndex::new(true);
        ix.add_edge(&e("a", "b"));
        ix.add_edge(&e("b", "c"));
        assert_eq!(ix.render(false).dump(), "root\n");
        ix.add_edge(&e("root", "a"));
        assert_eq!(ix.render(false).dump(), "root\n  a\n    b\n      c\n");
        assert!(ix.render(true).contains("a/b/c"));
        ix.remove_edge(&e("root", "a"));
        assert_eq!(ix.render(false).dump(), "root\n");
    }

    #[test]
    fn second_parent_breaks_index() {
        let mut ix = SkipIndex::new(true);
        ix.add_edge(&e("root", "a"));
        ix.add_edge(&e("root", "b"));
        ix.add_edge(&e("b", "a"));
        assert!(ix.is_broken());
    }
}
