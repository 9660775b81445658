//! Incremental skip and reappear lookups for word trees, driven by changes
//! of the set lookup.

use std::collections::{BTreeMap, BTreeSet};

use super::{build_tree, Path, Rendered};
use crate::tree::{ConnectionPolicy, LookupTree};

#[derive(Clone, Debug)]
pub struct PathCache {
    policy: ConnectionPolicy,
    ls: BTreeSet<Path>,
    /// `LS` children of every path, connected or not (skip only).
    ls_children: BTreeMap<Path, BTreeSet<Path>>,
    /// `LT` with the ghost flag.
    lt: BTreeMap<Path, bool>,
    lt_children: BTreeMap<Path, BTreeSet<Path>>,
    pub touched: u64,
}

impl PathCache {
    pub fn new(policy: ConnectionPolicy) -> Self {
        assert!(matches!(
            policy,
            ConnectionPolicy::Skip | ConnectionPolicy::Reappear
        ));
        PathCache {
            policy,
            ls: BTreeSet::new(),
            ls_children: BTreeMap::new(),
            lt: BTreeMap::from([(Path::root(), false)]),
            lt_children: BTreeMap::new(),
            touched: 0,
        }
    }

    fn lt_add(&mut self, p: &Path, ghost: bool) {
        self.touched += 1;
        self.lt.insert(p.clone(), ghost);
        if let Some(q) = p.parent() {
            self.lt_children.entry(q).or_default().insert(p.clone());
        }
    }

    fn lt_drop(&mut self, p: &Path) {
        self.touched += 1;
        self.lt.remove(p);
        self.lt_children.remove(p);
        if let Some(q) = p.parent() {
            if let Some(s) = self.lt_children.get_mut(&q) {
                s.remove(p);
                if s.is_empty() {
                    self.lt_children.remove(&q);
                }
            }
        }
    }

    fn has_lt_children(&self, p: &Path) -> bool {
        self.lt_children.get(p).is_some_and(|s| !s.is_empty())
    }

    pub fn insert(&mut self, p: &Path) {
        if p.is_root() || !self.ls.insert(p.clone()) {
            return;
        }
        match self.policy {
            ConnectionPolicy::Skip => {
                let parent = p.parent().unwrap();
                self.ls_children.entry(parent.clone()).or_default().insert(p.clone());
                if self.lt.contains_key(&parent) {
                    let mut stack = vec![p.clone()];
                    while let Some(x) = stack.pop() {
                        self.lt_add(&x, false);
                        if let Some(kids) = self.ls_children.get(&x) {
                            stack.extend(kids.iter().cloned());
                        }
                    }
                }
            }
            _ => {
                if let Some(g) = self.lt.get_mut(p) {
                    *g = false;
                    self.touched += 1;
                    return;
                }
                for k in 1..p.len() {
                    let q = p.prefix(k);
                    if !self.lt.contains_key(&q) {
                        self.lt_add(&q, true);
                    }
                }
                self.lt_add(p, false);
            }
        }
    }

    pub fn remove(&mut self, p: &Path) {
        if !self.ls.remove(p) {
            return;
        }
        match self.policy {
            ConnectionPolicy::Skip => {
                let parent = p.parent().unwrap();
                if let Some(s) = self.ls_children.get_mut(&parent) {
                    s.remove(p);
                    if s.is_empty() {
                        self.ls_children.remove(&parent);
                    }
                }
                if self.lt.contains_key(p) {
                    let mut stack = vec![p.clone()];
                    let mut doomed = Vec::new();
                    while let Some(x) = stack.pop() {
                        if let Some(kids) = self.lt_children.get(&x) {
                            stack.extend(kids.iter().cloned());
                        }
                        doomed.push(x);
                    }
                    for x in doomed.iter().rev() {
                        self.lt_drop(x);
                    }
                }
            }
            _ => {
                if self.has_lt_children(p) {
                    self.lt.insert(p.clone(), true);
                    self.touched += 1;
                    return;
                }
                self.lt_drop(p);
                let mut q = p.parent().unwrap();
                while !q.is_root() && self.lt[&q] && !self.has_lt_children(&q) {
                    self.lt_drop(&q);
                    q = q.parent().unwrap();
                }
            }
        }
    }

    pub fn paths(&self) -> impl Iterator<Item = (&Path, bool)> {
        self.lt.iter().map(|(p, g)| (p, *g))
    }

    pub fn render(&self) -> LookupTree {
        let entries: Vec<Rendered> = self
            .lt
            .iter()
            .map(|(p, ghost)| Rendered {
                path: p.clone(),
                source: (!ghost).then(|| p.clone()),
                ghost: *ghost,
            })
            .collect();
        build_tree(&entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word_tree::connect_paths;
    use proptest::prelude::*;

    fn check(cache: &PathCache, ls: &BTreeSet<Path>, policy: ConnectionPolicy) {
        let mut full = ls.clone();
        full.insert(Path::root());
        let batch = connect_paths(&full, policy);
        assert_eq!(cache.render(), build_tree(&batch.entries));
    }

    proptest! {
        #[test]
        fn matches_batch_after_every_change(
            script in prop::collection::vec((any::<bool>(), "[ab]{1,4}"), 1..40),
            reappear in any::<bool>(),
        ) {
            let policy = if reappear { ConnectionPolicy::Reappear } else { ConnectionPolicy::Skip };
            let mut cache = PathCache::new(policy);
            let mut ls = BTreeSet::new();
            for (add, w) in script {
                let p = Path::from_atoms(&w);
                if add {
                    cache.insert(&p);
                    ls.insert(p);
                } else {
                    cache.remove(&p);
                    ls.remove(&p);
                }
                check(&cache, &ls, policy);
            }
        }
    }
}
