//! Trees as a set of root-to-node paths (words over node atoms).

pub mod connect;
pub mod incremental;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::causal::{LamportTimestamp, ReplicaClock};
use crate::error::{precondition, Error, Result};
use crate::ordered::{position_between, Position};
use crate::set_crdt::{Flavor, Issuer, OpMeta, SetKind, SetOp, SetState, Verb};
use crate::tree::{ConnectionPolicy, LookupTree, LookupTreeBuilder, PiMode};
use crate::wire;

pub use connect::{connect_paths, Connected, Rendered};
pub use incremental::PathCache;

/// Key of the root in word lookup trees.
pub const WORD_ROOT: &str = "/";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Step {
    pub atom: String,
    pub pos: Position,
}

impl Step {
    pub fn plain(atom: impl Into<String>) -> Self {
        Step {
            atom: atom.into(),
            pos: Position::None,
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pos.is_none() {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "{}@{}", self.atom, self.pos)
        }
    }
}

/// A word `a1..an`; the empty word is the root. Ordered by length first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path(pub Vec<Step>);

impl Ord for Path {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Path {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Path {
    pub fn root() -> Self {
        Path(Vec::new())
    }

    /// One unpositioned step per character.
    pub fn from_atoms(word: &str) -> Self {
        Path(word.chars().map(|c| Step::plain(c.to_string())).collect())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn prefix(&self, k: usize) -> Path {
        Path(self.0[..k].to_vec())
    }

    /// Steps from index `from` (0-based) on.
    pub fn suffix(&self, from: usize) -> Path {
        Path(self.0[from..].to_vec())
    }

    pub fn parent(&self) -> Option<Path> {
        (!self.is_root()).then(|| self.prefix(self.len() - 1))
    }

    pub fn join(&self, tail: &Path) -> Path {
        let mut v = self.0.clone();
        v.extend(tail.0.iter().cloned());
        Path(v)
    }

    pub fn child(&self, step: Step) -> Path {
        let mut v = self.0.clone();
        v.push(step);
        Path(v)
    }

    pub fn last(&self) -> Option<&Step> {
        self.0.last()
    }

    pub fn starts_with(&self, prefix: &Path) -> bool {
        self.0.starts_with(&prefix.0)
    }

    /// Atoms run together, `ε` for the root.
    pub fn compact(&self) -> String {
        if self.is_root() {
            "ε".into()
        } else {
            self.0.iter().map(|s| s.atom.as_str()).collect()
        }
    }

    /// Key of the node at this path in a lookup tree.
    pub fn key(&self) -> String {
        if self.is_root() {
            WORD_ROOT.into()
        } else {
            self.to_string()
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Builds the lookup tree of a prefix-closed path set.
pub fn build_tree<'a>(entries: impl IntoIterator<Item = &'a Rendered>) -> LookupTree {
    let mut b = LookupTreeBuilder::new(WORD_ROOT);
    for r in entries {
        let Some(parent) = r.path.parent() else {
            continue;
        };
        let step = r.path.last().unwrap();
        let origin = r
            .source
            .as_ref()
            .filter(|s| **s != r.path)
            .map(|s| s.key());
        b.add(
            r.path.key(),
            step.atom.clone(),
            parent.key(),
            step.pos.clone(),
            r.ghost,
            origin,
        );
    }
    b.finish()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordConfig {
    pub kind: SetKind,
    pub flavor: Flavor,
    pub connect: ConnectionPolicy,
    pub pi: PiMode,
}

impl WordConfig {
    pub fn new(kind: SetKind, flavor: Flavor, connect: ConnectionPolicy) -> Self {
        WordConfig {
            kind,
            flavor,
            connect,
            pi: PiMode::Unordered,
        }
    }

    pub fn with_pi(mut self, pi: PiMode) -> Self {
        self.pi = pi;
        self
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::IllegalCombo(m.to_owned()));
        match self.pi {
            PiMode::NodeUpi => bad("word trees have no node set to position"),
            PiMode::EdgeUpi if self.kind != SetKind::TwoPSet => {
                bad("positioned steps need a two-phase path set")
            }
            PiMode::Wootr
                if !matches!(self.kind, SetKind::LwwSet | SetKind::CSet | SetKind::OrSet) =>
            {
                bad("WOOTR positions need a set that allows re-insertion")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordOp {
    pub stamp: LamportTimestamp,
    pub paths: Vec<SetOp<Path>>,
    /// Constant-size removal of every path extending this one.
    pub rmv_prefix: Option<Path>,
}

#[derive(Clone, Debug)]
pub struct WordTree {
    config: WordConfig,
    paths: SetState<Path>,
    history: BTreeSet<Path>,
    /// Prefixes removed by prefix messages; later adds below them are
    /// removed on arrival.
    retired: BTreeSet<Path>,
    cache: Option<PathCache>,
}

impl PartialEq for WordTree {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.paths == other.paths
            && self.history == other.history
            && self.retired == other.retired
    }
}

#[derive(Serialize, Deserialize)]
struct WordTreeWire {
    config: WordConfig,
    paths: SetState<Path>,
    history: BTreeSet<Path>,
    retired: BTreeSet<Path>,
}

fn valid_atom(atom: &str) -> bool {
    !atom.is_empty()
        && !atom
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '/' | '@' | '#'))
}

impl WordTree {
    pub fn new(config: WordConfig) -> Result<Self> {
        config.check()?;
        let cache = matches!(config.connect, ConnectionPolicy::Skip | ConnectionPolicy::Reappear)
            .then(|| PathCache::new(config.connect));
        Ok(WordTree {
            config,
            paths: SetState::new(config.kind, config.flavor),
            history: BTreeSet::new(),
            retired: BTreeSet::new(),
            cache,
        })
    }

    pub fn config(&self) -> &WordConfig {
        &self.config
    }

    pub fn path_set(&self) -> &SetState<Path> {
        &self.paths
    }

    pub fn history(&self) -> &BTreeSet<Path> {
        &self.history
    }

    /// `LS`: the set lookup, always including the root.
    pub fn set_lookup(&self) -> BTreeSet<Path> {
        let mut ls = self.paths.lookup();
        ls.insert(Path::root());
        ls
    }

    pub fn connected(&self) -> Connected {
        connect_paths(&self.set_lookup(), self.config.connect)
    }

    pub fn batch_lookup(&self) -> LookupTree {
        build_tree(&self.connected().entries)
    }

    pub fn lookup(&self) -> LookupTree {
        match &self.cache {
            Some(c) => c.render(),
            None => self.batch_lookup(),
        }
    }

    /// Prefix probes and node visits of the incremental cache.
    pub fn cache_work(&self) -> Option<u64> {
        self.cache.as_ref().map(|c| c.touched)
    }

    fn uses_prefix_message(&self) -> bool {
        self.config.kind == SetKind::TwoPSet
            && self.config.flavor == Flavor::OpBased
            && self.config.connect == ConnectionPolicy::Skip
    }

    /// Adds the atom `atom` as a child of the node `parent`.
    pub fn gen_add<R: Rng + ?Sized>(
        &mut self,
        atom: &str,
        parent: &str,
        index: Option<usize>,
        clock: &mut ReplicaClock,
        rng: &mut R,
    ) -> Result<WordOp> {
        if !valid_atom(atom) {
            return Err(precondition(format!("{atom:?} cannot be used as an atom")));
        }
        let conn = self.connected();
        let entry = conn
            .entries
            .iter()
            .find(|r| r.path.key() == parent)
            .ok_or_else(|| precondition(format!("parent {parent} is not in the tree")))?;
        let parent_path = entry.path.clone();
        let source = entry.source.clone().unwrap_or_else(|| parent_path.clone());
        let tree = build_tree(&conn.entries);
        let siblings: Vec<Position> = tree
            .children(parent)
            .iter()
            .map(|c| tree.get(c).unwrap().position.clone())
            .collect();
        let index = index.unwrap_or(siblings.len());
        let pos = position_between(self.config.pi, atom, &siblings, index, clock, rng)?;
        let step = Step {
            atom: atom.to_owned(),
            pos,
        };
        let rendered = parent_path.child(step.clone());
        let element = source.child(step);
        if tree.contains(&rendered.key()) || self.paths.contains(&element) {
            return Err(precondition(format!("{} is already in the tree", rendered.key())));
        }
        if self.config.kind == SetKind::TwoPSet && self.history.contains(&element) {
            return Err(precondition(format!(
                "{element} was already added once and two-phase sets cannot add it again"
            )));
        }
        let mut issuer = Issuer::new(clock);
        let op = WordOp {
            stamp: issuer.stamp(),
            paths: vec![self.paths.prepare_add(&element, &mut issuer)],
            rmv_prefix: None,
        };
        self.apply(&op);
        Ok(op)
    }

    /// Removes the node `key` and everything drawn below it.
    pub fn gen_rmv(&mut self, key: &str, clock: &mut ReplicaClock) -> Result<WordOp> {
        if key == WORD_ROOT {
            return Err(precondition("the root cannot be removed"));
        }
        let conn = self.connected();
        let entry = conn
            .entries
            .iter()
            .find(|r| r.path.key() == key)
            .ok_or_else(|| precondition(format!("{key} is not in the tree")))?;
        let top = entry.path.clone();
        let mut issuer = Issuer::new(clock);
        let mut op = WordOp {
            stamp: issuer.stamp(),
            paths: Vec::new(),
            rmv_prefix: None,
        };
        if self.uses_prefix_message() {
            op.rmv_prefix = Some(top);
            self.apply(&op);
            return Ok(op);
        }
        for (src, drawn) in &conn.render_of {
            if drawn.starts_with(&top) {
                op.paths.extend(self.paths.prepare_rmv(src, &mut issuer));
            }
        }
        self.apply(&op);
        Ok(op)
    }

    fn apply_path(&mut self, op: &SetOp<Path>, applied: &mut Vec<SetOp<Path>>) {
        let before = self.paths.contains(&op.element);
        self.paths.apply(op);
        applied.push(op.clone());
        if op.verb == Verb::Add {
            self.history.insert(op.element.clone());
            if self.paths.contains(&op.element) && self.retired.iter().any(|r| op.element.starts_with(r)) {
                let sop = removal(op.element.clone());
                self.paths.apply(&sop);
                applied.push(sop);
            }
        }
        let after = self.paths.contains(&op.element);
        self.apply_path_change(&op.element, before, after);
    }

    fn apply_path_change(&mut self, p: &Path, before: bool, after: bool) {
        if let Some(c) = self.cache.as_mut() {
            match (before, after) {
                (false, true) => c.insert(p),
                (true, false) => c.remove(p),
                _ => {}
            }
        }
    }

    /// Applies a local or remote operation; returns the set operations run.
    pub fn apply(&mut self, op: &WordOp) -> Vec<SetOp<Path>> {
        let mut applied = Vec::new();
        for p in &op.paths {
            self.apply_path(p, &mut applied);
        }
        if let Some(top) = &op.rmv_prefix {
            self.retired.insert(top.clone());
            let doomed: Vec<Path> = self
                .paths
                .present()
                .filter(|p| p.starts_with(top))
                .cloned()
                .collect();
            for p in doomed {
                self.apply_path(&removal(p), &mut applied);
            }
        }
        applied
    }

    pub fn merge(&mut self, other: &WordTree) -> Result<()> {
        if self.config != other.config {
            return Err(Error::KindMismatch("tree configurations differ".into()));
        }
        let before = self.paths.lookup();
        self.paths.merge(&other.paths)?;
        self.history.extend(other.history.iter().cloned());
        self.retired.extend(other.retired.iter().cloned());
        if let Some(c) = self.cache.as_mut() {
            let after = self.paths.lookup();
            for p in before.difference(&after) {
                c.remove(p);
            }
            for p in after.difference(&before) {
                c.insert(p);
            }
        }
        Ok(())
    }

    pub fn to_canonical(&self) -> String {
        wire::to_canonical(&WordTreeWire {
            config: self.config,
            paths: self.paths.clone(),
            history: self.history.clone(),
            retired: self.retired.clone(),
        })
    }

    pub fn from_canonical(text: &str) -> Result<Self> {
        let w: WordTreeWire = wire::from_canonical(text)?;
        let mut t = WordTree::new(w.config)?;
        t.paths = w.paths;
        t.history = w.history;
        t.retired = w.retired;
        if let Some(c) = t.cache.as_mut() {
            for p in t.paths.present() {
                c.insert(p);
            }
        }
        Ok(t)
    }
}

fn removal<E>(element: E) -> SetOp<E> {
    SetOp {
        verb: Verb::Rmv,
        element,
        meta: OpMeta::None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::ReplicaId;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Rep {
        tree: WordTree,
        clock: ReplicaClock,
        rng: ChaCha8Rng,
    }

    impl Rep {
        fn new(id: u32, cfg: WordConfig) -> Self {
            Rep {
                tree: WordTree::new(cfg).unwrap(),
                clock: ReplicaClock::new(ReplicaId(id)),
                rng: ChaCha8Rng::seed_from_u64(id as u64),
            }
        }

        fn add(&mut self, a: &str, p: &str) -> WordOp {
            self.tree.gen_add(a, p, None, &mut self.clock, &mut self.rng).unwrap()
        }

        fn rmv(&mut self, k: &str) -> WordOp {
            self.tree.gen_rmv(k, &mut self.clock).unwrap()
        }

        fn recv(&mut self, op: &WordOp) {
            self.clock.observe(op.stamp);
            self.tree.apply(op);
        }

        fn dump(&self) -> String {
            let t = self.tree.lookup();
            assert_eq!(t, self.tree.batch_lookup());
            t.dump()
        }
    }

    #[test]
    fn path_order_is_by_length() {
        let mut v = [Path::from_atoms("b"), Path::from_atoms("ab"), Path::root(), Path::from_atoms("a")];
        v.sort();
        let s: Vec<_> = v.iter().map(Path::compact).collect();
        assert_eq!(s, ["ε", "a", "b", "ab"]);
        assert_eq!(Path::from_atoms("ab").key(), "a/b");
    }

    #[test]
    fn add_remove_and_preconditions() {
        let mut r = Rep::new(1, WordConfig::new(SetKind::OrSet, Flavor::OpBased, ConnectionPolicy::Skip));
        r.add("a", "/");
        r.add("b", "a");
        assert_eq!(r.dump(), "/\n  a\n    a/b\n");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for (atom, parent) in [("b", "a"), ("c", "x"), ("", "/"), ("x/y", "/")] {
            assert!(matches!(
                r.tree.gen_add(atom, parent, None, &mut r.clock, &mut rng),
                Err(Error::PreconditionViolation(_))
            ));
        }
        let op = r.rmv("a");
        assert_eq!(op.paths.len(), 2);
        assert_eq!(r.dump(), "/\n");
    }

    #[test]
    fn concurrent_remove_and_add_under_each_policy() {
        let expected = [
            (ConnectionPolicy::Skip, "/\n"),
            (ConnectionPolicy::Reappear, "/\n  m [ghost]\n    m/n\n"),
            (ConnectionPolicy::Root, "/\n  n [from m/n]\n"),
            (ConnectionPolicy::Compact, "/\n  n [from m/n]\n"),
        ];
        for (policy, dump) in expected {
            let c = WordConfig::new(SetKind::OrSet, Flavor::OpBased, policy);
            let mut r1 = Rep::new(1, c);
            let mut r2 = Rep::new(2, c);
            let a = r1.add("m", "/");
            r2.recv(&a);
            let add = r2.add("n", "m");
            let rmv = r1.rmv("m");
            r1.recv(&add);
            r2.recv(&rmv);
            assert_eq!(r1.dump(), dump, "{policy}");
            assert_eq!(r2.dump(), dump, "{policy}");
        }
    }

    #[test]
    fn two_phase_prefix_message() {
        let c = WordConfig::new(SetKind::TwoPSet, Flavor::OpBased, ConnectionPolicy::Skip);
        let mut r1 = Rep::new(1, c);
        let mut r2 = Rep::new(2, c);
        let a = r1.add("a", "/");
        r2.recv(&a);
        let b = r2.add("b", "a");
        let rmv = r1.rmv("a");
        assert_eq!(rmv.rmv_prefix, Some(Path::from_atoms("a")));
        r1.recv(&b);
        r2.recv(&rmv);
        assert_eq!(r1.dump(), "/\n");
        assert_eq!(r2.dump(), "/\n");
        assert!(r1.tree.path_set().lookup().is_empty());
        assert_eq!(r1.tree, r2.tree);
    }

    #[test]
    fn state_merge_and_roundtrip() {
        let c = WordConfig::new(SetKind::LwwSet, Flavor::StateBased, ConnectionPolicy::Reappear);
        let mut r1 = Rep::new(1, c);
        let mut r2 = Rep::new(2, c);
        r1.add("a", "/");
        r2.tree.merge(&r1.tree).unwrap();
        r2.add("b", "a");
        r1.rmv("a");
        r1.tree.merge(&r2.tree).unwrap();
        r2.tree.merge(&r1.tree).unwrap();
        assert_eq!(r1.dump(), r2.dump());
        let text = r1.tree.to_canonical();
        let back = WordTree::from_canonical(&text).unwrap();
        assert_eq!(back, r1.tree);
        assert_eq!(back.lookup(), r1.tree.lookup());
    }

    #[test]
    fn wootr_steps_order_siblings() {
        let c = WordConfig::new(SetKind::OrSet, Flavor::OpBased, ConnectionPolicy::Skip).with_pi(PiMode::Wootr);
        let mut r = Rep::new(1, c);
        r.add("a", "/");
        r.add("c", "/");
        r.tree.gen_add("b", "/", Some(1), &mut r.clock, &mut r.rng).unwrap();
        let t = r.tree.lookup();
        let labels: Vec<_> = t.children("/").iter().map(|k| t.get(k).unwrap().label.clone()).collect();
        assert_eq!(labels, ["a", "b", "c"]);
        assert!(WordTree::new(WordConfig::new(SetKind::GSet, Flavor::OpBased, ConnectionPolicy::Skip).with_pi(PiMode::Wootr)).is_err());
    }
}
