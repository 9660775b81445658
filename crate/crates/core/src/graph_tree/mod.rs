//! Trees as a pair of set CRDTs, nodes and edges, or as edges alone.
//!
//! The lookup runs in three stages: the set lookups, a connection policy
//! producing a rooted graph, and a mapping policy producing a tree.

pub mod connect;
pub mod incremental;
pub mod mapping;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::causal::{LamportTimestamp, ReplicaClock, Tag};
use crate::error::{precondition, Error, Result};
use crate::ordered::{position_between, Position};
use crate::set_crdt::{Flavor, Issuer, OpMeta, SetKind, SetOp, SetState, Verb};
use crate::tree::{ConnectionPolicy, Edge, LookupTree, MappingPolicy, NodeId, NodeKey, PiMode};
use crate::wire::{self, map_pairs};

pub use connect::{connect, Connector};
pub use incremental::SkipIndex;
pub use mapping::{map_to_tree, shortest, max_arborescence, Mapped, DEFAULT_SEVERAL_CAP};

/// Every node and edge ever added, kept for the reappear and compact
/// policies.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct History {
    pub nodes: BTreeSet<NodeKey>,
    pub edges: BTreeSet<Edge>,
}

impl History {
    pub fn merge(&mut self, other: &History) {
        self.nodes.extend(other.nodes.iter().cloned());
        self.edges.extend(other.edges.iter().cloned());
    }
}

/// Output of a connection policy: every node is reachable from the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedGraph {
    pub nodes: BTreeSet<NodeKey>,
    pub edges: BTreeSet<Edge>,
    /// Nodes recreated from the history.
    pub ghosts: BTreeSet<NodeKey>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub kind: SetKind,
    pub flavor: Flavor,
    pub connect: ConnectionPolicy,
    pub map: MappingPolicy,
    pub pi: PiMode,
    pub several_cap: usize,
    /// Out-edge scan order of the shortest policy. Anything but the default
    /// breaks convergence and is only used to check that the harness notices.
    #[serde(default)]
    pub tie_break: TieBreak,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieBreak {
    #[default]
    Ascending,
    Descending,
}

impl GraphConfig {
    pub fn new(kind: SetKind, flavor: Flavor, connect: ConnectionPolicy, map: MappingPolicy) -> Self {
        GraphConfig {
            kind,
            flavor,
            connect,
            map,
            pi: PiMode::Unordered,
            several_cap: DEFAULT_SEVERAL_CAP,
            tie_break: TieBreak::Ascending,
        }
    }

    pub fn with_pi(mut self, pi: PiMode) -> Self {
        self.pi = pi;
        self
    }

    /// Rejects combinations whose policies need metadata the sets lack.
    pub fn check(&self, edge_only: bool) -> Result<()> {
        let k = self.kind;
        let bad = |m: &str| Err(Error::IllegalCombo(m.to_owned()));
        match self.map {
            MappingPolicy::OneNewer if !matches!(k, SetKind::LwwSet | SetKind::OrSet) => {
                return bad("the newer policy needs timestamped edges (LWW or OR sets)")
            }
            MappingPolicy::OneHigher if !matches!(k, SetKind::CSet | SetKind::OrSet) => {
                return bad("the higher policy needs counted edges (C or OR sets)")
            }
            _ => {}
        }
        match self.pi {
            PiMode::NodeUpi if edge_only => bad("node positions need a node set"),
            PiMode::NodeUpi if k != SetKind::TwoPSet => {
                bad("node positions give each node a fresh identity and need two-phase sets")
            }
            PiMode::EdgeUpi if edge_only && k != SetKind::TwoPSet => {
                bad("edge positions on edge trees need a two-phase edge set")
            }
            PiMode::Wootr if !matches!(k, SetKind::LwwSet | SetKind::CSet | SetKind::OrSet) => {
                bad("WOOTR positions need a set that allows re-insertion")
            }
            _ => Ok(()),
        }
    }
}

/// A tree operation: the set operations it is made of, sharing one stamp.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphOp {
    pub stamp: LamportTimestamp,
    pub nodes: Vec<SetOp<NodeKey>>,
    pub edges: Vec<SetOp<Edge>>,
    /// Constant-size subtree removal, expanded by each receiver.
    pub rmv_subtree: Option<NodeKey>,
}

/// Set operations actually applied by one tree operation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Applied {
    pub nodes: Vec<SetOp<NodeKey>>,
    pub edges: Vec<SetOp<Edge>>,
}

#[derive(Default)]
struct Changes {
    nodes_in: Vec<NodeKey>,
    nodes_out: Vec<NodeKey>,
    edges_in: Vec<Edge>,
    edges_out: Vec<Edge>,
    applied: Applied,
}

/// Replica state of a graph tree (node and edge sets) or an edge tree
/// (edge set only).
#[derive(Clone, Debug)]
pub struct GraphTree {
    config: GraphConfig,
    nodes: Option<SetState<NodeKey>>,
    edges: SetState<Edge>,
    history: History,
    tag_clock: BTreeMap<Tag, LamportTimestamp>,
    /// Nodes removed by subtree messages; edges added below them later are
    /// removed on arrival.
    retired: BTreeSet<NodeKey>,
    index: Option<SkipIndex>,
}

impl PartialEq for GraphTree {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.nodes == other.nodes
            && self.edges == other.edges
            && self.history == other.history
            && self.tag_clock == other.tag_clock
            && self.retired == other.retired
    }
}

#[derive(Serialize, Deserialize)]
struct GraphTreeWire {
    config: GraphConfig,
    nodes: Option<SetState<NodeKey>>,
    edges: SetState<Edge>,
    history: History,
    #[serde(with = "map_pairs")]
    tag_clock: BTreeMap<Tag, LamportTimestamp>,
    retired: BTreeSet<NodeKey>,
}

impl GraphTree {
    pub fn new(config: GraphConfig) -> Result<Self> {
        Self::build(config, false)
    }

    /// Edge-only representation: a node exists iff some edge points to it.
    pub fn new_edge_only(config: GraphConfig) -> Result<Self> {
        Self::build(config, true)
    }

    fn build(config: GraphConfig, edge_only: bool) -> Result<Self> {
        config.check(edge_only)?;
        let index = (config.kind == SetKind::TwoPSet && config.connect == ConnectionPolicy::Skip)
            .then(|| SkipIndex::new(edge_only));
        Ok(GraphTree {
            config,
            nodes: (!edge_only).then(|| SetState::new(config.kind, config.flavor)),
            edges: SetState::new(config.kind, config.flavor),
            history: History::default(),
            tag_clock: BTreeMap::new(),
            retired: BTreeSet::new(),
            index,
        })
    }

    pub fn config(&self) -> &GraphConfig {
        &self.config
    }

    pub fn is_edge_only(&self) -> bool {
        self.nodes.is_none()
    }

    pub fn node_set(&self) -> Option<&SetState<NodeKey>> {
        self.nodes.as_ref()
    }

    pub fn edge_set(&self) -> &SetState<Edge> {
        &self.edges
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    /// Work counter of the incremental skip index, when one is maintained.
    pub fn index_work(&self) -> Option<u64> {
        self.index.as_ref().map(|ix| ix.touched)
    }

    /// `(V_L, E_L)`: the raw set lookups. Edge trees derive their nodes from
    /// edge targets.
    pub fn set_lookup(&self) -> (BTreeSet<NodeKey>, BTreeSet<Edge>) {
        let edges = self.edges.lookup();
        let nodes = match &self.nodes {
            Some(n) => n.lookup(),
            None => edges.iter().map(|e| e.child.clone()).collect(),
        };
        (nodes, edges)
    }

    pub fn rooted_graph(&self) -> RootedGraph {
        let (v, e) = self.set_lookup();
        connect(&v, &e, &self.history, self.config.connect)
    }

    fn weight(&self, e: &Edge) -> i128 {
        if !self.edges.contains(e) {
            return 0;
        }
        match (self.config.map, self.config.kind) {
            (MappingPolicy::OneNewer, SetKind::LwwSet) => {
                self.edges.lww_stamp(e).map_or(0, |s| s.rank())
            }
            (MappingPolicy::OneNewer, SetKind::OrSet) => self
                .edges
                .live_tags(e)
                .iter()
                .filter_map(|t| self.tag_clock.get(t))
                .map(|s| s.rank())
                .max()
                .unwrap_or(0),
            (MappingPolicy::OneHigher, SetKind::CSet) => self.edges.counter(e) as i128,
            (MappingPolicy::OneHigher, SetKind::OrSet) => self.edges.live_tags(e).len() as i128,
            _ => 0,
        }
    }

    /// Full recomputation of the lookup tree.
    pub fn render(&self) -> Result<Mapped> {
        let g = self.rooted_graph();
        if self.config.map == MappingPolicy::OneShortest && self.config.tie_break == TieBreak::Descending {
            return Ok(mapping::shortest(&g, true));
        }
        map_to_tree(&g, self.config.map, &|e| self.weight(e), self.config.several_cap)
    }

    pub fn batch_lookup(&self) -> Result<LookupTree> {
        self.render().map(|m| m.tree)
    }

    /// The client view, served from the incremental index when available.
    pub fn lookup(&self) -> Result<LookupTree> {
        match &self.index {
            Some(ix) if !ix.is_broken() => {
                Ok(ix.render(self.config.map == MappingPolicy::Several))
            }
            _ => self.batch_lookup(),
        }
    }

    fn uses_subtree_message(&self) -> bool {
        self.config.kind == SetKind::TwoPSet
            && self.config.flavor == Flavor::OpBased
            && self.config.connect == ConnectionPolicy::Skip
    }

    /// Adds a node labelled `label` under the instance `parent`, at `index`
    /// among its children (last when `None`).
    pub fn gen_add<R: Rng + ?Sized>(
        &mut self,
        label: &str,
        parent: &str,
        index: Option<usize>,
        clock: &mut ReplicaClock,
        rng: &mut R,
    ) -> Result<GraphOp> {
        let mapped = self.render()?;
        let parent_node = mapped
            .nodes
            .get(parent)
            .cloned()
            .ok_or_else(|| precondition(format!("parent {parent} is not in the tree")))?;
        if label == crate::tree::ROOT || label.is_empty() {
            return Err(precondition(format!("{label:?} cannot be used as a node label")));
        }
        let node_upi = self.config.pi == PiMode::NodeUpi;
        if !node_upi && mapped.nodes.values().any(|n| n.id.0 == label) {
            return Err(precondition(format!("{label} is already in the tree")));
        }
        if self.config.kind == SetKind::TwoPSet && !node_upi && self.ever_added(label) {
            return Err(precondition(format!(
                "{label} was already added once and two-phase sets cannot add it again"
            )));
        }
        let siblings: Vec<Position> = mapped
            .tree
            .children(parent)
            .iter()
            .map(|c| mapped.tree.get(c).unwrap().position.clone())
            .collect();
        let index = index.unwrap_or(siblings.len());
        let pos = position_between(self.config.pi, label, &siblings, index, clock, rng)?;
        let (child, edge_pos) = match pos {
            Position::Upi(u) if node_upi => (
                NodeKey {
                    id: NodeId::new(label),
                    upi: Some(u),
                },
                Position::None,
            ),
            p => (NodeKey::plain(label), p),
        };
        let edge = Edge::with_pos(parent_node, child.clone(), edge_pos);
        let mut issuer = Issuer::new(clock);
        let mut op = GraphOp {
            stamp: issuer.stamp(),
            nodes: Vec::new(),
            edges: Vec::new(),
            rmv_subtree: None,
        };
        if let Some(nodes) = &self.nodes {
            op.nodes.push(nodes.prepare_add(&child, &mut issuer));
        }
        op.edges.push(self.edges.prepare_add(&edge, &mut issuer));
        self.apply(&op);
        Ok(op)
    }

    fn ever_added(&self, label: &str) -> bool {
        self.history.nodes.iter().any(|n| n.id.0 == label)
            || self.history.edges.iter().any(|e| e.child.id.0 == label)
    }

    /// Removes the instance `key` with its whole subtree. Under the several
    /// policy every copy of the node goes.
    pub fn gen_rmv(&mut self, key: &str, clock: &mut ReplicaClock) -> Result<GraphOp> {
        let mapped = self.render()?;
        let target = mapped
            .nodes
            .get(key)
            .cloned()
            .ok_or_else(|| precondition(format!("{key} is not in the tree")))?;
        if target.is_root() {
            return Err(precondition("the root cannot be removed"));
        }
        let mut issuer = Issuer::new(clock);
        let mut op = GraphOp {
            stamp: issuer.stamp(),
            nodes: Vec::new(),
            edges: Vec::new(),
            rmv_subtree: None,
        };
        if self.uses_subtree_message() {
            op.rmv_subtree = Some(target);
            self.apply(&op);
            return Ok(op);
        }
        let mut removed: BTreeSet<NodeKey> = BTreeSet::new();
        for (k, n) in &mapped.nodes {
            if *n == target {
                for d in mapped.tree.subtree(k) {
                    removed.insert(mapped.nodes[&d].clone());
                }
            }
        }
        if let Some(nodes) = &self.nodes {
            for n in &removed {
                op.nodes.extend(nodes.prepare_rmv(n, &mut issuer));
            }
        }
        for e in self.edges.present() {
            if removed.contains(&e.parent) || removed.contains(&e.child) {
                op.edges.extend(self.edges.prepare_rmv(e, &mut issuer));
            }
        }
        self.apply(&op);
        Ok(op)
    }

    /// Nodes reachable from `n` over live edges, with the live edges that
    /// touch them.
    fn payload_subtree(&self, n: &NodeKey) -> (BTreeSet<NodeKey>, Vec<Edge>) {
        let live: Vec<&Edge> = self.edges.present().collect();
        let mut reach = BTreeSet::from([n.clone()]);
        let mut stack = vec![n.clone()];
        while let Some(x) = stack.pop() {
            for e in &live {
                if e.parent == x && reach.insert(e.child.clone()) {
                    stack.push(e.child.clone());
                }
            }
        }
        let edges = live
            .into_iter()
            .filter(|e| reach.contains(&e.parent) || reach.contains(&e.child))
            .cloned()
            .collect();
        (reach, edges)
    }

    fn apply_node(&mut self, op: &SetOp<NodeKey>, stamp: LamportTimestamp, ch: &mut Changes) {
        let nodes = self.nodes.as_mut().expect("node operations need a node set");
        let before = nodes.contains(&op.element);
        nodes.apply(op);
        ch.applied.nodes.push(op.clone());
        if op.verb == Verb::Add {
            self.history.nodes.insert(op.element.clone());
            record_tags(&mut self.tag_clock, &op.meta, stamp);
            if self.retired.contains(&op.element) {
                let sop = removal(op.element.clone());
                self.nodes.as_mut().unwrap().apply(&sop);
                ch.applied.nodes.push(sop);
            }
        }
        let after = self.nodes.as_ref().unwrap().contains(&op.element);
        match (before, after) {
            (false, true) => ch.nodes_in.push(op.element.clone()),
            (true, false) => ch.nodes_out.push(op.element.clone()),
            _ => {}
        }
    }

    fn apply_edge(&mut self, op: &SetOp<Edge>, stamp: LamportTimestamp, ch: &mut Changes) {
        let before = self.edges.contains(&op.element);
        self.edges.apply(op);
        ch.applied.edges.push(op.clone());
        let mut cascade = None;
        if op.verb == Verb::Add {
            self.history.edges.insert(op.element.clone());
            record_tags(&mut self.tag_clock, &op.meta, stamp);
            let e = &op.element;
            if self.retired.contains(&e.parent) || self.retired.contains(&e.child) {
                let sop = removal(e.clone());
                self.edges.apply(&sop);
                ch.applied.edges.push(sop);
                if self.retired.contains(&e.parent) {
                    cascade = Some(e.child.clone());
                }
            }
        }
        let after = self.edges.contains(&op.element);
        match (before, after) {
            (false, true) => ch.edges_in.push(op.element.clone()),
            (true, false) => ch.edges_out.push(op.element.clone()),
            _ => {}
        }
        if let Some(n) = cascade {
            self.retire(&n, stamp, ch);
        }
    }

    /// Removes `n` and everything reachable from it over live edges, and
    /// remembers the nodes so that late additions below them go too.
    fn retire(&mut self, n: &NodeKey, stamp: LamportTimestamp, ch: &mut Changes) {
        let (reach, edges) = self.payload_subtree(n);
        self.retired.extend(reach.iter().cloned());
        if self.nodes.is_some() {
            for x in reach {
                if self.nodes.as_ref().unwrap().contains(&x) {
                    self.apply_node(&removal(x), stamp, ch);
                }
            }
        }
        for e in edges {
            self.apply_edge(&removal(e), stamp, ch);
        }
    }

    /// Applies a local or remote operation and returns the set operations
    /// that were applied.
    pub fn apply(&mut self, op: &GraphOp) -> Applied {
        let mut ch = Changes::default();
        for n in &op.nodes {
            self.apply_node(n, op.stamp, &mut ch);
        }
        for e in &op.edges {
            self.apply_edge(e, op.stamp, &mut ch);
        }
        if let Some(n) = &op.rmv_subtree {
            self.retire(n, op.stamp, &mut ch);
        }
        let applied = std::mem::take(&mut ch.applied);
        self.feed_index(ch);
        applied
    }

    fn feed_index(&mut self, ch: Changes) {
        let Some(ix) = self.index.as_mut() else {
            return;
        };
        for e in &ch.edges_out {
            ix.remove_edge(e);
        }
        for n in &ch.nodes_out {
            ix.remove_node(n);
        }
        for n in &ch.nodes_in {
            ix.add_node(n);
        }
        for e in &ch.edges_in {
            ix.add_edge(e);
        }
        if ix.is_broken() {
            self.index = None;
        }
    }

    /// Joins another state-based replica state into this one.
    pub fn merge(&mut self, other: &GraphTree) -> Result<()> {
        if self.config != other.config || self.is_edge_only() != other.is_edge_only() {
            return Err(Error::KindMismatch("tree configurations differ".into()));
        }
        let (v0, e0) = self.set_lookup();
        if let (Some(a), Some(b)) = (self.nodes.as_mut(), other.nodes.as_ref()) {
            a.merge(b)?;
        }
        self.edges.merge(&other.edges)?;
        self.history.merge(&other.history);
        for (t, s) in &other.tag_clock {
            self.tag_clock.insert(*t, *s);
        }
        self.retired.extend(other.retired.iter().cloned());
        if self.index.is_some() {
            let (v1, e1) = self.set_lookup();
            let ch = Changes {
                nodes_in: v1.difference(&v0).cloned().collect(),
                nodes_out: v0.difference(&v1).cloned().collect(),
                edges_in: e1.difference(&e0).cloned().collect(),
                edges_out: e0.difference(&e1).cloned().collect(),
                ..Changes::default()
            };
            let ch = if self.is_edge_only() {
                Changes {
                    nodes_in: Vec::new(),
                    nodes_out: Vec::new(),
                    ..ch
                }
            } else {
                ch
            };
            self.feed_index(ch);
        }
        Ok(())
    }

    pub fn to_canonical(&self) -> String {
        wire::to_canonical(&GraphTreeWire {
            config: self.config,
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
            history: self.history.clone(),
            tag_clock: self.tag_clock.clone(),
            retired: self.retired.clone(),
        })
    }

    pub fn from_canonical(text: &str) -> Result<Self> {
        let w: GraphTreeWire = wire::from_canonical(text)?;
        let mut t = Self::build(w.config, w.nodes.is_none())?;
        t.nodes = w.nodes;
        t.edges = w.edges;
        t.history = w.history;
        t.tag_clock = w.tag_clock;
        t.retired = w.retired;
        if t.index.is_some() {
            let (v, e) = t.set_lookup();
            let ch = Changes {
                nodes_in: if t.is_edge_only() { Vec::new() } else { v.into_iter().collect() },
                edges_in: e.into_iter().collect(),
                ..Changes::default()
            };
            t.feed_index(ch);
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

pub(crate) fn record_tags(
    clock: &mut BTreeMap<Tag, LamportTimestamp>,
    meta: &OpMeta,
    stamp: LamportTimestamp,
) {
    if let OpMeta::Tags(tags) = meta {
        for t in tags {
            clock.insert(*t, stamp);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::ReplicaId;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Rep {
        tree: GraphTree,
        clock: ReplicaClock,
        rng: ChaCha8Rng,
    }

    impl Rep {
        fn new(id: u32, cfg: GraphConfig) -> Self {
            Rep {
                tree: GraphTree::new(cfg).unwrap(),
                clock: ReplicaClock::new(ReplicaId(id)),
                rng: ChaCha8Rng::seed_from_u64(id as u64),
            }
        }

        fn add(&mut self, n: &str, p: &str) -> GraphOp {
            self.tree.gen_add(n, p, None, &mut self.clock, &mut self.rng).unwrap()
        }

        fn rmv(&mut self, n: &str) -> GraphOp {
            self.tree.gen_rmv(n, &mut self.clock).unwrap()
        }

        fn recv(&mut self, op: &GraphOp) {
            self.clock.observe(op.stamp);
            self.tree.apply(op);
        }

        fn dump(&self) -> String {
            self.tree.lookup().unwrap().dump()
        }
    }

    fn cfg(kind: SetKind, c: ConnectionPolicy, m: MappingPolicy) -> GraphConfig {
        GraphConfig::new(kind, Flavor::OpBased, c, m)
    }

    #[test]
    fn add_and_preconditions() {
        let mut r = Rep::new(1, cfg(SetKind::OrSet, ConnectionPolicy::Skip, MappingPolicy::Zero));
        r.add("a", "root");
        assert_eq!(r.dump(), "root\n  a\n");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            r.tree.gen_add("a", "root", None, &mut r.clock, &mut rng),
            Err(Error::PreconditionViolation(_))
        ));
        assert!(matches!(
            r.tree.gen_add("c", "b", None, &mut r.clock, &mut rng),
            Err(Error::PreconditionViolation(_))
        ));
        assert!(matches!(
            r.tree.gen_rmv("root", &mut r.clock),
            Err(Error::PreconditionViolation(_))
        ));
    }

    #[test]
    fn remove_carries_subtree() {
        let mut r = Rep::new(1, cfg(SetKind::OrSet, ConnectionPolicy::Skip, MappingPolicy::Zero));
        r.add("a", "root");
        r.add("b", "a");
        let op = r.rmv("a");
        let nodes: Vec<_> = op.nodes.iter().map(|o| o.element.to_string()).collect();
        let edges: Vec<_> = op.edges.iter().map(|o| o.element.to_string()).collect();
        assert_eq!(nodes, ["a", "b"]);
        assert_eq!(edges, ["(a,b)", "(root,a)"]);
        assert_eq!(r.dump(), "root\n");
    }

    #[test]
    fn cross_adds_produce_a_two_cycle() {
        let c = cfg(SetKind::OrSet, ConnectionPolicy::Skip, MappingPolicy::Several);
        let mut r1 = Rep::new(1, c);
        let mut r2 = Rep::new(2, c);
        let a1 = r1.add("x", "root");
        let a2 = r1.add("y", "x");
        let b1 = r2.add("y", "root");
        let b2 = r2.add("x", "y");
        for op in [&b1, &b2] {
            r1.recv(op);
        }
        for op in [&a1, &a2] {
            r2.recv(op);
        }
        let (_, e) = r1.tree.set_lookup();
        let edges: Vec<_> = e.iter().map(|e| e.to_string()).collect();
        assert_eq!(edges, ["(root,x)", "(root,y)", "(x,y)", "(y,x)"]);
        assert_eq!(r1.dump(), r2.dump());
        assert_eq!(r1.dump(), "root\n  x\n    x/y\n  y\n    y/x\n");
    }

    #[test]
    fn lww_concurrent_add_and_subtree_remove() {
        let c = cfg(SetKind::LwwSet, ConnectionPolicy::Skip, MappingPolicy::Zero);
        let mut r1 = Rep::new(1, c);
        let mut r2 = Rep::new(2, c);
        let a = r1.add("m", "root");
        r2.recv(&a);
        let add = r2.add("n", "m");
        r1.clock.observe(LamportTimestamp::new(5, ReplicaId(9)));
        let rmv = r1.rmv("m");
        r1.recv(&add);
        r2.recv(&rmv);
        let (v, e) = r1.tree.set_lookup();
        assert!(e.contains(&Edge::new(NodeKey::plain("m"), NodeKey::plain("n"))));
        assert!(!v.contains(&NodeKey::plain("m")));
        assert_eq!(r1.dump(), "root\n");
        assert_eq!(r2.dump(), "root\n");
    }

    #[test]
    fn orphan_policies_after_concurrent_remove() {
        let expected = [
            (ConnectionPolicy::Skip, "root\n"),
            (ConnectionPolicy::Root, "root\n  n\n"),
            (ConnectionPolicy::Reappear, "root\n  m [ghost]\n    n\n"),
            (ConnectionPolicy::Compact, "root\n  n\n"),
        ];
        for (policy, dump) in expected {
            let c = cfg(SetKind::OrSet, policy, MappingPolicy::OneShortest);
            let mut r1 = Rep::new(1, c);
            let mut r2 = Rep::new(2, c);
            let a = r1.add("m", "root");
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
    fn two_phase_subtree_message_and_index() {
        let c = cfg(SetKind::TwoPSet, ConnectionPolicy::Skip, MappingPolicy::Zero);
        let mut r1 = Rep::new(1, c);
        let mut r2 = Rep::new(2, c);
        let a = r1.add("a", "root");
        r2.recv(&a);
        let b = r2.add("b", "a");
        let rmv = r1.rmv("a");
        assert_eq!(rmv.rmv_subtree, Some(NodeKey::plain("a")));
        r1.recv(&b);
        r2.recv(&rmv);
        for r in [&r1, &r2] {
            assert_eq!(r.dump(), "root\n");
            assert_eq!(r.tree.batch_lookup().unwrap().dump(), "root\n");
        }
        assert_eq!(r1.tree, r2.tree);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(r1.tree.gen_add("a", "root", None, &mut r1.clock, &mut rng).is_err());
    }

    #[test]
    fn node_upi_keeps_concurrent_twins() {
        let c = cfg(SetKind::TwoPSet, ConnectionPolicy::Skip, MappingPolicy::Zero).with_pi(PiMode::NodeUpi);
        let mut r1 = Rep::new(1, c);
        let mut r2 = Rep::new(2, c);
        let a = r1.add("Z", "root");
        let b = r2.add("Z", "root");
        r1.recv(&b);
        r2.recv(&a);
        let t = r1.tree.lookup().unwrap();
        assert_eq!(t.children("root").len(), 2);
        assert_eq!(t.dump(), r2.dump());
    }

    #[test]
    fn illegal_configurations() {
        let bad = [
            GraphConfig::new(SetKind::GSet, Flavor::OpBased, ConnectionPolicy::Skip, MappingPolicy::OneNewer),
            GraphConfig::new(SetKind::LwwSet, Flavor::OpBased, ConnectionPolicy::Skip, MappingPolicy::OneHigher),
            cfg(SetKind::OrSet, ConnectionPolicy::Skip, MappingPolicy::Zero).with_pi(PiMode::NodeUpi),
            cfg(SetKind::TwoPSet, ConnectionPolicy::Skip, MappingPolicy::Zero).with_pi(PiMode::Wootr),
        ];
        for c in bad {
            assert!(matches!(GraphTree::new(c), Err(Error::IllegalCombo(_))), "{c:?}");
        }
    }

    #[test]
    fn canonical_state_roundtrip() {
        let c = GraphConfig::new(SetKind::OrSet, Flavor::StateBased, ConnectionPolicy::Compact, MappingPolicy::OneNewer);
        let mut r = Rep::new(1, c);
        r.add("a", "root");
        r.add("b", "a");
        let text = r.tree.to_canonical();
        let back = GraphTree::from_canonical(&text).unwrap();
        assert_eq!(back, r.tree);
        assert_eq!(back.to_canonical(), text);
    }
}
