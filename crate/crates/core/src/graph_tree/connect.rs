//! Connection policies: turn a set lookup `(V_L, E_L)` whose nodes may be
//! cut off from the root into a rooted graph.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{History, RootedGraph};
use crate::ordered::Position;
use crate::tree::{ConnectionPolicy, Edge, NodeKey};

fn adjacency(edges: &BTreeSet<Edge>) -> BTreeMap<&NodeKey, Vec<&Edge>> {
    let mut out: BTreeMap<&NodeKey, Vec<&Edge>> = BTreeMap::new();
    for e in edges {
        out.entry(&e.parent).or_default().push(e);
    }
    out
}

/// Nodes reachable from the root over `edges`, restricted to `nodes`.
pub fn reachable(nodes: &BTreeSet<NodeKey>, edges: &BTreeSet<Edge>) -> BTreeSet<NodeKey> {
    let adj = adjacency(edges);
    let root = NodeKey::root();
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(root.clone());
    queue.push_back(root);
    while let Some(u) = queue.pop_front() {
        for e in adj.get(&u).into_iter().flatten() {
            if nodes.contains(&e.child) && !seen.contains(&e.child) {
                seen.insert(e.child.clone());
                queue.push_back(e.child.clone());
            }
        }
    }
    seen
}

fn restrict(nodes: BTreeSet<NodeKey>, edges: &BTreeSet<Edge>, ghosts: BTreeSet<NodeKey>) -> RootedGraph {
    let edges = edges
        .iter()
        .filter(|e| nodes.contains(&e.parent) && nodes.contains(&e.child))
        .cloned()
        .collect();
    let ghosts = ghosts.intersection(&nodes).cloned().collect();
    RootedGraph {
        nodes,
        edges,
        ghosts,
    }
}

/// Lookup-time memo of the connected ancestors of removed or orphan nodes.
pub struct Connector<'a> {
    connected: &'a BTreeSet<NodeKey>,
    fathers: BTreeMap<&'a NodeKey, Vec<&'a NodeKey>>,
    memo: BTreeMap<NodeKey, BTreeSet<NodeKey>>,
}

impl<'a> Connector<'a> {
    pub fn new(connected: &'a BTreeSet<NodeKey>, history: &'a History) -> Self {
        let mut fathers: BTreeMap<&NodeKey, Vec<&NodeKey>> = BTreeMap::new();
        for e in &history.edges {
            fathers.entry(&e.child).or_default().push(&e.parent);
        }
        Connector {
            connected,
            fathers,
            memo: BTreeMap::new(),
        }
    }

    /// Connected nodes with a historical path to `x` whose inner nodes are
    /// all disconnected. Cycles in the history are walked once.
    pub fn get_connected(&mut self, x: &NodeKey) -> BTreeSet<NodeKey> {
        if let Some(m) = self.memo.get(x) {
            return m.clone();
        }
        let mut out = BTreeSet::new();
        let mut visited = BTreeSet::new();
        let mut stack = vec![x];
        visited.insert(x);
        while let Some(n) = stack.pop() {
            for &p in self.fathers.get(n).into_iter().flatten() {
                if self.connected.contains(p) {
                    out.insert(p.clone());
                } else if visited.insert(p) {
                    stack.push(p);
                }
            }
        }
        self.memo.insert(x.clone(), out.clone());
        out
    }
}

/// Nodes on some historical path from the root to `x`, with the history
/// edges joining them.
fn history_paths_to(
    x: &NodeKey,
    history: &History,
    from_root: &BTreeSet<NodeKey>,
) -> (BTreeSet<NodeKey>, Vec<Edge>) {
    let mut fathers: BTreeMap<&NodeKey, Vec<&NodeKey>> = BTreeMap::new();
    for e in &history.edges {
        fathers.entry(&e.child).or_default().push(&e.parent);
    }
    let mut coreach = BTreeSet::new();
    let mut stack = vec![x];
    coreach.insert(x.clone());
    while let Some(n) = stack.pop() {
        for &p in fathers.get(n).into_iter().flatten() {
            if coreach.insert(p.clone()) {
                stack.push(p);
            }
        }
    }
    let on_path: BTreeSet<NodeKey> = coreach.intersection(from_root).cloned().collect();
    let edges = history
        .edges
        .iter()
        .filter(|e| on_path.contains(&e.parent) && on_path.contains(&e.child))
        .cloned()
        .collect();
    (on_path, edges)
}

fn history_reach(history: &History) -> BTreeSet<NodeKey> {
    let mut all: BTreeSet<NodeKey> = history.nodes.clone();
    for e in &history.edges {
        all.insert(e.parent.clone());
        all.insert(e.child.clone());
    }
    reachable(&all, &history.edges)
}

/// Applies a connection policy. `v_l` need not contain the root; edges of
/// `e_l` may reference nodes outside `v_l`.
pub fn connect(
    v_l: &BTreeSet<NodeKey>,
    e_l: &BTreeSet<Edge>,
    history: &History,
    policy: ConnectionPolicy,
) -> RootedGraph {
    let mut nodes = v_l.clone();
    nodes.insert(NodeKey::root());
    let inner: BTreeSet<Edge> = e_l
        .iter()
        .filter(|e| nodes.contains(&e.parent) && nodes.contains(&e.child))
        .cloned()
        .collect();
    let connected = reachable(&nodes, &inner);
    if policy == ConnectionPolicy::Skip {
        return restrict(connected, &inner, BTreeSet::new());
    }

    let mut orphan_edges: Vec<&Edge> = e_l
        .iter()
        .filter(|e| !nodes.contains(&e.parent) && nodes.contains(&e.child))
        .collect();
    orphan_edges.sort_by(|a, b| (&a.child, *a).cmp(&(&b.child, *b)));

    let mut edges = inner.clone();
    let mut ghosts = BTreeSet::new();
    let mut connector = Connector::new(&connected, history);
    let from_root = if policy == ConnectionPolicy::Reappear {
        history_reach(history)
    } else {
        BTreeSet::new()
    };
    let mut recreated: BTreeMap<NodeKey, ()> = BTreeMap::new();

    let mut reappear = |x: &NodeKey,
                        nodes: &mut BTreeSet<NodeKey>,
                        edges: &mut BTreeSet<Edge>,
                        ghosts: &mut BTreeSet<NodeKey>| {
        if recreated.insert(x.clone(), ()).is_some() {
            return;
        }
        let (path_nodes, path_edges) = history_paths_to(x, history, &from_root);
        for n in path_nodes {
            if !v_l.contains(&n) && !n.is_root() {
                ghosts.insert(n.clone());
            }
            nodes.insert(n);
        }
        edges.extend(path_edges);
    };

    for e in &orphan_edges {
        match policy {
            ConnectionPolicy::Root => {
                edges.insert(Edge::with_pos(NodeKey::root(), e.child.clone(), e.pos.clone()));
            }
            ConnectionPolicy::Compact => {
                for z in connector.get_connected(&e.parent) {
                    edges.insert(Edge::with_pos(z, e.child.clone(), e.pos.clone()));
                }
            }
            ConnectionPolicy::Reappear => {
                reappear(&e.parent, &mut nodes, &mut edges, &mut ghosts);
                edges.insert((*e).clone());
            }
            ConnectionPolicy::Skip => unreachable!(),
        }
    }

    // Components with no orphan edge into them are still attached, smallest
    // node first.
    loop {
        let reach = reachable(&nodes, &edges);
        let Some(u) = v_l.iter().find(|n| !reach.contains(*n)).cloned() else {
            break;
        };
        let before = edges.len();
        match policy {
            ConnectionPolicy::Reappear => {
                let into: Vec<Edge> = history
                    .edges
                    .iter()
                    .filter(|e| e.child == u && e.parent != u)
                    .cloned()
                    .collect();
                for e in into {
                    if !nodes.contains(&e.parent) || !reach.contains(&e.parent) {
                        reappear(&e.parent, &mut nodes, &mut edges, &mut ghosts);
                    }
                    edges.insert(e);
                }
            }
            ConnectionPolicy::Compact => {
                for z in connector.get_connected(&u) {
                    edges.insert(Edge::new(z, u.clone()));
                }
            }
            _ => {}
        }
        let reach_after = reachable(&nodes, &edges);
        if edges.len() == before || !reach_after.contains(&u) {
            edges.insert(Edge::with_pos(NodeKey::root(), u, Position::None));
        }
    }

    let reach = reachable(&nodes, &edges);
    restrict(reach, &edges, ghosts)
}
