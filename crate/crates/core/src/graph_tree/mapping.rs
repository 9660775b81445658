//! Mapping policies: turn a rooted graph into a tree.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::RootedGraph;
use crate::error::{Error, Result};
use crate::ordered::Position;
use crate::tree::{Edge, LookupTree, LookupTreeBuilder, MappingPolicy, NodeKey, ROOT};

pub const DEFAULT_SEVERAL_CAP: usize = 100_000;

/// Position rendered for a child reached over `e`.
pub fn edge_position(e: &Edge) -> Position {
    if e.pos.is_none() {
        e.child.position()
    } else {
        e.pos.clone()
    }
}

fn segment(e: &Edge) -> String {
    if e.pos.is_none() {
        e.child.to_string()
    } else {
        format!("{}@{}", e.child, e.pos)
    }
}

/// A rendered tree plus the node behind every instance key.
pub struct Mapped {
    pub tree: LookupTree,
    pub nodes: BTreeMap<String, NodeKey>,
}

struct Render<'g> {
    g: &'g RootedGraph,
    builder: LookupTreeBuilder,
    nodes: BTreeMap<String, NodeKey>,
}

impl<'g> Render<'g> {
    fn new(g: &'g RootedGraph) -> Self {
        let mut nodes = BTreeMap::new();
        nodes.insert(ROOT.to_owned(), NodeKey::root());
        Render {
            g,
            builder: LookupTreeBuilder::new(ROOT),
            nodes,
        }
    }

    fn add(&mut self, key: String, parent: String, e: &Edge) {
        let ghost = self.g.ghosts.contains(&e.child);
        if self.builder.add(
            key.clone(),
            e.child.id.0.clone(),
            parent,
            edge_position(e),
            ghost,
            None,
        ) {
            self.nodes.insert(key, e.child.clone());
        }
    }

    fn finish(self) -> Mapped {
        Mapped {
            tree: self.builder.finish(),
            nodes: self.nodes,
        }
    }
}

fn out_edges(g: &RootedGraph) -> BTreeMap<&NodeKey, Vec<&Edge>> {
    let mut out: BTreeMap<&NodeKey, Vec<&Edge>> = BTreeMap::new();
    for e in &g.edges {
        out.entry(&e.parent).or_default().push(e);
    }
    out
}

/// Renders a parent choice (child → in-edge) as a tree.
fn from_parents(g: &RootedGraph, chosen: &BTreeMap<&NodeKey, &Edge>) -> Mapped {
    let mut r = Render::new(g);
    for (child, e) in chosen {
        if child.is_root() {
            continue;
        }
        r.add(child.to_string(), e.parent.to_string(), e);
    }
    r.finish()
}

pub fn map_to_tree(
    g: &RootedGraph,
    policy: MappingPolicy,
    weight: &dyn Fn(&Edge) -> i128,
    cap: usize,
) -> Result<Mapped> {
    match policy {
        MappingPolicy::Several => several(g, cap),
        MappingPolicy::Zero => Ok(zero(g)),
        MappingPolicy::OneShortest => Ok(shortest(g, false)),
        MappingPolicy::OneNewer | MappingPolicy::OneHigher => Ok(heaviest(g, weight)),
    }
}

/// Every simple path from the root becomes an instance.
fn several(g: &RootedGraph, cap: usize) -> Result<Mapped> {
    let out = out_edges(g);
    let mut r = Render::new(g);
    let mut on_path = BTreeSet::new();
    let mut count = 0usize;
    let root = NodeKey::root();
    on_path.insert(root.clone());

    // explicit stack of (node, key, next out-edge index)
    let mut stack: Vec<(NodeKey, String, usize)> = vec![(root, ROOT.to_owned(), 0)];
    while let Some((node, key, idx)) = stack.pop() {
        let edges = out.get(&node).map(Vec::as_slice).unwrap_or(&[]);
        let Some(e) = edges.get(idx) else {
            on_path.remove(&node);
            continue;
        };
        stack.push((node, key.clone(), idx + 1));
        if on_path.contains(&e.child) {
            continue;
        }
        count += 1;
        if count > cap {
            return Err(Error::SeveralBlowup { cap });
        }
        let child_key = if key == ROOT {
            segment(e)
        } else {
            format!("{key}/{}", segment(e))
        };
        r.add(child_key.clone(), key, e);
        on_path.insert(e.child.clone());
        stack.push((e.child.clone(), child_key, 0));
    }
    Ok(r.finish())
}

/// Drops every node with more than one incoming edge, with its subtree.
fn zero(g: &RootedGraph) -> Mapped {
    let mut indeg: BTreeMap<&NodeKey, usize> = BTreeMap::new();
    for e in &g.edges {
        *indeg.entry(&e.child).or_default() += 1;
    }
    let out = out_edges(g);
    let mut chosen = BTreeMap::new();
    let root = NodeKey::root();
    let mut queue = VecDeque::from([&root]);
    while let Some(u) = queue.pop_front() {
        for e in out.get(u).into_iter().flatten() {
            if indeg[&e.child] == 1 && !e.child.is_root() && !chosen.contains_key(&e.child) {
                chosen.insert(&e.child, *e);
                queue.push_back(&e.child);
            }
        }
    }
    from_parents(g, &chosen)
}

/// Breadth-first tree; the first edge reaching a node wins. `reverse` scans
/// out-edges in descending order instead.
pub fn shortest(g: &RootedGraph, reverse: bool) -> Mapped {
    let out = out_edges(g);
    let root = NodeKey::root();
    let mut chosen = BTreeMap::new();
    let mut seen = BTreeSet::from([&root]);
    let mut queue = VecDeque::from([&root]);
    while let Some(u) = queue.pop_front() {
        let mut edges: Vec<&&Edge> = out.get(u).into_iter().flatten().collect();
        if reverse {
            edges.reverse();
        }
        for e in edges {
            if seen.insert(&e.child) {
                chosen.insert(&e.child, *e);
                queue.push_back(&e.child);
            }
        }
    }
    from_parents(g, &chosen)
}

/// Maximum-weight spanning arborescence. Ties between edges are broken by
/// child, then parent.
fn heaviest(g: &RootedGraph, weight: &dyn Fn(&Edge) -> i128) -> Mapped {
    let index: BTreeMap<&NodeKey, usize> = {
        let mut v: Vec<&NodeKey> = g.nodes.iter().collect();
        v.sort_by_key(|n| !n.is_root());
        v.into_iter().enumerate().map(|(i, n)| (n, i)).collect()
    };
    let mut edges: Vec<&Edge> = g
        .edges
        .iter()
        .filter(|e| !e.child.is_root() && e.parent != e.child)
        .collect();
    edges.sort_by(|a, b| (&a.child, &a.parent, &a.pos).cmp(&(&b.child, &b.parent, &b.pos)));
    let scale = (g.nodes.len() * edges.len() + 1) as i128;
    let weighted: Vec<(usize, usize, i128)> = edges
        .iter()
        .enumerate()
        .map(|(rank, e)| (index[&e.parent], index[&e.child], weight(e) * scale + rank as i128))
        .collect();
    let picked = max_arborescence(index.len(), 0, &weighted)
        .expect("every node of a rooted graph is reachable");
    let chosen: BTreeMap<&NodeKey, &Edge> = picked.into_iter().map(|i| (&edges[i].child, edges[i])).collect();
    from_parents(g, &chosen)
}

/// Chu-Liu/Edmonds. Returns the indices of the chosen edges, one per
/// non-root vertex, or `None` when some vertex cannot be reached.
pub fn max_arborescence(n: usize, root: usize, edges: &[(usize, usize, i128)]) -> Option<Vec<usize>> {
    let mut best: Vec<Option<usize>> = vec![None; n];
    for (i, &(u, v, w)) in edges.iter().enumerate() {
        if v == root || u == v {
            continue;
        }
        match best[v] {
            Some(b) if edges[b].2 >= w => {}
            _ => best[v] = Some(i),
        }
    }
    for (v, b) in best.iter().enumerate() {
        if v != root && b.is_none() {
            return None;
        }
    }

    // find a cycle among the chosen edges
    let mut state = vec![0u8; n]; // 0 new, 1 on current walk, 2 done
    let mut cycle: Option<Vec<usize>> = None;
    state[root] = 2;
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        let mut walk = Vec::new();
        let mut v = start;
        while state[v] == 0 {
            state[v] = 1;
            walk.push(v);
            v = edges[best[v].unwrap()].0;
        }
        if state[v] == 1 {
            let pos = walk.iter().position(|&x| x == v).unwrap();
            cycle = Some(walk[pos..].to_vec());
        }
        for x in walk {
            state[x] = 2;
        }
        if cycle.is_some() {
            break;
        }
    }
    let Some(cycle) = cycle else {
        return Some(best.into_iter().flatten().collect());
    };

    // contract the cycle into a fresh vertex
    let in_cycle: BTreeSet<usize> = cycle.iter().copied().collect();
    let mut map = vec![0usize; n];
    let mut next = 0;
    for (v, slot) in map.iter_mut().enumerate() {
        if !in_cycle.contains(&v) {
            *slot = next;
            next += 1;
        }
    }
    let c = next;
    for &v in &cycle {
        map[v] = c;
    }
    let mut sub = Vec::new();
    let mut origin = Vec::new();
    for (i, &(u, v, w)) in edges.iter().enumerate() {
        let (cu, cv) = (map[u], map[v]);
        if cu == cv {
            continue;
        }
        let w = if in_cycle.contains(&v) {
            w - edges[best[v].unwrap()].2
        } else {
            w
        };
        sub.push((cu, cv, w));
        origin.push(i);
    }
    let picked = max_arborescence(c + 1, map[root], &sub)?;
    let mut result: Vec<usize> = picked.iter().map(|&j| origin[j]).collect();
    let entering = result
        .iter()
        .copied()
        .find(|&i| in_cycle.contains(&edges[i].1))
        .expect("contracted vertex has an entering edge");
    let broken = edges[entering].1;
    for &v in &cycle {
        if v != broken {
            result.push(best[v].unwrap());
        }
    }
    Some(result)
}
