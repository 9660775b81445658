//! Types shared by every tree representation: node identifiers, edges,
//! policies and the client-facing [`LookupTree`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ordered::{wootr, Position, Upi, WootrElement};

pub const ROOT: &str = "root";

/// Label of a node in graph and edge trees.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(s: impl Into<String>) -> Self {
        NodeId(s.into())
    }

    pub fn root() -> Self {
        NodeId(ROOT.to_owned())
    }

    pub fn is_root(&self) -> bool {
        self.0 == ROOT
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Node identity in graph trees. With node positioning the identity is the
/// pair `(element, upi)`; otherwise `upi` is absent.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeKey {
    pub id: NodeId,
    pub upi: Option<Upi>,
}

impl NodeKey {
    pub fn plain(id: impl Into<String>) -> Self {
        NodeKey {
            id: NodeId::new(id),
            upi: None,
        }
    }

    pub fn root() -> Self {
        NodeKey {
            id: NodeId::root(),
            upi: None,
        }
    }

    pub fn is_root(&self) -> bool {
        self.id.is_root() && self.upi.is_none()
    }

    pub fn position(&self) -> Position {
        self.upi.clone().map_or(Position::None, Position::Upi)
    }
}

impl fmt::Display for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.upi {
            Some(u) => write!(f, "{}#{}", self.id, u),
            None => write!(f, "{}", self.id),
        }
    }
}

/// Directed edge `parent → child`, optionally carrying a sibling position.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub parent: NodeKey,
    pub child: NodeKey,
    pub pos: Position,
}

impl Edge {
    pub fn new(parent: NodeKey, child: NodeKey) -> Self {
        Edge {
            parent,
            child,
            pos: Position::None,
        }
    }

    pub fn with_pos(parent: NodeKey, child: NodeKey, pos: Position) -> Self {
        Edge { parent, child, pos }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.parent, self.child)?;
        if !self.pos.is_none() {
            write!(f, "@{}", self.pos)?;
        }
        Ok(())
    }
}

macro_rules! named_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $s:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn short_name(self) -> &'static str {
                match self { $($name::$variant => $s),+ }
            }

            pub fn parse(s: &str) -> Option<Self> {
                match s { $($s => Some($name::$variant),)+ _ => None }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.short_name())
            }
        }
    };
}

named_enum!(
    /// How orphans (nodes cut off from the root by a concurrent remove) are
    /// handled.
    ConnectionPolicy {
        Skip => "skip",
        Reappear => "reappear",
        Root => "root",
        Compact => "compact",
    }
);

named_enum!(
    /// How a rooted graph with several paths to a node becomes a tree.
    MappingPolicy {
        Several => "several",
        OneNewer => "newer",
        OneHigher => "higher",
        OneShortest => "shortest",
        Zero => "zero",
    }
);

named_enum!(
    /// Sibling ordering mode.
    PiMode {
        Unordered => "none",
        NodeUpi => "node-upi",
        EdgeUpi => "edge-upi",
        Wootr => "wootr",
    }
);

impl ConnectionPolicy {
    pub fn is_monotonic(self) -> bool {
        matches!(self, ConnectionPolicy::Skip | ConnectionPolicy::Reappear)
    }
}

impl MappingPolicy {
    pub fn is_monotonic(self) -> bool {
        matches!(self, MappingPolicy::Several | MappingPolicy::Zero)
    }
}

/// A node of a [`LookupTree`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub label: String,
    pub parent: Option<String>,
    pub children: Vec<String>,
    pub position: Position,
    /// Recreated ancestor that is not itself in the set lookup.
    pub ghost: bool,
    /// Source this node was rendered from, when it was relocated.
    pub origin: Option<String>,
}

/// Client-facing tree: every non-root instance has exactly one parent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LookupTree {
    root: String,
    nodes: BTreeMap<String, TreeNode>,
}

impl LookupTree {
    pub fn root_key(&self) -> &str {
        &self.root
    }

    pub fn get(&self, key: &str) -> Option<&TreeNode> {
        self.nodes.get(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.nodes.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.nodes.keys()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&String, &TreeNode)> {
        self.nodes.iter()
    }

    pub fn children(&self, key: &str) -> &[String] {
        self.nodes.get(key).map_or(&[], |n| n.children.as_slice())
    }

    /// Keys of `key` and all its descendants, depth first.
    pub fn subtree(&self, key: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut stack = vec![key.to_owned()];
        while let Some(k) = stack.pop() {
            for c in self.children(&k).iter().rev() {
                stack.push(c.clone());
            }
            out.push(k);
        }
        out
    }

    /// Where every identity sits: identity → parent key. The identity is the
    /// node key, or the source it was relocated from.
    pub fn placements(&self) -> BTreeMap<&str, Option<&str>> {
        self.nodes
            .iter()
            .map(|(k, n)| {
                let id = n.origin.as_deref().unwrap_or(k.as_str());
                (id, n.parent.as_deref())
            })
            .collect()
    }

    /// Checks the tree shape: total parent map, acyclic, connected.
    pub fn validate(&self) -> Result<(), String> {
        let root = self
            .nodes
            .get(&self.root)
            .ok_or_else(|| "root missing".to_owned())?;
        if root.parent.is_some() {
            return Err("root has a parent".into());
        }
        for (k, n) in &self.nodes {
            if k == &self.root {
                continue;
            }
            let p = n
                .parent
                .as_ref()
                .ok_or_else(|| format!("{k} has no parent"))?;
            let pn = self
                .nodes
                .get(p)
                .ok_or_else(|| format!("{k} has missing parent {p}"))?;
            if !pn.children.contains(k) {
                return Err(format!("{p} does not list child {k}"));
            }
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.root.as_str()];
        while let Some(k) = stack.pop() {
            if !seen.insert(k) {
                return Err(format!("{k} reached twice"));
            }
            for c in &self.nodes[k].children {
                if self.nodes.get(c).and_then(|n| n.parent.as_deref()) != Some(k) {
                    return Err(format!("{c} listed under {k} but parented elsewhere"));
                }
                stack.push(c);
            }
        }
        if seen.len() != self.nodes.len() {
            return Err(format!(
                "{} nodes unreachable from the root",
                self.nodes.len() - seen.len()
            ));
        }
        Ok(())
    }

    /// Canonical depth-first outline, one instance per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![(self.root.as_str(), 0usize)];
        while let Some((k, depth)) = stack.pop() {
            let n = &self.nodes[k];
            for _ in 0..depth {
                out.push_str("  ");
            }
            out.push_str(k);
            if !n.position.is_none() {
                out.push_str(" @");
                out.push_str(&n.position.to_string());
            }
            if n.ghost {
                out.push_str(" [ghost]");
            }
            if let Some(o) = &n.origin {
                out.push_str(" [from ");
                out.push_str(o);
                out.push(']');
            }
            out.push('\n');
            for c in n.children.iter().rev() {
                stack.push((c, depth + 1));
            }
        }
        out
    }
}

/// Incremental construction of a [`LookupTree`]; sibling order is settled in
/// [`LookupTreeBuilder::finish`].
pub struct LookupTreeBuilder {
    root: String,
    nodes: BTreeMap<String, TreeNode>,
}

impl LookupTreeBuilder {
    pub fn new(root: impl Into<String>) -> Self {
        let root = root.into();
        let mut nodes = BTreeMap::new();
        nodes.insert(
            root.clone(),
            TreeNode {
                label: root.clone(),
                parent: None,
                children: Vec::new(),
                position: Position::None,
                ghost: false,
                origin: None,
            },
        );
        LookupTreeBuilder { root, nodes }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.nodes.contains_key(key)
    }

    /// Adds a node; ignored if the key already exists.
    pub fn add(
        &mut self,
        key: String,
        label: String,
        parent: String,
        position: Position,
        ghost: bool,
        origin: Option<String>,
    ) -> bool {
        if self.nodes.contains_key(&key) {
            return false;
        }
        self.nodes.insert(
            key,
            TreeNode {
                label,
                parent: Some(parent),
                children: Vec::new(),
                position,
                ghost,
                origin,
            },
        );
        true
    }

    pub fn finish(mut self) -> LookupTree {
        let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (k, n) in &self.nodes {
            if let Some(p) = &n.parent {
                groups.entry(p.clone()).or_default().push(k.clone());
            }
        }
        for (parent, mut kids) in groups {
            let nodes = &self.nodes;
            let wootr_elems: Vec<&WootrElement> = kids
                .iter()
                .filter_map(|k| match &nodes[k].position {
                    Position::Wootr(w) => Some(w),
                    _ => None,
                })
                .collect();
            if wootr_elems.is_empty() {
                kids.sort_by(|a, b| {
                    (&nodes[a].position, &nodes[a].label, a).cmp(&(
                        &nodes[b].position,
                        &nodes[b].label,
                        b,
                    ))
                });
            } else {
                let order = wootr::order_elements(wootr_elems);
                let rank = |k: &String| match &nodes[k].position {
                    Position::Wootr(w) => order.iter().position(|x| x == w).unwrap_or(usize::MAX),
                    _ => usize::MAX,
                };
                kids.sort_by(|a, b| (rank(a), a).cmp(&(rank(b), b)));
            }
            if let Some(p) = self.nodes.get_mut(&parent) {
                p.children = kids;
            }
        }
        LookupTree {
            root: self.root,
            nodes: self.nodes,
        }
    }
}
