//! Tree configurations (representation, set kind, flavor, policies,
//! positions) and a representation-independent tree state.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::causal::ReplicaClock;
use crate::edge_tree;
use crate::error::{Error, Result};
use crate::graph_tree::{Applied, GraphConfig, GraphOp, GraphTree};
use crate::set_crdt::{Flavor, SetKind, SetOp};
use crate::tree::{ConnectionPolicy, LookupTree, MappingPolicy, PiMode, ROOT};
use crate::word_tree::{Path, WordConfig, WordOp, WordTree, WORD_ROOT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Repr {
    Graph,
    Edge,
    Word,
}

impl Repr {
    pub const ALL: [Repr; 3] = [Repr::Graph, Repr::Edge, Repr::Word];

    pub fn short_name(self) -> &'static str {
        match self {
            Repr::Graph => "graph",
            Repr::Edge => "edge",
            Repr::Word => "word",
        }
    }

    pub fn parse(s: &str) -> Option<Repr> {
        Repr::ALL.into_iter().find(|r| r.short_name() == s)
    }
}

impl fmt::Display for Repr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// One point of the configuration matrix. `map` is `None` for word trees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Combo {
    pub repr: Repr,
    pub kind: SetKind,
    pub flavor: Flavor,
    pub connect: ConnectionPolicy,
    pub map: Option<MappingPolicy>,
    pub pi: PiMode,
}

impl Combo {
    pub fn graph(kind: SetKind, flavor: Flavor, connect: ConnectionPolicy, map: MappingPolicy) -> Self {
        Combo {
            repr: Repr::Graph,
            kind,
            flavor,
            connect,
            map: Some(map),
            pi: PiMode::Unordered,
        }
    }

    pub fn edge(kind: SetKind, flavor: Flavor, connect: ConnectionPolicy, map: MappingPolicy) -> Self {
        Combo {
            repr: Repr::Edge,
            ..Combo::graph(kind, flavor, connect, map)
        }
    }

    pub fn word(kind: SetKind, flavor: Flavor, connect: ConnectionPolicy) -> Self {
        Combo {
            repr: Repr::Word,
            kind,
            flavor,
            connect,
            map: None,
            pi: PiMode::Unordered,
        }
    }

    pub fn with_pi(mut self, pi: PiMode) -> Self {
        self.pi = pi;
        self
    }

    pub fn graph_config(&self) -> Option<GraphConfig> {
        self.map
            .map(|m| GraphConfig::new(self.kind, self.flavor, self.connect, m).with_pi(self.pi))
    }

    pub fn word_config(&self) -> WordConfig {
        WordConfig::new(self.kind, self.flavor, self.connect).with_pi(self.pi)
    }

    pub fn check(&self) -> Result<()> {
        match (self.repr, self.graph_config()) {
            (Repr::Word, None) => self.word_config().check(),
            (Repr::Word, Some(_)) => Err(Error::IllegalCombo("word trees take no mapping policy".into())),
            (_, None) => Err(Error::IllegalCombo("graph and edge trees need a mapping policy".into())),
            (r, Some(c)) => c.check(r == Repr::Edge),
        }
    }

    /// Every legal configuration, in a fixed order.
    pub fn all() -> Vec<Combo> {
        let mut out = Vec::new();
        for repr in Repr::ALL {
            for kind in SetKind::ALL {
                for flavor in Flavor::ALL {
                    for &connect in ConnectionPolicy::ALL {
                        let maps: Vec<Option<MappingPolicy>> = match repr {
                            Repr::Word => vec![None],
                            _ => MappingPolicy::ALL.iter().copied().map(Some).collect(),
                        };
                        for map in maps {
                            for &pi in PiMode::ALL {
                                let c = Combo {
                                    repr,
                                    kind,
                                    flavor,
                                    connect,
                                    map,
                                    pi,
                                };
                                if c.check().is_ok() {
                                    out.push(c);
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// No node ever changes parent under this configuration.
    pub fn is_monotonic(&self) -> bool {
        self.connect.is_monotonic() && self.map.is_none_or(MappingPolicy::is_monotonic)
    }

    pub fn root_key(&self) -> &'static str {
        match self.repr {
            Repr::Word => WORD_ROOT,
            _ => ROOT,
        }
    }

    pub fn build(&self) -> Result<AnyTree> {
        match (self.repr, self.graph_config()) {
            (Repr::Graph, Some(c)) => Ok(AnyTree::Graph(GraphTree::new(c)?)),
            (Repr::Edge, Some(c)) => Ok(AnyTree::Graph(edge_tree::new(c)?)),
            _ => {
                self.check()?;
                Ok(AnyTree::Word(WordTree::new(self.word_config())?))
            }
        }
    }

    /// Parses `key=value` tokens such as `repr=graph set=or flavor=op
    /// connect=skip map=zero pi=none`. Missing keys take the first value.
    pub fn parse(text: &str) -> Result<Combo> {
        let bad = |m: String| Error::IllegalCombo(m);
        let mut c = Combo::graph(
            SetKind::GSet,
            Flavor::OpBased,
            ConnectionPolicy::Skip,
            MappingPolicy::Several,
        );
        let mut map_given = false;
        for tok in text.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {tok:?}")))?;
            let unknown = || bad(format!("unknown value {v:?} for {k}"));
            match k {
                "repr" => c.repr = Repr::parse(v).ok_or_else(unknown)?,
                "set" => c.kind = SetKind::parse(v).ok_or_else(unknown)?,
                "flavor" => c.flavor = Flavor::parse(v).ok_or_else(unknown)?,
                "connect" => c.connect = ConnectionPolicy::parse(v).ok_or_else(unknown)?,
                "map" => {
                    map_given = true;
                    c.map = if v == "-" {
                        None
                    } else {
                        Some(MappingPolicy::parse(v).ok_or_else(unknown)?)
                    }
                }
                "pi" => c.pi = PiMode::parse(v).ok_or_else(unknown)?,
                _ => return Err(bad(format!("unknown key {k:?}"))),
            }
        }
        if c.repr == Repr::Word && !map_given {
            c.map = None;
        }
        c.check()?;
        Ok(c)
    }
}

impl fmt::Display for Combo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "repr={} set={} flavor={} connect={}",
            self.repr,
            self.kind.short_name(),
            self.flavor.short_name(),
            self.connect
        )?;
        if let Some(m) = self.map {
            write!(f, " map={m}")?;
        }
        write!(f, " pi={}", self.pi)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnyOp {
    Graph(GraphOp),
    Word(WordOp),
}

/// Set operations actually run by one tree operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SetEvents {
    Graph(Applied),
    Word(Vec<SetOp<Path>>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnyTree {
    Graph(GraphTree),
    Word(WordTree),
}

impl AnyTree {
    pub fn gen_add<R: Rng + ?Sized>(
        &mut self,
        label: &str,
        parent: &str,
        index: Option<usize>,
        clock: &mut ReplicaClock,
        rng: &mut R,
    ) -> Result<AnyOp> {
        match self {
            AnyTree::Graph(t) => t.gen_add(label, parent, index, clock, rng).map(AnyOp::Graph),
            AnyTree::Word(t) => t.gen_add(label, parent, index, clock, rng).map(AnyOp::Word),
        }
    }

    pub fn gen_rmv(&mut self, key: &str, clock: &mut ReplicaClock) -> Result<AnyOp> {
        match self {
            AnyTree::Graph(t) => t.gen_rmv(key, clock).map(AnyOp::Graph),
            AnyTree::Word(t) => t.gen_rmv(key, clock).map(AnyOp::Word),
        }
    }

    pub fn apply(&mut self, op: &AnyOp) -> SetEvents {
        match (self, op) {
            (AnyTree::Graph(t), AnyOp::Graph(o)) => SetEvents::Graph(t.apply(o)),
            (AnyTree::Word(t), AnyOp::Word(o)) => SetEvents::Word(t.apply(o)),
            _ => panic!("operation does not match the tree representation"),
        }
    }

    pub fn merge(&mut self, other: &AnyTree) -> Result<()> {
        match (self, other) {
            (AnyTree::Graph(a), AnyTree::Graph(b)) => a.merge(b),
            (AnyTree::Word(a), AnyTree::Word(b)) => a.merge(b),
            _ => Err(Error::KindMismatch("tree representations differ".into())),
        }
    }

    pub fn lookup(&self) -> Result<LookupTree> {
        match self {
            AnyTree::Graph(t) => t.lookup(),
            AnyTree::Word(t) => Ok(t.lookup()),
        }
    }

    pub fn batch_lookup(&self) -> Result<LookupTree> {
        match self {
            AnyTree::Graph(t) => t.batch_lookup(),
            AnyTree::Word(t) => Ok(t.batch_lookup()),
        }
    }

    pub fn to_canonical(&self) -> String {
        match self {
            AnyTree::Graph(t) => t.to_canonical(),
            AnyTree::Word(t) => t.to_canonical(),
        }
    }
}
