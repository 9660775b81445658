//! Random histories: local operations on a few replicas interleaved with
//! deliveries (operation-based) or merges (state-based).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::causal::{Envelope, ReplicaId};
use crate::combo::{AnyOp, AnyTree, Combo, SetEvents};
use crate::error::Result;
use crate::replica::Replica;
use crate::set_crdt::{Flavor, SetKind};
use crate::tree::PiMode;

/// A local action as issued by a client.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Add {
        label: String,
        parent: String,
        index: Option<usize>,
    },
    Rmv {
        key: String,
    },
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Action::Add {
                label,
                parent,
                index: Some(i),
            } => write!(f, "add {label} {parent} at {i}"),
            Action::Add { label, parent, .. } => write!(f, "add {label} {parent}"),
            Action::Rmv { key } => write!(f, "rmv {key}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GeneratedOp {
    pub origin: usize,
    pub action: Action,
    pub env: Envelope<AnyOp>,
    /// Set operations run when the origin applied it.
    pub events: SetEvents,
    /// Ops (as a bitmask over the history) that happened before this one.
    pub before: u64,
    /// State-based runs: origin state right after the op, and the ops
    /// that state includes (this one among them).
    pub snapshot: Option<AnyTree>,
    pub includes: u64,
}

/// One step of the generating run, for transcripts.
#[derive(Clone, Debug)]
pub struct TraceStep {
    pub replica: usize,
    pub what: String,
    pub dump: String,
    /// The incremental lookup agreed with a full recomputation.
    pub incremental_ok: bool,
}

impl TraceStep {
    pub fn capture(rep: &Replica, index: usize, what: String) -> TraceStep {
        let inc = rep.lookup();
        let batch = rep.tree().batch_lookup();
        let dump = match &inc {
            Ok(t) => t.dump(),
            Err(e) => format!("error: {e}\n"),
        };
        TraceStep {
            replica: index,
            what,
            dump,
            incremental_ok: inc.ok() == batch.ok(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct History {
    pub combo: Combo,
    pub seed: u64,
    pub replicas: usize,
    pub ops: Vec<GeneratedOp>,
    pub trace: Vec<TraceStep>,
}

impl History {
    pub fn is_op_based(&self) -> bool {
        self.combo.flavor == Flavor::OpBased
    }

    /// Keeps the ops selected by `mask`. For operation-based histories the
    /// mask must be closed under happened-before.
    pub fn restrict(&self, mask: u64) -> History {
        let ops = self
            .ops
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, o)| o.clone())
            .collect::<Vec<_>>();
        let old: Vec<usize> = (0..self.ops.len()).filter(|i| mask >> i & 1 == 1).collect();
        let remap = |m: u64| {
            old.iter()
                .enumerate()
                .filter(|(_, &o)| m >> o & 1 == 1)
                .fold(0u64, |acc, (n, _)| acc | 1 << n)
        };
        History {
            ops: ops
                .into_iter()
                .map(|mut o| {
                    o.before = remap(o.before);
                    o.includes = remap(o.includes);
                    o
                })
                .collect(),
            trace: Vec::new(),
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GenParams {
    pub replicas: usize,
    pub ops: usize,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            replicas: 3,
            ops: 5,
            seed: 42,
        }
    }
}

const ALPHABET: [&str; 3] = ["a", "b", "c"];

struct Gen {
    combo: Combo,
    reps: Vec<Replica>,
    ops: Vec<GeneratedOp>,
    /// Per replica, ops applied so far (bitmask).
    seen: Vec<u64>,
    fresh: usize,
    trace: Vec<TraceStep>,
}

impl Gen {
    fn label(&mut self, rng: &mut ChaCha8Rng) -> String {
        if self.combo.kind == SetKind::TwoPSet && self.combo.pi != PiMode::NodeUpi {
            // two-phase sets admit each element once
            self.fresh += 1;
            let i = self.fresh - 1;
            let base = char::from(b'a' + (i % 26) as u8);
            if i < 26 {
                base.to_string()
            } else {
                format!("{base}{}", i / 26)
            }
        } else {
            ALPHABET.choose(rng).unwrap().to_string()
        }
    }

    fn record(&mut self, r: usize, what: String) {
        self.trace.push(TraceStep::capture(&self.reps[r], r, what));
    }

    fn local(&mut self, r: usize, rng: &mut ChaCha8Rng) -> Result<bool> {
        let tree = self.reps[r].lookup()?;
        let keys: Vec<String> = tree.keys().cloned().collect();
        let removable: Vec<&String> = keys
            .iter()
            .filter(|k| k.as_str() != tree.root_key() && !tree.get(k).unwrap().ghost)
            .collect();
        let want_rmv = self.combo.kind.supports_remove() && !removable.is_empty() && rng.gen_bool(0.4);
        let action = if want_rmv {
            Action::Rmv {
                key: removable.choose(rng).unwrap().to_string(),
            }
        } else {
            let parent = keys.choose(rng).unwrap().clone();
            let index = match self.combo.pi {
                PiMode::Unordered => None,
                _ => Some(rng.gen_range(0..=tree.children(&parent).len())),
            };
            Action::Add {
                label: self.label(rng),
                parent,
                index,
            }
        };
        let before_ops = self.ops.len();
        let rep = &mut self.reps[r];
        let env = match &action {
            Action::Add {
                label,
                parent,
                index,
            } => rep.add(label, parent, *index),
            Action::Rmv { key } => rep.rmv(key),
        };
        let env = match env {
            Ok(env) => env,
            Err(crate::Error::PreconditionViolation(_)) => return Ok(false),
            Err(e) => return Err(e),
        };
        let events = events_of(&env.payload);
        let state_based = self.combo.flavor == Flavor::StateBased;
        let before = self.seen[r];
        self.seen[r] |= 1 << before_ops;
        self.ops.push(GeneratedOp {
            origin: r,
            action: action.clone(),
            env,
            events,
            before,
            snapshot: state_based.then(|| self.reps[r].tree().clone()),
            includes: self.seen[r],
        });
        self.record(r, action.to_string());
        Ok(true)
    }

    fn deliver(&mut self, r: usize, rng: &mut ChaCha8Rng) -> Result<bool> {
        match self.combo.flavor {
            Flavor::OpBased => {
                let missing: Vec<usize> = (0..self.ops.len())
                    .filter(|&i| self.seen[r] >> i & 1 == 0)
                    .collect();
                let Some(&i) = missing.choose(rng) else {
                    return Ok(false);
                };
                let env = self.ops[i].env.clone();
                let delivered = self.reps[r].receive(env);
                for (e, _) in &delivered {
                    let j = self
                        .ops
                        .iter()
                        .position(|o| o.env.origin == e.origin && o.env.seq == e.seq)
                        .unwrap();
                    self.seen[r] |= 1 << j;
                }
                let what = format!("deliver r{} op {}", self.ops[i].origin, i + 1);
                self.record(r, what);
                Ok(!delivered.is_empty())
            }
            Flavor::StateBased => {
                let others: Vec<usize> = (0..self.reps.len()).filter(|&s| s != r).collect();
                let s = *others.choose(rng).unwrap();
                if self.seen[s] & !self.seen[r] == 0 {
                    return Ok(false);
                }
                let other = self.reps[s].clone();
                self.reps[r].merge_from(&other)?;
                self.seen[r] |= self.seen[s];
                self.record(r, format!("merge r{s}"));
                Ok(true)
            }
        }
    }
}

/// Set operations listed in an op. Receivers may run more (expanded
/// subtree removals); state-based ops never carry those.
fn events_of(op: &AnyOp) -> SetEvents {
    match op {
        AnyOp::Graph(o) => SetEvents::Graph(crate::graph_tree::Applied {
            nodes: o.nodes.clone(),
            edges: o.edges.clone(),
        }),
        AnyOp::Word(o) => SetEvents::Word(o.paths.clone()),
    }
}

/// Generates a history of `params.ops` operations.
pub fn generate(combo: Combo, params: GenParams) -> Result<History> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let reps = (0..params.replicas)
        .map(|i| Replica::new(ReplicaId(i as u32 + 1), combo, params.seed))
        .collect::<Result<Vec<_>>>()?;
    let mut g = Gen {
        combo,
        reps,
        ops: Vec::new(),
        seen: vec![0; params.replicas],
        fresh: 0,
        trace: Vec::new(),
    };
    let mut attempts = 0;
    while g.ops.len() < params.ops && attempts < 100 * params.ops.max(1) {
        attempts += 1;
        let r = rng.gen_range(0..params.replicas);
        if !g.ops.is_empty() && rng.gen_bool(0.35) {
            g.deliver(r, &mut rng)?;
        } else {
            g.local(r, &mut rng)?;
        }
    }
    Ok(History {
        combo,
        seed: params.seed,
        replicas: params.replicas,
        ops: g.ops,
        trace: g.trace,
    })
}
