//! Hand-written scenarios.
//!
//! ```text
//! # comment
//! combo repr=graph set=or flavor=op connect=skip map=zero pi=none
//! replicas 2
//! seed 7
//! r1 add x root
//! r2 add y root at 0
//! r1 rmv x
//! r2 deliver r1
//! r1 merge r2
//! sync
//! ```
//!
//! Keys name a node of the acting replica's current tree, either by exact
//! key or by label when that label is unique. `root` always names the root.
//! `deliver` hands over every op the source has seen (operation-based) or
//! merges its state (state-based); `merge` is the same thing.

use std::fmt::Write as _;

use super::history::TraceStep;
use crate::causal::{Envelope, ReplicaId};
use crate::combo::{AnyOp, Combo};
use crate::error::{Error, Result};
use crate::replica::Replica;
use crate::set_crdt::Flavor;
use crate::tree::LookupTree;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Add {
        replica: usize,
        label: String,
        parent: String,
        index: Option<usize>,
    },
    Rmv {
        replica: usize,
        key: String,
    },
    Deliver {
        to: usize,
        from: usize,
    },
    Sync,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub combo: Combo,
    pub replicas: usize,
    pub seed: u64,
    pub commands: Vec<(usize, Command)>,
}

fn replica_ref(tok: &str, line: usize) -> Result<usize> {
    tok.strip_prefix('r')
        .and_then(|n| n.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .map(|n| n - 1)
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("expected a replica like r1, got {tok:?}"),
        })
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        let mut combo = None;
        let mut replicas = 2;
        let mut seed = 0;
        let mut commands = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap().trim();
            if body.is_empty() {
                continue;
            }
            let err = |m: String| Error::Parse { line, message: m };
            let toks: Vec<&str> = body.split_whitespace().collect();
            match toks[0] {
                "combo" => {
                    combo = Some(Combo::parse(&toks[1..].join(" ")).map_err(|e| err(e.to_string()))?)
                }
                "replicas" | "seed" => {
                    let v: u64 = toks
                        .get(1)
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| err(format!("{} needs a number", toks[0])))?;
                    if toks[0] == "seed" {
                        seed = v;
                    } else if (1..=64).contains(&v) {
                        replicas = v as usize;
                    } else {
                        return Err(err("replicas must be between 1 and 64".into()));
                    }
                }
                "sync" => commands.push((line, Command::Sync)),
                r => {
                    let replica = replica_ref(r, line)?;
                    let cmd = match toks.get(1).copied() {
                        Some("add") => {
                            let (label, parent, index) = match toks[2..] {
                                [l, p] => (l, p, None),
                                [l, p, "at", i] => (
                                    l,
                                    p,
                                    Some(i.parse().map_err(|_| err(format!("bad index {i:?}")))?),
                                ),
                                _ => return Err(err("usage: rN add LABEL PARENT [at INDEX]".into())),
                            };
                            Command::Add {
                                replica,
                                label: label.into(),
                                parent: parent.into(),
                                index,
                            }
                        }
                        Some("rmv") if toks.len() == 3 => Command::Rmv {
                            replica,
                            key: toks[2].into(),
                        },
                        Some("deliver") | Some("merge") if toks.len() == 3 => Command::Deliver {
                            to: replica,
                            from: replica_ref(toks[2], line)?,
                        },
                        _ => return Err(err(format!("unknown command {body:?}"))),
                    };
                    commands.push((line, cmd));
                }
            }
        }
        let combo = combo.ok_or(Error::Parse {
            line: 0,
            message: "missing combo line".into(),
        })?;
        for (line, c) in &commands {
            let used = match c {
                Command::Add { replica, .. } | Command::Rmv { replica, .. } => vec![*replica],
                Command::Deliver { to, from } => vec![*to, *from],
                Command::Sync => vec![],
            };
            if used.iter().any(|&r| r >= replicas) {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("only {replicas} replicas"),
                });
            }
        }
        Ok(Scenario {
            combo,
            replicas,
            seed,
            commands,
        })
    }
}

/// Resolves `name` to a key of `tree`: exact key, `root`, or unique label.
pub fn resolve(tree: &LookupTree, name: &str) -> Result<String> {
    if name == "root" {
        return Ok(tree.root_key().to_owned());
    }
    if tree.contains(name) {
        return Ok(name.to_owned());
    }
    let hits: Vec<&String> = tree
        .nodes()
        .filter(|(k, n)| n.label == name && k.as_str() != tree.root_key())
        .map(|(k, _)| k)
        .collect();
    match hits.as_slice() {
        [k] => Ok((*k).clone()),
        [] => Ok(name.to_owned()),
        _ => Err(Error::PreconditionViolation(format!(
            "{name} is ambiguous: {}",
            hits.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
        ))),
    }
}

pub struct Run {
    pub replicas: Vec<Replica>,
    pub steps: Vec<TraceStep>,
    /// Every op broadcast so far, in generation order.
    pub log: Vec<Envelope<AnyOp>>,
}

impl Run {
    pub fn new(combo: Combo, replicas: usize, seed: u64) -> Result<Run> {
        Ok(Run {
            replicas: (0..replicas)
                .map(|i| Replica::new(ReplicaId(i as u32 + 1), combo, seed))
                .collect::<Result<_>>()?,
            steps: Vec::new(),
            log: Vec::new(),
        })
    }

    fn record(&mut self, r: usize, what: String) {
        self.steps.push(TraceStep::capture(&self.replicas[r], r, what));
    }

    fn deliver(&mut self, to: usize, from: usize) -> Result<()> {
        if to == from {
            return Ok(());
        }
        if self.replicas[to].combo().flavor == Flavor::StateBased {
            let src = self.replicas[from].clone();
            self.replicas[to].merge_from(&src)?;
            self.record(to, format!("merge r{}", from + 1));
            return Ok(());
        }
        let from_id = self.replicas[from].id();
        let seen = self.replicas[from].seen().clone();
        let envs: Vec<Envelope<AnyOp>> = self
            .log
            .iter()
            .filter(|e| e.seq <= seen.get(e.origin))
            .cloned()
            .collect();
        let mut n = 0;
        for e in envs {
            n += self.replicas[to].receive(e).len();
        }
        self.record(to, format!("deliver r{} ({n} ops from {from_id})", from + 1));
        Ok(())
    }

    pub fn exec(&mut self, cmd: &Command) -> Result<()> {
        match cmd {
            Command::Add {
                replica,
                label,
                parent,
                index,
            } => {
                let tree = self.replicas[*replica].lookup()?;
                let parent = resolve(&tree, parent)?;
                let env = self.replicas[*replica].add(label, &parent, *index)?;
                self.log.push(env);
                let at = index.map(|i| format!(" at {i}")).unwrap_or_default();
                self.record(*replica, format!("add {label} {parent}{at}"));
            }
            Command::Rmv { replica, key } => {
                let tree = self.replicas[*replica].lookup()?;
                let key = resolve(&tree, key)?;
                let env = self.replicas[*replica].rmv(&key)?;
                self.log.push(env);
                self.record(*replica, format!("rmv {key}"));
            }
            Command::Deliver { to, from } => self.deliver(*to, *from)?,
            Command::Sync => {
                let n = self.replicas.len();
                // two rounds spread every state to everyone
                for _ in 0..2 {
                    for to in 0..n {
                        for from in 0..n {
                            if to != from {
                                self.deliver(to, from)?;
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dumps(&self) -> Result<Vec<String>> {
        self.replicas
            .iter()
            .map(|r| r.lookup().map(|t| t.dump()))
            .collect()
    }

    pub fn converged(&self) -> Result<bool> {
        let d = self.dumps()?;
        Ok(d.windows(2).all(|w| w[0] == w[1]))
    }
}

/// Runs a scenario to the end. Errors carry the offending line.
pub fn run(s: &Scenario) -> Result<Run> {
    let mut run = Run::new(s.combo, s.replicas, s.seed)?;
    for (line, cmd) in &s.commands {
        run.exec(cmd).map_err(|e| match e {
            Error::Parse { .. } => e,
            other => Error::Parse {
                line: *line,
                message: other.to_string(),
            },
        })?;
    }
    Ok(run)
}

/// `step N replica R action ...` lines, each followed by the indented tree.
pub fn transcript(steps: &[TraceStep]) -> String {
    let mut out = String::new();
    for (i, s) in steps.iter().enumerate() {
        let _ = writeln!(out, "step {} replica r{} {}", i + 1, s.replica + 1, s.what);
        for l in s.dump.lines() {
            let _ = writeln!(out, "  {l}");
        }
    }
    out
}
