//! Exhaustive replay of a history: every causal delivery order
//! (operation-based) or every merge order of the op snapshots
//! (state-based), checked step by step.

use std::collections::BTreeMap;

use super::history::History;
use super::oracle;
use crate::combo::{AnyTree, Repr, SetEvents};
use crate::edge_tree;
use crate::error::Result;
use crate::graph_tree::{GraphTree, TieBreak};
use crate::tree::LookupTree;

/// Deliberate faults, to show that the checks catch them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    /// The shortest policy scans out-edges in reverse on one replica.
    ReverseTieBreak,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    /// `"lookup"` when the client trees differ, `"state"` when only the
    /// replicated states do.
    pub what: &'static str,
    pub order_a: Vec<usize>,
    pub dump_a: String,
    pub order_b: Vec<usize>,
    pub dump_b: String,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub orders: usize,
    pub steps: usize,
    /// Set operations compared against the membership oracle.
    pub oracle_ops: usize,
    pub oracle_checks: usize,
    pub invalid: Vec<String>,
    pub oracle_failures: Vec<String>,
    pub incremental_mismatches: Vec<String>,
    pub parent_changes: usize,
    pub monotonic_violations: Vec<String>,
    pub divergence: Option<Divergence>,
    pub final_dump: Option<String>,
}

impl Report {
    pub fn is_clean(&self) -> bool {
        self.invalid.is_empty()
            && self.oracle_failures.is_empty()
            && self.incremental_mismatches.is_empty()
            && self.monotonic_violations.is_empty()
            && self.divergence.is_none()
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        out.extend(self.invalid.iter().map(|s| format!("invalid tree: {s}")));
        out.extend(self.oracle_failures.iter().map(|s| format!("oracle: {s}")));
        out.extend(
            self.incremental_mismatches
                .iter()
                .map(|s| format!("incremental: {s}")),
        );
        out.extend(
            self.monotonic_violations
                .iter()
                .map(|s| format!("parent change: {s}")),
        );
        if let Some(d) = &self.divergence {
            out.push(format!(
                "{} divergence: order {:?} vs {:?}\n{}---\n{}",
                d.what, d.order_a, d.order_b, d.dump_a, d.dump_b
            ));
        }
        out
    }
}

/// Identity → parent key for every non-ghost node.
pub fn placements(t: &LookupTree) -> BTreeMap<String, String> {
    t.nodes()
        .filter(|(_, n)| !n.ghost)
        .filter_map(|(k, n)| {
            let id = n.origin.clone().unwrap_or_else(|| k.clone());
            n.parent.clone().map(|p| (id, p))
        })
        .collect()
}

/// Identities present in both trees whose parent differs.
pub fn parent_changes(before: &BTreeMap<String, String>, after: &BTreeMap<String, String>) -> Vec<String> {
    before
        .iter()
        .filter_map(|(id, p)| match after.get(id) {
            Some(q) if q != p => Some(format!("{id}: {p} -> {q}")),
            _ => None,
        })
        .collect()
}

struct Final {
    order: Vec<usize>,
    dump: String,
    state: String,
}

struct Explorer<'h> {
    h: &'h History,
    monotonic: bool,
    report: Report,
    first: Option<Final>,
    /// Stop recording details after this many failures of one kind.
    limit: usize,
}

fn push_limited(v: &mut Vec<String>, limit: usize, msg: String) {
    if v.len() < limit {
        v.push(msg);
    }
}

impl<'h> Explorer<'h> {
    fn check_step(
        &mut self,
        tree: &AnyTree,
        order: &[usize],
        events: &[&SetEvents],
        prev: &BTreeMap<String, String>,
    ) -> BTreeMap<String, String> {
        self.report.steps += 1;
        let lim = self.limit;
        let lookup = match tree.lookup() {
            Ok(t) => t,
            Err(e) => {
                push_limited(&mut self.report.invalid, lim, format!("order {order:?}: {e}"));
                return prev.clone();
            }
        };
        if let Err(e) = lookup.validate() {
            push_limited(&mut self.report.invalid, lim, format!("order {order:?}: {e}"));
        }
        match tree.batch_lookup() {
            Ok(b) if b == lookup => {}
            Ok(b) => push_limited(
                &mut self.report.incremental_mismatches,
                lim,
                format!("order {order:?}\n{}---\n{}", lookup.dump(), b.dump()),
            ),
            Err(e) => push_limited(&mut self.report.invalid, lim, format!("order {order:?}: {e}")),
        }
        match oracle::check(tree, events.iter().copied()) {
            Ok(n) => {
                self.report.oracle_ops += n;
                self.report.oracle_checks += 1;
            }
            Err(e) => push_limited(&mut self.report.oracle_failures, lim, format!("order {order:?}: {e}")),
        }
        let now = placements(&lookup);
        if self.h.is_op_based() {
            let changes = parent_changes(prev, &now);
            self.report.parent_changes += changes.len();
            if self.monotonic {
                for c in changes {
                    push_limited(&mut self.report.monotonic_violations, lim, format!("order {order:?}: {c}"));
                }
            }
        }
        now
    }

    fn finish(&mut self, tree: &AnyTree, order: &[usize]) {
        self.report.orders += 1;
        let dump = tree
            .lookup()
            .map(|t| t.dump())
            .unwrap_or_else(|e| format!("error: {e}\n"));
        let state = tree.to_canonical();
        match &self.first {
            None => {
                self.report.final_dump = Some(dump.clone());
                self.first = Some(Final {
                    order: order.to_vec(),
                    dump,
                    state,
                })
            }
            Some(f) if self.report.divergence.is_none() => {
                let what = if f.dump != dump {
                    Some("lookup")
                } else if f.state != state {
                    Some("state")
                } else {
                    None
                };
                if let Some(what) = what {
                    let (a, b) = if what == "lookup" {
                        (f.dump.clone(), dump)
                    } else {
                        (f.state.clone(), state)
                    };
                    self.report.divergence = Some(Divergence {
                        what,
                        order_a: f.order.clone(),
                        dump_a: a,
                        order_b: order.to_vec(),
                        dump_b: b,
                    });
                }
            }
            Some(_) => {}
        }
    }

    fn op_dfs(
        &mut self,
        tree: &AnyTree,
        done: u64,
        order: &mut Vec<usize>,
        events: &mut Vec<SetEvents>,
        prev: &BTreeMap<String, String>,
    ) {
        let n = self.h.ops.len();
        if order.len() == n {
            self.finish(tree, order);
            return;
        }
        for i in 0..n {
            let op = &self.h.ops[i];
            if done >> i & 1 == 1 || op.before & !done != 0 {
                continue;
            }
            let mut t = tree.clone();
            events.push(t.apply(&op.env.payload));
            order.push(i);
            let refs: Vec<&SetEvents> = events.iter().collect();
            let now = self.check_step(&t, order, &refs, prev);
            self.op_dfs(&t, done | 1 << i, order, events, &now);
            order.pop();
            events.pop();
        }
    }

    fn state_dfs(&mut self, tree: &AnyTree, done: u64, included: u64, order: &mut Vec<usize>) {
        let n = self.h.ops.len();
        if order.len() == n {
            self.finish(tree, order);
            return;
        }
        for i in 0..n {
            if done >> i & 1 == 1 {
                continue;
            }
            let op = &self.h.ops[i];
            let mut t = tree.clone();
            if let Err(e) = t.merge(op.snapshot.as_ref().expect("state-based ops carry snapshots")) {
                push_limited(&mut self.report.invalid, self.limit, format!("merge failed: {e}"));
                continue;
            }
            let inc = included | op.includes;
            order.push(i);
            let refs: Vec<&SetEvents> = (0..n)
                .filter(|j| inc >> j & 1 == 1)
                .map(|j| &self.h.ops[j].events)
                .collect();
            self.check_step(&t, order, &refs, &BTreeMap::new());
            self.state_dfs(&t, done | 1 << i, inc, order);
            order.pop();
        }
    }
}

/// Fresh observer replica state, possibly with a fault injected.
fn observer(h: &History, mutation: Option<Mutation>) -> Result<AnyTree> {
    match (mutation, h.combo.graph_config()) {
        (Some(Mutation::ReverseTieBreak), Some(mut cfg)) => {
            cfg.tie_break = TieBreak::Descending;
            let t = if h.combo.repr == Repr::Edge {
                edge_tree::new(cfg)?
            } else {
                GraphTree::new(cfg)?
            };
            Ok(AnyTree::Graph(t))
        }
        _ => h.combo.build(),
    }
}

fn run(h: &History, mutation: Option<Mutation>) -> Result<Report> {
    let mut ex = Explorer {
        h,
        monotonic: h.combo.is_monotonic(),
        report: Report::default(),
        first: None,
        limit: 5,
    };
    let root = observer(h, mutation)?;
    if h.is_op_based() {
        ex.op_dfs(&root, 0, &mut Vec::new(), &mut Vec::new(), &BTreeMap::new());
    } else {
        ex.state_dfs(&root, 0, 0, &mut Vec::new());
    }
    Ok(ex.report)
}

/// Replays `h` in every admissible order on a fresh replica and checks each
/// step. With a mutation, a second faulty replica replays too and its final
/// tree is compared with the correct one.
pub fn explore(h: &History, mutation: Option<Mutation>) -> Result<Report> {
    let mut report = run(h, None)?;
    if let Some(m) = mutation {
        let faulty = run(h, Some(m))?;
        if report.divergence.is_none() {
            if let (Some(a), Some(b)) = (&report.final_dump, &faulty.final_dump) {
                if a != b {
                    report.divergence = Some(Divergence {
                        what: "lookup",
                        order_a: Vec::new(),
                        dump_a: a.clone(),
                        order_b: Vec::new(),
                        dump_b: b.clone(),
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Greedily drops ops while the history still fails.
pub fn shrink(h: &History, mutation: Option<Mutation>) -> Result<History> {
    let mut cur = h.clone();
    loop {
        let mut smaller = None;
        for i in (0..cur.ops.len()).rev() {
            let mut mask: u64 = (1u64 << cur.ops.len()) - 1;
            mask &= !(1 << i);
            // later ops generated on top of op i go too
            for (j, o) in cur.ops.iter().enumerate() {
                if o.before >> i & 1 == 1 {
                    mask &= !(1 << j);
                }
            }
            let cand = cur.restrict(mask);
            if cand.ops.is_empty() {
                continue;
            }
            if !explore(&cand, mutation)?.is_clean() {
                smaller = Some(cand);
                break;
            }
        }
        match smaller {
            Some(s) => cur = s,
            None => return Ok(cur),
        }
    }
}
