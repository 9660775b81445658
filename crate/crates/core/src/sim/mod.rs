//! Simulation harness: random histories, exhaustive replay, membership
//! oracle, scenarios.

pub mod explore;
pub mod history;
pub mod oracle;
pub mod scenario;

pub use explore::{explore, parent_changes, placements, shrink, Divergence, Mutation, Report};
pub use scenario::{Command, Run, Scenario};
pub use history::{generate, Action, GenParams, GeneratedOp, History, TraceStep};

use crate::combo::Combo;
use crate::error::Result;

/// Aggregate of exhaustive runs over several seeded histories of one combo.
#[derive(Clone, Debug, Default)]
pub struct ComboResult {
    pub histories: usize,
    pub orders: usize,
    pub steps: usize,
    pub oracle_checks: usize,
    pub oracle_ops: usize,
    pub parent_changes: usize,
    /// Seed and failure descriptions of every unclean history.
    pub failures: Vec<(u64, Vec<String>)>,
}

impl ComboResult {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Generates `count` histories from consecutive seeds starting at
/// `params.seed` and explores each exhaustively.
pub fn check_combo(combo: Combo, params: GenParams, count: usize, mutation: Option<Mutation>) -> Result<ComboResult> {
    let mut out = ComboResult::default();
    for k in 0..count as u64 {
        let seed = params.seed.wrapping_add(k);
        let h = generate(combo, GenParams { seed, ..params })?;
        let r = explore(&h, mutation)?;
        out.histories += 1;
        out.orders += r.orders;
        out.steps += r.steps;
        out.oracle_checks += r.oracle_checks;
        out.oracle_ops += r.oracle_ops;
        out.parent_changes += r.parent_changes;
        if !r.is_clean() {
            out.failures.push((seed, r.failures()));
        }
    }
    Ok(out)
}
