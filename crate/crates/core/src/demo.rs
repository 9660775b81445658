//! Small canned runs printed by the `demo` subcommand.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::ordered::wootr::{order_elements, WootrElement};
use crate::sim::scenario::{self, Scenario};
use crate::tree::ConnectionPolicy;
use crate::word_tree::{connect_paths, Path};

pub const DEMOS: [&str; 4] = ["cycle", "orphan-policies", "word-example", "wootr-abc"];

pub const CYCLE_SCENARIO: &str = "\
combo repr=graph set=or flavor=op connect=skip map=several pi=none
replicas 2
r1 add x root
r1 add y x
r2 add y root
r2 add x y
sync
";

/// Concurrent removal of `m` and insertion of `n` below it.
pub fn orphan_scenario(connect: ConnectionPolicy) -> String {
    format!(
        "combo repr=graph set=or flavor=op connect={connect} map=shortest pi=none
replicas 2
r1 add m root
r2 deliver r1
r2 add n m
r1 rmv m
sync
"
    )
}

/// The set lookup used by the word example.
pub fn word_example_input() -> BTreeSet<Path> {
    ["", "a", "ab", "ac", "abcd", "abcde", "abcdefg"]
        .iter()
        .map(|w| Path::from_atoms(w))
        .collect()
}

/// `LT` of the word example under `policy`, in insertion order.
pub fn word_example(policy: ConnectionPolicy) -> Vec<String> {
    connect_paths(&word_example_input(), policy)
        .entries
        .iter()
        .map(|r| r.path.compact())
        .collect()
}

pub fn run_demo(name: &str) -> Result<String> {
    let mut out = String::new();
    match name {
        "cycle" => {
            let run = scenario::run(&Scenario::parse(CYCLE_SCENARIO)?)?;
            let t = run.replicas[0].lookup()?;
            out.push_str(&t.dump());
            let _ = writeln!(out, "instances: {}", t.len() - 1);
            let _ = writeln!(out, "converged: {}", run.converged()?);
        }
        "orphan-policies" => {
            for &p in ConnectionPolicy::ALL {
                let run = scenario::run(&Scenario::parse(&orphan_scenario(p))?)?;
                let _ = writeln!(out, "{p}:");
                for l in run.replicas[0].lookup()?.dump().lines() {
                    let _ = writeln!(out, "  {l}");
                }
            }
        }
        "word-example" => {
            for &p in ConnectionPolicy::ALL {
                let _ = writeln!(out, "{p}: {{{}}}", word_example(p).join(", "));
            }
        }
        "wootr-abc" => {
            let (b, e) = (WootrElement::Begin, WootrElement::End);
            let a = WootrElement::triple("a", b.clone(), e.clone());
            let bb = WootrElement::triple("b", a.clone(), e.clone());
            let c = WootrElement::triple("c", b, e);
            for x in [&a, &bb, &c] {
                let _ = writeln!(out, "{x}");
            }
            let order: String = order_elements([&a, &bb, &c])
                .iter()
                .filter_map(|x| x.atom().map(str::to_owned))
                .collect();
            let _ = writeln!(out, "order: {order}");
        }
        other => {
            return Err(Error::Parse {
                line: 0,
                message: format!("unknown demo {other:?}; try one of {}", DEMOS.join(", ")),
            })
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_demo_runs() {
        for d in DEMOS {
            assert!(!run_demo(d).unwrap().is_empty(), "{d}");
        }
        assert!(run_demo("nope").is_err());
    }

    #[test]
    fn cycle_has_four_instances() {
        assert!(run_demo("cycle").unwrap().contains("instances: 4\n"));
    }
}
