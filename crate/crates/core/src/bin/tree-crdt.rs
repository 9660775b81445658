use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tree_crdt::combo::Combo;
use tree_crdt::demo;
use tree_crdt::sim::{self, scenario, GenParams, Mutation, Scenario};

#[derive(Parser)]
#[command(name = "tree-crdt", version, about = "Replicated trees built from set CRDTs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file and print the transcript.
    Run {
        file: std::path::PathBuf,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Generate random histories and replay them in every delivery order.
    Check {
        #[arg(long, default_value = "graph")]
        repr: String,
        #[arg(long = "set", default_value = "or")]
        kind: String,
        #[arg(long, default_value = "op")]
        flavor: String,
        #[arg(long, default_value = "skip")]
        connect: String,
        /// Defaults to `zero` for graph and edge trees; word trees take none.
        #[arg(long)]
        map: Option<String>,
        #[arg(long, default_value = "none")]
        pi: String,
        /// Check every legal configuration instead of one.
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..=60))]
        ops: u64,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..=16))]
        replicas: u64,
        /// Number of histories, from consecutive seeds.
        #[arg(long, default_value_t = 1)]
        schedules: usize,
        /// Inject a fault on one replica (reverse-tie-break).
        #[arg(long)]
        mutate: Option<String>,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Print one of the canned demos.
    Demo {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(demo::DEMOS))]
        name: String,
    },
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn emit(text: &str, out: &Option<std::path::PathBuf>) -> Result<(), ExitCode> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_file(file: &std::path::Path, out: &Option<std::path::PathBuf>) -> ExitCode {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => return usage(format!("{}: {e}", file.display())),
    };
    let s = match Scenario::parse(&text) {
        Ok(s) => s,
        Err(e) => return usage(e),
    };
    let run = match scenario::run(&s) {
        Ok(r) => r,
        Err(e) => return usage(e),
    };
    let mut text = scenario::transcript(&run.steps);
    let converged = run.converged().unwrap_or(false);
    let synced = matches!(s.commands.last(), Some((_, sim::Command::Sync)));
    if synced {
        let _ = writeln!(text, "converged: {}", if converged { "yes" } else { "no" });
    }
    if let Err(code) = emit(&text, out) {
        return code;
    }
    if synced && !converged {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn check(combos: Vec<Combo>, params: GenParams, schedules: usize, mutation: Option<Mutation>, out: &Option<std::path::PathBuf>) -> ExitCode {
    let mut text = String::new();
    let mut failed = 0;
    let mut orders = 0;
    for c in &combos {
        let r = match sim::check_combo(*c, params, schedules, mutation) {
            Ok(r) => r,
            Err(e) => return usage(e),
        };
        orders += r.orders;
        let status = if r.is_clean() { "ok" } else { "FAIL" };
        let _ = writeln!(
            text,
            "{status} {c} histories={} orders={} steps={} parent_changes={}",
            r.histories, r.orders, r.steps, r.parent_changes
        );
        if let Some((seed, _)) = r.failures.first() {
            failed += 1;
            let h = match sim::generate(*c, GenParams { seed: *seed, ..params }) {
                Ok(h) => h,
                Err(e) => return usage(e),
            };
            let small = sim::shrink(&h, mutation).unwrap_or(h);
            let _ = writeln!(text, "  counterexample (seed {seed}, {} ops):", small.ops.len());
            for o in &small.ops {
                let _ = writeln!(text, "    r{} {}", o.origin + 1, o.action);
            }
            if let Ok(rep) = sim::explore(&small, mutation) {
                for f in rep.failures() {
                    for l in f.lines() {
                        let _ = writeln!(text, "    {l}");
                    }
                }
            }
        }
    }
    let _ = writeln!(
        text,
        "{} combos, {} failing, {orders} delivery orders",
        combos.len(),
        failed
    );
    if let Err(code) = emit(&text, out) {
        return code;
    }
    if failed > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run { file, out } => run_file(&file, &out),
        Cmd::Check {
            repr,
            kind,
            flavor,
            connect,
            map,
            pi,
            all,
            seed,
            ops,
            replicas,
            schedules,
            mutate,
            out,
        } => {
            let mutation = match mutate.as_deref() {
                None => None,
                Some("reverse-tie-break") => Some(Mutation::ReverseTieBreak),
                Some(m) => return usage(format!("unknown mutation {m:?}")),
            };
            let combos = if all {
                Combo::all()
            } else {
                let map = match (repr.as_str(), map) {
                    ("word", Some(_)) => return usage("word trees take no --map"),
                    ("word", None) => String::new(),
                    (_, m) => format!(" map={}", m.unwrap_or_else(|| "zero".into())),
                };
                let spec = format!("repr={repr} set={kind} flavor={flavor} connect={connect}{map} pi={pi}");
                match Combo::parse(&spec) {
                    Ok(c) => vec![c],
                    Err(e) => return usage(e),
                }
            };
            let params = GenParams {
                replicas: replicas as usize,
                ops: ops as usize,
                seed,
            };
            check(combos, params, schedules, mutation, &out)
        }
        Cmd::Demo { name } => match demo::run_demo(&name) {
            Ok(t) => {
                print!("{t}");
                ExitCode::SUCCESS
            }
            Err(e) => usage(e),
        },
    }
}
