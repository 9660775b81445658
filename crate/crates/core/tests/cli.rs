use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tree-crdt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn demo_word_example_is_exact() {
    let o = cli(&["demo", "word-example"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "skip: {ε, a, ab, ac}\n\
         reappear: {ε, a, ab, ac, abc, abcd, abcde, abcdef, abcdefg}\n\
         root: {ε, a, ab, ac, d, de, g}\n\
         compact: {ε, a, ab, ac, abd, abde, abdeg}\n"
    );
}

#[test]
fn unknown_demo_is_a_usage_error() {
    assert_eq!(cli(&["demo", "nope"]).status.code(), Some(2));
    assert_eq!(cli(&[]).status.code(), Some(2));
}

#[test]
fn run_prints_transcript_and_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("s.txt");
    std::fs::write(
        &f,
        "# two replicas, one move each\n\
         combo repr=graph set=or flavor=op connect=skip map=several pi=none\n\
         replicas 2\n\
         r1 add x root\n\
         r1 add y x\n\
         r2 add y root\n\
         r2 add x y\n\
         sync\n",
    )
    .unwrap();
    let o = cli(&["run", f.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("step 1 replica r1 add x root\n"), "{out}");
    assert!(out.ends_with("converged: yes\n"), "{out}");
    assert!(out.contains("y/x"));

    let copy = dir.path().join("out.txt");
    let o = cli(&["run", f.to_str().unwrap(), "--out", copy.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(copy).unwrap(), out);
}

#[test]
fn run_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["run", dir.path().join("missing").to_str().unwrap()]).status.code(), Some(2));
    let f = dir.path().join("bad.txt");
    std::fs::write(&f, "combo repr=graph\nr1 jump x\n").unwrap();
    let o = cli(&["run", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn check_single_configuration() {
    let o = cli(&["check", "--repr", "word", "--set", "lww", "--connect", "compact", "--schedules", "3"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.starts_with("ok repr=word set=lww flavor=op connect=compact pi=none histories=3"), "{out}");
    assert!(out.contains("1 combos, 0 failing"));
}

#[test]
fn check_rejects_bad_flags() {
    assert_eq!(cli(&["check", "--set", "2p", "--map", "newer"]).status.code(), Some(2));
    assert_eq!(cli(&["check", "--repr", "word", "--map", "zero"]).status.code(), Some(2));
    assert_eq!(cli(&["check", "--ops", "0"]).status.code(), Some(2));
    assert_eq!(cli(&["check", "--mutate", "flip"]).status.code(), Some(2));
}

#[test]
fn mutation_is_caught_and_shrunk() {
    let o = cli(&[
        "check", "--set", "g", "--map", "shortest", "--mutate", "reverse-tie-break", "--schedules", "30",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.starts_with("FAIL "), "{out}");
    assert!(out.contains("counterexample"), "{out}");
    assert!(out.contains("divergence"), "{out}");
}
