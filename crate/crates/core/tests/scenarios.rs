use tree_crdt::sim::{scenario, Scenario};
use tree_crdt::tree::LookupTree;

fn finish(text: &str) -> Vec<LookupTree> {
    let run = scenario::run(&Scenario::parse(text).unwrap()).unwrap();
    assert!(run.converged().unwrap(), "{}", scenario::transcript(&run.steps));
    run.replicas.iter().map(|r| r.lookup().unwrap()).collect()
}

fn parent<'a>(t: &'a LookupTree, key: &str) -> Option<&'a str> {
    t.get(key).and_then(|n| n.parent.as_deref())
}

#[test]
fn orphan_under_each_policy() {
    let base = "replicas 2\nr1 add m root\nr1 add k m\nr2 deliver r1\nr2 add n k\nr1 rmv m\nsync\n";
    let cases = [
        ("skip", None),
        ("reappear", Some("k")),
        ("root", Some("root")),
        ("compact", Some("root")),
    ];
    for (policy, want) in cases {
        let t = &finish(&format!(
            "combo repr=graph set=or flavor=op connect={policy} map=shortest pi=none\n{base}"
        ))[0];
        assert_eq!(parent(t, "n"), want, "{policy}\n{}", t.dump());
    }
}

#[test]
fn edge_tree_keeps_concurrent_edge() {
    let text = |repr: &str| {
        format!(
            "combo repr={repr} set=lww flavor=op connect=skip map=zero pi=none
replicas 2
r1 add y root
r1 add z root
r2 deliver r1
r1 add x y
r1 rmv x
r2 add x z
sync
"
        )
    };
    assert_eq!(parent(&finish(&text("edge"))[0], "x"), Some("z"));
    assert_eq!(parent(&finish(&text("graph"))[0], "x"), None);
}

#[test]
fn state_based_word_tree() {
    let t = &finish(
        "combo repr=word set=or flavor=state connect=reappear pi=none
replicas 3
r1 add a /
r1 add b a
r2 merge r1
r3 merge r2
r2 rmv a
r3 add c a/b
sync
",
    )[0];
    // the removed prefix comes back as a ghost above the concurrent add
    assert!(t.get("a").unwrap().ghost, "{}", t.dump());
    assert_eq!(parent(t, "a/b/c"), Some("a/b"));
}

#[test]
fn wootr_children_collapse_but_upi_children_do_not() {
    let body = "replicas 2\nr1 add p root\nr2 deliver r1\nr1 add q p\nr2 add q p\nsync\n";
    let w = &finish(&format!("combo repr=graph set=or flavor=op connect=skip map=zero pi=wootr\n{body}"))[0];
    assert_eq!(w.children("p").len(), 1, "{}", w.dump());

    let body = "replicas 2\nr1 add p root\nr2 deliver r1\nr1 add q p\nr2 add q p\nsync\n";
    let u = &finish(&format!("combo repr=graph set=2p flavor=op connect=skip map=zero pi=node-upi\n{body}"))[0];
    assert_eq!(u.children(u.children("root")[0].as_str()).len(), 2, "{}", u.dump());
}

#[test]
fn sibling_order_follows_insert_positions() {
    for pi in ["edge-upi", "wootr"] {
        let t = &finish(&format!(
            "combo repr=graph set=or flavor=op connect=skip map=zero pi={pi}
replicas 1
r1 add c root
r1 add a root at 0
r1 add b root at 1
sync
"
        ))[0];
        let kids: Vec<&str> = t.children("root").iter().map(|k| t.get(k).unwrap().label.as_str()).collect();
        assert_eq!(kids, ["a", "b", "c"], "{pi}");
    }
}

#[test]
fn two_phase_prefix_removal_is_commutative() {
    let text = "combo repr=word set=2p flavor=op connect=skip pi=none
replicas 2
r1 add a /
r2 deliver r1
r2 add b a
r1 rmv a
r1 deliver r2
r2 deliver r1
sync
";
    for t in finish(text) {
        assert_eq!(t.len(), 1, "{}", t.dump());
    }
}
