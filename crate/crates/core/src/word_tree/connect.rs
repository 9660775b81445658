//! Path connection policies: from the set lookup `LS` to a prefix-closed
//! set of rendered paths `LT`.

use std::collections::{BTreeMap, BTreeSet};

use super::Path;
use crate::tree::ConnectionPolicy;

/// One path of `LT`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rendered {
    pub path: Path,
    /// The `LS` path drawn here; `None` for recreated prefixes.
    pub source: Option<Path>,
    pub ghost: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Connected {
    /// `LT` in insertion order: connected paths first, then each orphan in
    /// length order with whatever it added.
    pub entries: Vec<Rendered>,
    /// Where every kept `LS` path ended up.
    pub render_of: BTreeMap<Path, Path>,
    /// Prefix membership tests performed.
    pub probes: usize,
}

impl Connected {
    pub fn paths(&self) -> BTreeSet<Path> {
        self.entries.iter().map(|r| r.path.clone()).collect()
    }
}

pub fn connect_paths(ls: &BTreeSet<Path>, policy: ConnectionPolicy) -> Connected {
    let mut out = Connected::default();
    let mut lt: BTreeSet<Path> = BTreeSet::new();
    let eps = Path::root();
    let push = |out: &mut Connected, lt: &mut BTreeSet<Path>, path: Path, source: Option<Path>| {
        if let Some(s) = &source {
            out.render_of.insert(s.clone(), path.clone());
        }
        if lt.insert(path.clone()) {
            let ghost = source.is_none();
            out.entries.push(Rendered {
                path,
                source,
                ghost,
            });
        }
    };

    push(&mut out, &mut lt, eps.clone(), Some(eps.clone()));
    let mut orphans = Vec::new();
    for p in ls {
        if p.is_root() {
            continue;
        }
        let mut connected = true;
        for k in 1..p.len() {
            out.probes += 1;
            if !ls.contains(&p.prefix(k)) {
                connected = false;
                break;
            }
        }
        if connected {
            push(&mut out, &mut lt, p.clone(), Some(p.clone()));
        } else {
            orphans.push(p);
        }
    }

    for p in orphans {
        let n = p.len();
        // a_1..a_{j-1} is the last missing prefix; a_j..a_n all present
        let mut j = n;
        while j > 1 {
            out.probes += 1;
            if ls.contains(&p.prefix(j - 1)) {
                j -= 1;
            } else {
                break;
            }
        }
        match policy {
            ConnectionPolicy::Skip => {}
            ConnectionPolicy::Reappear => {
                for k in 1..=n {
                    let q = p.prefix(k);
                    out.probes += 1;
                    let src = ls.contains(&q).then(|| q.clone());
                    if src.is_some() || !lt.contains(&q) {
                        push(&mut out, &mut lt, q, src);
                    }
                }
            }
            ConnectionPolicy::Root => {
                let rendered = p.suffix(j - 1);
                push(&mut out, &mut lt, rendered, Some(p.clone()));
            }
            ConnectionPolicy::Compact => {
                // longest present prefix strictly before the missing one
                let mut m = j - 2;
                while m > 0 {
                    out.probes += 1;
                    if ls.contains(&p.prefix(m)) {
                        break;
                    }
                    m -= 1;
                }
                let anchor = out
                    .render_of
                    .get(&p.prefix(m))
                    .cloned()
                    .unwrap_or_else(Path::root);
                let rendered = anchor.join(&p.suffix(j - 1));
                push(&mut out, &mut lt, rendered, Some(p.clone()));
            }
        }
    }
    out
}
