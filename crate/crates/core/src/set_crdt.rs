//! Set CRDTs: grow-only, two-phase, last-writer-wins, counter and
//! observed-remove sets, each in a state-based (merge) and an
//! operation-based (apply under causal delivery) flavor.
//!
//! Every variant exposes the same client view: [`SetState::lookup`], a plain
//! finite set. What differs is how a concurrent add and remove of the same
//! element are resolved:
//!
//! * `LwwSet`: present iff the operation with the highest timestamp is an add.
//! * `CSet`: present iff the sum of add deltas exceeds the sum of remove deltas.
//! * `OrSet`: present iff some tag attached by an add is not covered by a remove.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::causal::{LamportTimestamp, ReplicaClock, Tag};
use crate::error::{precondition, Error, Result};
use crate::wire::{self, map_pairs};

/// Anything that can be stored in a set CRDT.
pub trait Element: Clone + Ord + fmt::Debug + Serialize + DeserializeOwned {}

impl<T: Clone + Ord + fmt::Debug + Serialize + DeserializeOwned> Element for T {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SetKind {
    GSet,
    TwoPSet,
    LwwSet,
    CSet,
    OrSet,
}

impl SetKind {
    pub const ALL: [SetKind; 5] = [
        SetKind::GSet,
        SetKind::TwoPSet,
        SetKind::LwwSet,
        SetKind::CSet,
        SetKind::OrSet,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            SetKind::GSet => "g",
            SetKind::TwoPSet => "2p",
            SetKind::LwwSet => "lww",
            SetKind::CSet => "c",
            SetKind::OrSet => "or",
        }
    }

    pub fn parse(s: &str) -> Option<SetKind> {
        SetKind::ALL.into_iter().find(|k| k.short_name() == s)
    }

    pub fn supports_remove(self) -> bool {
        self != SetKind::GSet
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Flavor {
    StateBased,
    OpBased,
}

impl Flavor {
    pub const ALL: [Flavor; 2] = [Flavor::StateBased, Flavor::OpBased];

    pub fn short_name(self) -> &'static str {
        match self {
            Flavor::StateBased => "state",
            Flavor::OpBased => "op",
        }
    }

    pub fn parse(s: &str) -> Option<Flavor> {
        Flavor::ALL.into_iter().find(|f| f.short_name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Verb {
    Add,
    Rmv,
}

/// Variant-specific operation metadata.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OpMeta {
    None,
    Stamp(LamportTimestamp),
    /// C-Set counter change. `tags` holds `|delta|` fresh markers that the
    /// state-based payload stores in its increment or decrement set.
    Delta { delta: i64, tags: Vec<Tag> },
    Tags(Vec<Tag>),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SetOp<E> {
    pub verb: Verb,
    pub element: E,
    pub meta: OpMeta,
}

/// Source of timestamps and tags for one generated operation. All set
/// operations produced for a single tree operation share its timestamp.
pub struct Issuer<'a> {
    clock: &'a mut ReplicaClock,
    stamp: LamportTimestamp,
}

impl<'a> Issuer<'a> {
    pub fn new(clock: &'a mut ReplicaClock) -> Self {
        let stamp = clock.next_timestamp();
        Issuer { clock, stamp }
    }

    pub fn stamp(&self) -> LamportTimestamp {
        self.stamp
    }

    pub fn tag(&mut self) -> Tag {
        self.clock.fresh_tag()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LwwEntry {
    pub stamp: LamportTimestamp,
    pub visible: bool,
}

/// A pair of grow-only tag sets: increments/decrements for the C-Set, added
/// and removed tags for the OR-Set.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagPair {
    pub plus: BTreeSet<Tag>,
    pub minus: BTreeSet<Tag>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound(serialize = "E: Serialize", deserialize = "E: DeserializeOwned + Ord"))]
enum Payload<E> {
    Grow {
        added: BTreeSet<E>,
    },
    TwoPhase {
        added: BTreeSet<E>,
        removed: BTreeSet<E>,
    },
    Lww {
        #[serde(with = "map_pairs")]
        entries: BTreeMap<E, LwwEntry>,
    },
    CounterTags {
        #[serde(with = "map_pairs")]
        entries: BTreeMap<E, TagPair>,
    },
    Counter {
        #[serde(with = "map_pairs")]
        entries: BTreeMap<E, i64>,
    },
    ObservedTags {
        #[serde(with = "map_pairs")]
        entries: BTreeMap<E, TagPair>,
    },
    Observed {
        #[serde(with = "map_pairs")]
        entries: BTreeMap<E, BTreeSet<Tag>>,
    },
}

/// Payload of one set CRDT together with its kind and flavor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound(serialize = "E: Serialize", deserialize = "E: DeserializeOwned + Ord"))]
pub struct SetState<E> {
    kind: SetKind,
    flavor: Flavor,
    payload: Payload<E>,
}

impl<E: Element> SetState<E> {
    pub fn new(kind: SetKind, flavor: Flavor) -> Self {
        let payload = match (kind, flavor) {
            (SetKind::GSet, _) => Payload::Grow {
                added: BTreeSet::new(),
            },
            (SetKind::TwoPSet, _) => Payload::TwoPhase {
                added: BTreeSet::new(),
                removed: BTreeSet::new(),
            },
            (SetKind::LwwSet, _) => Payload::Lww {
                entries: BTreeMap::new(),
            },
            (SetKind::CSet, Flavor::StateBased) => Payload::CounterTags {
                entries: BTreeMap::new(),
            },
            (SetKind::CSet, Flavor::OpBased) => Payload::Counter {
                entries: BTreeMap::new(),
            },
            (SetKind::OrSet, Flavor::StateBased) => Payload::ObservedTags {
                entries: BTreeMap::new(),
            },
            (SetKind::OrSet, Flavor::OpBased) => Payload::Observed {
                entries: BTreeMap::new(),
            },
        };
        SetState {
            kind,
            flavor,
            payload,
        }
    }

    pub fn kind(&self) -> SetKind {
        self.kind
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    /// Membership in the lookup.
    pub fn contains(&self, e: &E) -> bool {
        match &self.payload {
            Payload::Grow { added } => added.contains(e),
            Payload::TwoPhase { added, removed } => added.contains(e) && !removed.contains(e),
            Payload::Lww { entries } => entries.get(e).is_some_and(|x| x.visible),
            Payload::CounterTags { entries } => {
                entries.get(e).is_some_and(|p| p.plus.len() > p.minus.len())
            }
            Payload::Counter { entries } => entries.get(e).is_some_and(|&k| k > 0),
            Payload::ObservedTags { entries } => {
                entries.get(e).is_some_and(|p| p.plus.difference(&p.minus).next().is_some())
            }
            Payload::Observed { entries } => entries.get(e).is_some_and(|t| !t.is_empty()),
        }
    }

    /// Every element the payload knows about, present or not.
    fn known(&self) -> Box<dyn Iterator<Item = &E> + '_> {
        match &self.payload {
            Payload::Grow { added } | Payload::TwoPhase { added, .. } => Box::new(added.iter()),
            Payload::Lww { entries } => Box::new(entries.keys()),
            Payload::CounterTags { entries } | Payload::ObservedTags { entries } => {
                Box::new(entries.keys())
            }
            Payload::Counter { entries } => Box::new(entries.keys()),
            Payload::Observed { entries } => Box::new(entries.keys()),
        }
    }

    /// Elements currently in the lookup, in ascending order.
    pub fn present(&self) -> impl Iterator<Item = &E> + '_ {
        self.known().filter(move |e| self.contains(e))
    }

    pub fn lookup(&self) -> BTreeSet<E> {
        self.present().cloned().collect()
    }

    /// Timestamp attached to `e` by an LWW payload.
    pub fn lww_stamp(&self, e: &E) -> Option<LamportTimestamp> {
        match &self.payload {
            Payload::Lww { entries } => entries.get(e).map(|x| x.stamp),
            _ => None,
        }
    }

    /// Counter value of a C-Set element (`|P| - |N|` for the state flavor).
    pub fn counter(&self, e: &E) -> i64 {
        match &self.payload {
            Payload::Counter { entries } => entries.get(e).copied().unwrap_or(0),
            Payload::CounterTags { entries } => entries
                .get(e)
                .map(|p| p.plus.len() as i64 - p.minus.len() as i64)
                .unwrap_or(0),
            _ => 0,
        }
    }

    /// Tags of an OR-Set element that are not yet removed.
    pub fn live_tags(&self, e: &E) -> Vec<Tag> {
        match &self.payload {
            Payload::Observed { entries } => entries
                .get(e)
                .map(|t| t.iter().copied().collect())
                .unwrap_or_default(),
            Payload::ObservedTags { entries } => entries
                .get(e)
                .map(|p| p.plus.difference(&p.minus).copied().collect())
                .unwrap_or_default(),
            _ => Vec::new(),
        }
    }

    /// True when `e` was removed from a two-phase set and can never return.
    pub fn is_retired(&self, e: &E) -> bool {
        matches!(&self.payload, Payload::TwoPhase { removed, .. } if removed.contains(e))
    }

    /// Builds an add without checking the set-level precondition. Tree CRDTs
    /// use this because their preconditions are evaluated on the tree lookup.
    pub fn prepare_add(&self, e: &E, issuer: &mut Issuer<'_>) -> SetOp<E> {
        let meta = match self.kind {
            SetKind::GSet | SetKind::TwoPSet => OpMeta::None,
            SetKind::LwwSet => OpMeta::Stamp(issuer.stamp()),
            SetKind::CSet => {
                let k = self.counter(e);
                let delta = if k <= 0 { 1 - k } else { 0 };
                let tags = (0..delta).map(|_| issuer.tag()).collect();
                OpMeta::Delta { delta, tags }
            }
            SetKind::OrSet => OpMeta::Tags(vec![issuer.tag()]),
        };
        SetOp {
            verb: Verb::Add,
            element: e.clone(),
            meta,
        }
    }

    /// Builds a remove of a present element, or `None` when the element is not
    /// in the lookup or the kind cannot remove.
    pub fn prepare_rmv(&self, e: &E, issuer: &mut Issuer<'_>) -> Option<SetOp<E>> {
        if !self.kind.supports_remove() || !self.contains(e) {
            return None;
        }
        let meta = match self.kind {
            SetKind::GSet => unreachable!(),
            SetKind::TwoPSet => OpMeta::None,
            SetKind::LwwSet => OpMeta::Stamp(issuer.stamp()),
            SetKind::CSet => {
                let k = self.counter(e);
                let tags = (0..k).map(|_| issuer.tag()).collect();
                OpMeta::Delta { delta: -k, tags }
            }
            SetKind::OrSet => OpMeta::Tags(self.live_tags(e)),
        };
        Some(SetOp {
            verb: Verb::Rmv,
            element: e.clone(),
            meta,
        })
    }

    /// Generates and locally applies an add.
    pub fn gen_add(&mut self, e: &E, clock: &mut ReplicaClock) -> Result<SetOp<E>> {
        if self.contains(e) {
            return Err(precondition(format!("{e:?} already in the set")));
        }
        if self.is_retired(e) {
            return Err(precondition(format!(
                "{e:?} was removed from a two-phase set and cannot be added again"
            )));
        }
        let mut issuer = Issuer::new(clock);
        let op = self.prepare_add(e, &mut issuer);
        self.apply(&op);
        Ok(op)
    }

    /// Generates and locally applies a remove.
    pub fn gen_rmv(&mut self, e: &E, clock: &mut ReplicaClock) -> Result<SetOp<E>> {
        if !self.kind.supports_remove() {
            return Err(precondition("a grow-only set cannot remove elements"));
        }
        if !self.contains(e) {
            return Err(precondition(format!("{e:?} not in the set")));
        }
        let mut issuer = Issuer::new(clock);
        let op = self
            .prepare_rmv(e, &mut issuer)
            .expect("present elements are removable");
        self.apply(&op);
        Ok(op)
    }

    /// Applies an operation generated locally or by a remote replica.
    pub fn apply(&mut self, op: &SetOp<E>) {
        let e = &op.element;
        match (&mut self.payload, op.verb, &op.meta) {
            (Payload::Grow { added }, Verb::Add, _) => {
                added.insert(e.clone());
            }
            (Payload::Grow { .. }, Verb::Rmv, _) => {}
            (Payload::TwoPhase { added, .. }, Verb::Add, _) => {
                added.insert(e.clone());
            }
            (Payload::TwoPhase { removed, .. }, Verb::Rmv, _) => {
                removed.insert(e.clone());
            }
            (Payload::Lww { entries }, verb, &OpMeta::Stamp(stamp)) => {
                let newer = entries.get(e).is_none_or(|x| stamp > x.stamp);
                if newer {
                    entries.insert(
                        e.clone(),
                        LwwEntry {
                            stamp,
                            visible: verb == Verb::Add,
                        },
                    );
                }
            }
            (Payload::CounterTags { entries }, verb, OpMeta::Delta { tags, .. }) => {
                if tags.is_empty() {
                    return;
                }
                let pair = entries.entry(e.clone()).or_default();
                let target = match verb {
                    Verb::Add => &mut pair.plus,
                    Verb::Rmv => &mut pair.minus,
                };
                target.extend(tags.iter().copied());
            }
            (Payload::Counter { entries }, _, &OpMeta::Delta { delta, .. }) => {
                let k = entries.entry(e.clone()).or_insert(0);
                *k += delta;
                if *k == 0 {
                    entries.remove(e);
                }
            }
            (Payload::ObservedTags { entries }, verb, OpMeta::Tags(tags)) => {
                if tags.is_empty() {
                    return;
                }
                let pair = entries.entry(e.clone()).or_default();
                let target = match verb {
                    Verb::Add => &mut pair.plus,
                    Verb::Rmv => &mut pair.minus,
                };
                target.extend(tags.iter().copied());
            }
            (Payload::Observed { entries }, Verb::Add, OpMeta::Tags(tags)) => {
                entries
                    .entry(e.clone())
                    .or_default()
                    .extend(tags.iter().copied());
            }
            (Payload::Observed { entries }, Verb::Rmv, OpMeta::Tags(tags)) => {
                if let Some(live) = entries.get_mut(e) {
                    for t in tags {
                        live.remove(t);
                    }
                    if live.is_empty() {
                        entries.remove(e);
                    }
                }
            }
            (_, _, meta) => panic!("operation metadata {meta:?} does not match {:?}", self.kind),
        }
    }

    /// Least upper bound of two state-based payloads.
    pub fn merge(&mut self, other: &SetState<E>) -> Result<()> {
        if self.kind != other.kind || self.flavor != other.flavor {
            return Err(Error::KindMismatch(format!(
                "{:?}/{:?} vs {:?}/{:?}",
                self.kind, self.flavor, other.kind, other.flavor
            )));
        }
        if self.flavor != Flavor::StateBased {
            return Err(Error::KindMismatch(
                "operation-based payloads are not merged".into(),
            ));
        }
        match (&mut self.payload, &other.payload) {
            (Payload::Grow { added }, Payload::Grow { added: b }) => {
                added.extend(b.iter().cloned());
            }
            (
                Payload::TwoPhase { added, removed },
                Payload::TwoPhase {
                    added: ba,
                    removed: br,
                },
            ) => {
                added.extend(ba.iter().cloned());
                removed.extend(br.iter().cloned());
            }
            (Payload::Lww { entries }, Payload::Lww { entries: b }) => {
                for (e, entry) in b {
                    let newer = entries.get(e).is_none_or(|x| entry.stamp > x.stamp);
                    if newer {
                        entries.insert(e.clone(), *entry);
                    }
                }
            }
            (Payload::CounterTags { entries }, Payload::CounterTags { entries: b })
            | (Payload::ObservedTags { entries }, Payload::ObservedTags { entries: b }) => {
                for (e, pair) in b {
                    let mine = entries.entry(e.clone()).or_default();
                    mine.plus.extend(pair.plus.iter().copied());
                    mine.minus.extend(pair.minus.iter().copied());
                }
            }
            _ => unreachable!("kind and flavor already checked"),
        }
        Ok(())
    }

    /// Deterministic text form with sorted keys and explicit kind/flavor.
    pub fn to_canonical(&self) -> String {
        wire::to_canonical(self)
    }

    pub fn from_canonical(text: &str) -> Result<Self> {
        wire::from_canonical(text)
    }
}

impl<E: Element> SetOp<E> {
    pub fn to_canonical(&self) -> String {
        wire::to_canonical(self)
    }

    pub fn from_canonical(text: &str) -> Result<Self> {
        wire::from_canonical(text)
    }
}
