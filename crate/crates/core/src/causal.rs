//! Replica identity, logical clocks, unique tags and causal delivery.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of a replica. Totally ordered and stable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ReplicaId(pub u32);

impl fmt::Display for ReplicaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// Lamport timestamp. Ordered by counter, ties broken by origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LamportTimestamp {
    pub counter: u64,
    pub origin: ReplicaId,
}

impl LamportTimestamp {
    pub fn new(counter: u64, origin: ReplicaId) -> Self {
        LamportTimestamp { counter, origin }
    }

    /// Order-preserving integer encoding, used as an arborescence weight.
    pub fn rank(&self) -> i128 {
        ((self.counter as i128) << 32) | self.origin.0 as i128
    }
}

impl fmt::Display for LamportTimestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.counter, self.origin.0)
    }
}

/// Globally unique marker attached to OR-Set additions and C-Set increments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Tag {
    pub origin: ReplicaId,
    pub seq: u64,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.origin.0, self.seq)
    }
}

/// Per-replica clock state: Lamport counter plus tag sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicaClock {
    id: ReplicaId,
    counter: u64,
    next_tag: u64,
}

impl ReplicaClock {
    pub fn new(id: ReplicaId) -> Self {
        ReplicaClock {
            id,
            counter: 0,
            next_tag: 0,
        }
    }

    pub fn id(&self) -> ReplicaId {
        self.id
    }

    /// Issues a timestamp strictly greater than anything issued or observed so far.
    pub fn next_timestamp(&mut self) -> LamportTimestamp {
        self.counter += 1;
        LamportTimestamp::new(self.counter, self.id)
    }

    /// The latest timestamp issued or observed.
    pub fn now(&self) -> LamportTimestamp {
        LamportTimestamp::new(self.counter, self.id)
    }

    /// Records a remote timestamp so later local stamps dominate it.
    pub fn observe(&mut self, stamp: LamportTimestamp) {
        self.counter = self.counter.max(stamp.counter);
    }

    pub fn fresh_tag(&mut self) -> Tag {
        let tag = Tag {
            origin: self.id,
            seq: self.next_tag,
        };
        self.next_tag += 1;
        tag
    }
}

/// Vector clock; an absent entry counts as zero.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VectorClock {
    entries: BTreeMap<ReplicaId, u64>,
}

impl VectorClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, replica: ReplicaId) -> u64 {
        self.entries.get(&replica).copied().unwrap_or(0)
    }

    pub fn set(&mut self, replica: ReplicaId, value: u64) {
        if value == 0 {
            self.entries.remove(&replica);
        } else {
            self.entries.insert(replica, value);
        }
    }

    pub fn increment(&mut self, replica: ReplicaId) -> u64 {
        let next = self.get(replica) + 1;
        self.entries.insert(replica, next);
        next
    }

    pub fn merge(&mut self, other: &VectorClock) {
        for (&replica, &value) in &other.entries {
            let entry = self.entries.entry(replica).or_insert(0);
            *entry = (*entry).max(value);
        }
    }

    /// `self ≤ other` entrywise.
    pub fn dominated_by(&self, other: &VectorClock) -> bool {
        self.entries.iter().all(|(&r, &v)| v <= other.get(r))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ReplicaId, u64)> + '_ {
        self.entries.iter().map(|(&r, &v)| (r, v))
    }
}

impl PartialOrd for VectorClock {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering::*;
        match (self.dominated_by(other), other.dominated_by(self)) {
            (true, true) => Some(Equal),
            (true, false) => Some(Less),
            (false, true) => Some(Greater),
            (false, false) => None,
        }
    }
}

/// An operation wrapped with the metadata needed for causal delivery.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope<P> {
    pub payload: P,
    pub origin: ReplicaId,
    /// Position of this envelope in its origin's send sequence, starting at 1.
    pub seq: u64,
    /// What the sender had delivered when it generated the payload.
    pub deps: VectorClock,
    pub stamp: LamportTimestamp,
}

/// True when `env` can be delivered on a replica that has delivered `delivered`.
pub fn deliverable<P>(env: &Envelope<P>, delivered: &VectorClock) -> bool {
    let others_ok = env
        .deps
        .iter()
        .filter(|(r, _)| *r != env.origin)
        .all(|(r, v)| v <= delivered.get(r));
    others_ok && delivered.get(env.origin) + 1 == env.seq
}

/// Holds envelopes until their causal dependencies have been delivered.
#[derive(Clone, Debug, Default)]
pub struct CausalBuffer<P> {
    delivered: VectorClock,
    pending: Vec<Envelope<P>>,
}

impl<P> CausalBuffer<P> {
    pub fn new() -> Self {
        CausalBuffer {
            delivered: VectorClock::new(),
            pending: Vec::new(),
        }
    }

    pub fn delivered(&self) -> &VectorClock {
        &self.delivered
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Marks a locally generated envelope as delivered.
    pub fn record_local(&mut self, origin: ReplicaId) -> u64 {
        self.delivered.increment(origin)
    }

    /// Buffers `env` and returns every envelope that became deliverable, in
    /// delivery order. Envelopes already delivered are dropped.
    pub fn receive(&mut self, env: Envelope<P>) -> Vec<Envelope<P>> {
        if env.seq <= self.delivered.get(env.origin)
            || self
                .pending
                .iter()
                .any(|p| p.origin == env.origin && p.seq == env.seq)
        {
            return Vec::new();
        }
        self.pending.push(env);
        let mut out = Vec::new();
        while let Some(idx) = self
            .pending
            .iter()
            .position(|e| deliverable(e, &self.delivered))
        {
            let env = self.pending.remove(idx);
            self.delivered.increment(env.origin);
            out.push(env);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(origin: u32, seq: u64, deps: &[(u32, u64)]) -> Envelope<()> {
        let mut vc = VectorClock::new();
        for &(r, v) in deps {
            vc.set(ReplicaId(r), v);
        }
        Envelope {
            payload: (),
            origin: ReplicaId(origin),
            seq,
            deps: vc,
            stamp: LamportTimestamp::new(1, ReplicaId(origin)),
        }
    }

    #[test]
    fn timestamps_follow_lamport_rule() {
        let mut r1 = ReplicaClock::new(ReplicaId(1));
        assert_eq!(r1.next_timestamp(), LamportTimestamp::new(1, ReplicaId(1)));
        assert_eq!(r1.next_timestamp(), LamportTimestamp::new(2, ReplicaId(1)));

        let mut fresh = ReplicaClock::new(ReplicaId(1));
        fresh.observe(LamportTimestamp::new(7, ReplicaId(2)));
        assert_eq!(fresh.next_timestamp(), LamportTimestamp::new(8, ReplicaId(1)));
    }

    #[test]
    fn equal_counters_ordered_by_origin() {
        let a = LamportTimestamp::new(3, ReplicaId(1));
        let b = LamportTimestamp::new(3, ReplicaId(2));
        assert!(a < b);
        assert!(a.rank() < b.rank());
    }

    #[test]
    fn tags_are_sequential_and_distinct() {
        let mut r1 = ReplicaClock::new(ReplicaId(1));
        let mut r2 = ReplicaClock::new(ReplicaId(2));
        assert_eq!(r1.fresh_tag(), Tag { origin: ReplicaId(1), seq: 0 });
        assert_eq!(r1.fresh_tag(), Tag { origin: ReplicaId(1), seq: 1 });
        assert_ne!(r2.fresh_tag(), Tag { origin: ReplicaId(1), seq: 0 });
    }

    #[test]
    fn deliverable_examples() {
        let empty = VectorClock::new();
        assert!(deliverable(&env(2, 1, &[]), &empty));
        assert!(!deliverable(&env(2, 1, &[(1, 1)]), &empty));
        let mut d = VectorClock::new();
        d.set(ReplicaId(1), 1);
        assert!(deliverable(&env(2, 1, &[(1, 1)]), &d));
        // gap in the origin's own sequence
        assert!(!deliverable(&env(2, 2, &[(2, 1)]), &empty));
    }

    #[test]
    fn vector_clock_partial_order() {
        let mut a = VectorClock::new();
        let mut b = VectorClock::new();
        a.set(ReplicaId(1), 1);
        b.set(ReplicaId(2), 1);
        assert_eq!(a.partial_cmp(&b), None);
        let mut c = a.clone();
        c.merge(&b);
        assert!(a < c && b < c);
        assert_eq!(c.get(ReplicaId(3)), 0);
    }

    #[test]
    fn buffer_reorders_into_causal_order() {
        let mut buf = CausalBuffer::new();
        let second = env(1, 2, &[(1, 1)]);
        let dependent = env(2, 1, &[(1, 2)]);
        assert!(buf.receive(dependent).is_empty());
        assert!(buf.receive(second).is_empty());
        let out = buf.receive(env(1, 1, &[]));
        let order: Vec<_> = out.iter().map(|e| (e.origin.0, e.seq)).collect();
        assert_eq!(order, vec![(1, 1), (1, 2), (2, 1)]);
        assert_eq!(buf.pending_len(), 0);
        // duplicates are ignored
        assert!(buf.receive(env(1, 1, &[])).is_empty());
    }
}
