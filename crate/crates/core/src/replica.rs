//! A tree replica with its clock, causal buffer and random source.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::causal::{CausalBuffer, Envelope, ReplicaClock, ReplicaId, VectorClock};
use crate::combo::{AnyOp, AnyTree, Combo, SetEvents};
use crate::error::Result;
use crate::tree::LookupTree;

#[derive(Clone, Debug)]
pub struct Replica {
    combo: Combo,
    tree: AnyTree,
    clock: ReplicaClock,
    buffer: CausalBuffer<AnyOp>,
    rng: ChaCha8Rng,
}

impl Replica {
    pub fn new(id: ReplicaId, combo: Combo, seed: u64) -> Result<Self> {
        Ok(Replica {
            combo,
            tree: combo.build()?,
            clock: ReplicaClock::new(id),
            buffer: CausalBuffer::new(),
            rng: ChaCha8Rng::seed_from_u64(seed ^ (u64::from(id.0) << 32)),
        })
    }

    pub fn id(&self) -> ReplicaId {
        self.clock.id()
    }

    pub fn combo(&self) -> &Combo {
        &self.combo
    }

    pub fn tree(&self) -> &AnyTree {
        &self.tree
    }

    pub fn lookup(&self) -> Result<LookupTree> {
        self.tree.lookup()
    }

    fn wrap(&mut self, payload: AnyOp) -> Envelope<AnyOp> {
        let deps = self.buffer.delivered().clone();
        let seq = self.buffer.record_local(self.id());
        let stamp = match &payload {
            AnyOp::Graph(o) => o.stamp,
            AnyOp::Word(o) => o.stamp,
        };
        Envelope {
            payload,
            origin: self.id(),
            seq,
            deps,
            stamp,
        }
    }

    /// Generates and applies an add locally; the envelope is what gets
    /// broadcast in operation-based runs.
    pub fn add(&mut self, label: &str, parent: &str, index: Option<usize>) -> Result<Envelope<AnyOp>> {
        let op = self
            .tree
            .gen_add(label, parent, index, &mut self.clock, &mut self.rng)?;
        Ok(self.wrap(op))
    }

    pub fn rmv(&mut self, key: &str) -> Result<Envelope<AnyOp>> {
        let op = self.tree.gen_rmv(key, &mut self.clock)?;
        Ok(self.wrap(op))
    }

    /// Buffers a remote envelope and applies whatever became deliverable.
    pub fn receive(&mut self, env: Envelope<AnyOp>) -> Vec<(Envelope<AnyOp>, SetEvents)> {
        let ready = self.buffer.receive(env);
        ready
            .into_iter()
            .map(|e| {
                self.clock.observe(e.stamp);
                let ev = self.tree.apply(&e.payload);
                (e, ev)
            })
            .collect()
    }

    /// Ops delivered here so far, local ones included.
    pub fn seen(&self) -> &VectorClock {
        self.buffer.delivered()
    }

    pub fn pending(&self) -> usize {
        self.buffer.pending_len()
    }

    /// Joins another replica's state (state-based runs).
    pub fn merge_from(&mut self, other: &Replica) -> Result<()> {
        self.tree.merge(&other.tree)?;
        self.clock.observe(other.clock.now());
        Ok(())
    }
}

/// Canonical text form of an op envelope, for shipping between processes.
pub fn encode_envelope(env: &Envelope<AnyOp>) -> String {
    crate::wire::to_canonical(env)
}

pub fn decode_envelope(text: &str) -> Result<Envelope<AnyOp>> {
    crate::wire::from_canonical(text)
}
