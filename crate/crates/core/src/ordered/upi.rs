//! Dense, globally unique position identifiers in the style of Logoot.
//!
//! A [`Upi`] is a sequence of `(digit, origin, seq)` triples compared
//! lexicographically. The last triple of a generated identifier always
//! carries a fresh `(origin, seq)` pair, which makes identifiers unique.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::causal::{ReplicaClock, ReplicaId};
use crate::error::{Error, Result};

/// Digits live in `[0, BASE)`.
pub const BASE: u32 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UpiDigit {
    pub digit: u32,
    pub origin: ReplicaId,
    pub seq: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Upi(pub Vec<UpiDigit>);

impl Upi {
    pub fn depth(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for Upi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{}.{}.{}", d.digit, d.origin.0, d.seq)?;
        }
        Ok(())
    }
}

/// Generates an identifier strictly between `left` and `right`; `None`
/// stands for the begin and end markers respectively.
pub fn upi_between<R: Rng + ?Sized>(
    left: Option<&Upi>,
    right: Option<&Upi>,
    clock: &mut ReplicaClock,
    rng: &mut R,
) -> Result<Upi> {
    if let (Some(l), Some(r)) = (left, right) {
        if l >= r {
            return Err(Error::InvalidInterval);
        }
    }
    let tag = clock.fresh_tag();
    let fresh = |digit| UpiDigit {
        digit,
        origin: tag.origin,
        seq: tag.seq,
    };
    let left = left.map(|u| u.0.as_slice()).unwrap_or(&[]);
    // `right` only constrains while the generated prefix equals its prefix.
    let mut right = right.map(|u| u.0.as_slice());
    let mut out = Vec::new();
    for depth in 0.. {
        let lt = left.get(depth);
        let rt = right.and_then(|r| r.get(depth));
        let lo = lt.map_or(0, |t| t.digit);
        let hi = match right {
            Some(_) => rt.map_or(BASE, |t| t.digit),
            None => BASE,
        };
        if hi > lo + 1 {
            out.push(fresh(rng.gen_range(lo + 1..hi)));
            return Ok(Upi(out));
        }
        let step = match (lt, rt) {
            (Some(&t), _) => t,
            // left exhausted; a zero digit on the right is only ever an inner
            // triple, so following it keeps room available further down
            (None, Some(&r)) if r.digit == 0 => r,
            (None, _) => fresh(0),
        };
        if rt != Some(&step) {
            right = None;
        }
        out.push(step);
    }
    unreachable!()
}
