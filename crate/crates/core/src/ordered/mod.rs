//! Sibling ordering: unique position identifiers and WOOTR elements.

pub mod upi;
pub mod wootr;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use upi::{upi_between, Upi, UpiDigit};
pub use wootr::{WootrElement, WootrSequence};

/// How a node or edge is positioned among its siblings.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Position {
    None,
    Upi(Upi),
    Wootr(WootrElement),
}

impl Position {
    pub fn is_none(&self) -> bool {
        matches!(self, Position::None)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::None => Ok(()),
            Position::Upi(u) => write!(f, "{u}"),
            Position::Wootr(w) => write!(f, "{w}"),
        }
    }
}

/// Position for a new child inserted at `index` among siblings already
/// sequenced as `siblings`.
pub fn position_between<R: rand::Rng + ?Sized>(
    mode: crate::tree::PiMode,
    label: &str,
    siblings: &[Position],
    index: usize,
    clock: &mut crate::causal::ReplicaClock,
    rng: &mut R,
) -> crate::error::Result<Position> {
    use crate::tree::PiMode;
    if index > siblings.len() {
        return Err(crate::error::precondition(format!(
            "index {index} past the {} existing children",
            siblings.len()
        )));
    }
    let (left, right) = siblings.split_at(index);
    match mode {
        PiMode::Unordered => Ok(Position::None),
        PiMode::NodeUpi | PiMode::EdgeUpi => {
            let upi = |p: &Position| match p {
                Position::Upi(u) => Some(u.clone()),
                _ => None,
            };
            let lo = left.iter().rev().find_map(upi);
            let hi = right.iter().find_map(upi);
            upi_between(lo.as_ref(), hi.as_ref(), clock, rng).map(Position::Upi)
        }
        PiMode::Wootr => {
            let elem = |p: &Position| match p {
                Position::Wootr(w) => Some(w.clone()),
                _ => None,
            };
            let prev = left.iter().rev().find_map(elem).unwrap_or(WootrElement::Begin);
            let next = right.iter().find_map(elem).unwrap_or(WootrElement::End);
            Ok(Position::Wootr(WootrElement::triple(label, prev, next)))
        }
    }
}
