//! Replicated trees built from set CRDTs.

pub mod causal;
pub mod combo;
pub mod demo;
pub mod edge_tree;
pub mod error;
pub mod graph_tree;
pub mod ordered;
pub mod replica;
pub mod set_crdt;
pub mod sim;
pub mod tree;
pub mod word_tree;
mod wire;

pub use error::{Error, Result};
