//! Trees stored as a single set of edges. A node belongs to the tree iff
//! some live edge points to it; the root needs no edge.
//!
//! Edge trees run the same connection and mapping pipeline as graph trees,
//! so they are [`GraphTree`] values built without a node set.

use crate::error::Result;
use crate::graph_tree::{GraphConfig, GraphTree};

pub fn new(config: GraphConfig) -> Result<GraphTree> {
    GraphTree::new_edge_only(config)
}
