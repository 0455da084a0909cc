//! Assembly: component expansion, skeleton linking, model completion, the
//! row dependency graph and child upgrades.

mod complete;
mod expand;
mod graph;
mod link;
mod types;
mod upgrade;

pub use complete::{assemble, assemble_id, RESERVED_SHEETS};
pub use expand::{expand, expand_with_id, ExpandedKind, ExpandedRow, Expansion, MAX_GROUP_DEPTH};
pub use graph::{dependency_graph, topo_order, DependencyGraph, Edge, EdgeKind};
pub use link::link;
pub(crate) use link::issue_diag;
pub use types::*;
pub use upgrade::upgrade_child;
