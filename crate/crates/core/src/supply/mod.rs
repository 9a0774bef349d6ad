//! Supply-graph construction on the coarse grid: the leader flood that
//! classifies nodes, feather-tree growth over grid lines, and supply-found
//! token back-propagation with liveliness bookkeeping.

pub mod found;
pub mod gl;
pub mod growth;

pub use found::{DirBetaSet, GrowthKind, SupplyNodeState};
