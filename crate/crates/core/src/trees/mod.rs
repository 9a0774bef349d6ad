//! Distributed tree growth: breadth-first SP-trees, cone-based SP-trees and
//! feather trees, plus the centralized shortest-path-map oracle used for
//! verification.

pub mod cone;
pub mod spm;
pub mod bfs;
pub mod sp;
pub mod feather;
pub mod path;

pub use cone::{Cone, FeatherRole};
