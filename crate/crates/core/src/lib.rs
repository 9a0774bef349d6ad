//! Discrete simulator and verification harness for amoebot shape
//! reconfiguration on the triangular grid.
//!
//! Particles occupy one or two adjacent lattice nodes, communicate through
//! local ports under private orientations, and relocate from supply positions
//! to demand positions through the static core. Navigation runs over shortest
//! path trees and feather trees, a supply graph built on a factor-three
//! coarse grid, and a junction protocol that serializes crossing flows.
//!
//! Entry points:
//! - [`harness::scenario`] parses scenario files and [`harness::preprocess`]
//!   labels them (roots, spanning trees, coarse-grid connectivity),
//! - [`harness::experiment`] runs full reconfigurations under both
//!   schedulers with round-by-round invariant checking,
//! - [`trees`] exposes the tree primitives and the shortest-path-map oracle,
//! - the `amoebot` binary wraps these as `run`, `verify` and `oracle spm`.

pub mod grid;
pub mod shape;
pub mod kernel;
pub mod trees;
pub mod supply;
pub mod flow;
pub mod harness;
