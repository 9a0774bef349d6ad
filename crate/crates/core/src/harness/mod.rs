//! Scenario I/O, the centralized preprocessing oracle, the invariant
//! checker, experiment running and SVG rendering.

pub mod scenario;
pub mod preprocess;
pub mod checker;
pub mod feather_search;
pub mod experiment;
pub mod render;
pub mod suite;
