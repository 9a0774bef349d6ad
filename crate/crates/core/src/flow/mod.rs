//! The reconfiguration phase: bubble lifecycle, junction crossings, demand
//! assembly and supply disassembly.

pub mod bubble;
pub mod demand;
pub mod junction;
pub mod program;

pub use bubble::{BodyNode, Bubble, Delta};
