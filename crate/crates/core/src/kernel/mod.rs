//! The amoebot execution substrate: local frames, particle memory, move
//! mechanics, token delivery and the fair schedulers.

pub mod config;
pub mod frame;
pub mod memory;
pub mod scheduler;
pub mod token;

pub use config::{ActivationCtx, Configuration, Keep, Metrics, MoveError, Particle};
pub use frame::{DirXform, LocalFrame};
pub use memory::{Memory, NodeState};
pub use scheduler::{run_scheduler, RoundRecord, RunTrace, SchedulerKind, StopReason};
pub use token::{RecvTag, Token};
