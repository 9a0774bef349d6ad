//! Fair schedulers: sequential (one uniformly random particle per step) and
//! asynchronous (a random nonempty subset per step, applied in a random
//! permutation, each activation atomic with respect to its neighborhood).
//!
//! A round closes once every particle has been activated at least once since
//! the previous round boundary.

use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::kernel::config::{ActivationCtx, Configuration};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SchedulerKind {
    Sequential,
    Asynchronous,
    /// Asynchronous adversary that picks the full particle set every step in
    /// a fresh random permutation, so every round activates every particle
    /// exactly once. This is the accounting the round lower bounds use.
    AsynchronousSweep,
}

impl SchedulerKind {
    pub fn parse(s: &str) -> Option<SchedulerKind> {
        match s {
            "seq" | "sequential" => Some(SchedulerKind::Sequential),
            "async" | "asynchronous" => Some(SchedulerKind::Asynchronous),
            "sweep" => Some(SchedulerKind::AsynchronousSweep),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Default, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub moves: u64,
    pub conflicts: u64,
}

#[derive(Clone, Default, Debug)]
pub struct RunTrace {
    pub rounds: Vec<RoundRecord>,
    pub activations: u64,
}

impl RunTrace {
    pub fn completed_rounds(&self) -> u64 {
        self.rounds.len() as u64
    }
}

/// Why a run stopped.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StopReason {
    /// The round hook asked to stop (goal reached).
    Done,
    /// The round hook flagged a stalled run.
    Watchdog,
    /// The hard round cap was hit.
    RoundLimit,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum LogLevel {
    Off,
    Rounds,
    Activations,
}

fn log_level() -> LogLevel {
    match std::env::var("AMOEBOT_LOG").as_deref() {
        Ok("rounds") => LogLevel::Rounds,
        Ok("activations") => LogLevel::Activations,
        _ => LogLevel::Off,
    }
}

/// Drive the configuration until the hook stops it or `max_rounds` complete.
///
/// `step` is the particle program, invoked once per activation. `on_round`
/// runs after every completed round and may stop the run with
/// `ControlFlow::Break`.
pub fn run_scheduler(
    cfg: &mut Configuration,
    kind: SchedulerKind,
    max_rounds: u64,
    step: &mut dyn FnMut(&mut ActivationCtx),
    on_round: &mut dyn FnMut(&mut Configuration, &RunTrace) -> ControlFlow<StopReason>,
) -> (RunTrace, StopReason) {
    let n = cfg.particles.len();
    let log = log_level();
    let mut trace = RunTrace::default();
    let mut pending = vec![true; n];
    let mut remaining = n;
    cfg.moves_this_round = 0;
    cfg.conflicts_this_round = 0;

    // a configuration that is already at its goal stops before any round
    match on_round(cfg, &trace) {
        ControlFlow::Break(r) => return (trace, r),
        ControlFlow::Continue(()) => {}
    }
    if n == 0 {
        return (trace, StopReason::Done);
    }

    let mut order: Vec<usize> = Vec::with_capacity(n);
    loop {
        // pick the step's activation set
        order.clear();
        match kind {
            SchedulerKind::Sequential => {
                order.push(cfg.rng.gen_range(0..n));
            }
            SchedulerKind::Asynchronous => {
                for pid in 0..n {
                    if cfg.rng.gen::<bool>() {
                        order.push(pid);
                    }
                }
                if order.is_empty() {
                    order.push(cfg.rng.gen_range(0..n));
                }
                order.shuffle(&mut cfg.rng);
            }
            SchedulerKind::AsynchronousSweep => {
                order.extend(0..n);
                order.shuffle(&mut cfg.rng);
            }
        }

        for &pid in &order {
            cfg.particles[pid].activations += 1;
            trace.activations += 1;
            let mut ctx = ActivationCtx::new(cfg, pid);
            step(&mut ctx);
            let moved = ctx.moved;
            if log == LogLevel::Activations {
                println!("act={} moved={}", pid, u8::from(moved));
            }
            if pending[pid] {
                pending[pid] = false;
                remaining -= 1;
            }
        }

        if remaining == 0 {
            // round boundary
            let rec = RoundRecord {
                moves: cfg.moves_this_round,
                conflicts: cfg.conflicts_this_round,
            };
            trace.rounds.push(rec);
            cfg.round += 1;
            cfg.moves_this_round = 0;
            cfg.conflicts_this_round = 0;
            if log != LogLevel::Off {
                println!("round={} moves={} conflicts={}", cfg.round, rec.moves, rec.conflicts);
            }
            match on_round(cfg, &trace) {
                ControlFlow::Break(r) => return (trace, r),
                ControlFlow::Continue(()) => {}
            }
            if trace.completed_rounds() >= max_rounds {
                return (trace, StopReason::RoundLimit);
            }
            pending.iter_mut().for_each(|b| *b = true);
            remaining = n;
        }
    }
}
