//! Experiment running: drive a prepared scenario to completion under a
//! scheduler, with invariant checking, watchdog, frames and metrics.

use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::path::PathBuf;

use crate::flow::program;
use crate::grid::NodeCoord;
use crate::harness::checker::Checker;
use crate::harness::preprocess::{install, PreparedScenario};
use crate::harness::render;
use crate::kernel::config::Configuration;
use crate::kernel::scheduler::{run_scheduler, SchedulerKind, StopReason};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CheckMode {
    Off,
    Final,
    EveryRound,
}

impl CheckMode {
    pub fn parse(s: &str) -> Option<CheckMode> {
        match s {
            "off" => Some(CheckMode::Off),
            "final" => Some(CheckMode::Final),
            "every-round" => Some(CheckMode::EveryRound),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub scheduler: SchedulerKind,
    pub seed: u64,
    pub check: CheckMode,
    /// Rounds without any activity before the run aborts; default `10 * n`.
    pub watchdog: Option<u64>,
    pub frames_dir: Option<PathBuf>,
    pub max_rounds: u64,
}

impl RunOptions {
    pub fn new(scheduler: SchedulerKind, seed: u64) -> RunOptions {
        RunOptions {
            scheduler,
            seed,
            check: CheckMode::Final,
            watchdog: None,
            frames_dir: None,
            max_rounds: 2_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub n: usize,
    pub rounds: u64,
    pub reason: StopReason,
    pub completed: bool,
    pub bubbles: u32,
    pub max_bubble_path: u32,
    pub edges_s: usize,
    pub deadlocks: u32,
    pub violations: Vec<String>,
    pub max_request_queue: usize,
    pub max_avail_tokens: usize,
    pub max_cross_activations: u32,
    pub plan_high_water: u32,
    pub junction_grants: BTreeMap<NodeCoord, u64>,
}

impl RunReport {
    /// The metrics stream line, exact key order.
    pub fn metrics_line(&self) -> String {
        format!(
            "n={} rounds={} bubbles={} max_bubble_path={} edgesS={} deadlocks={}",
            self.n, self.rounds, self.bubbles, self.max_bubble_path, self.edges_s, self.deadlocks
        )
    }
}

fn count_s_edges(cfg: &Configuration) -> usize {
    let mut total = 0;
    for p in &cfg.particles {
        let mem = p.mem.borrow();
        total += mem.head_state.s.succ.len();
        if let Some(t) = &mem.tail_state {
            total += t.s.succ.len();
        }
    }
    total
}

/// Run one reconfiguration to completion (or watchdog / round cap).
pub fn run_one(prepared: &PreparedScenario, opts: &RunOptions) -> RunReport {
    let mut cfg = install(prepared, opts.seed);
    let n = cfg.len();
    let target = prepared.scenario.target.clone();
    let watchdog = opts.watchdog.unwrap_or(10 * n.max(4) as u64);
    let mut checker = Checker::with_window(n as u32);
    let mut violations: Vec<String> = Vec::new();
    let mut last_activity = (0u64, 0u64, 0u64);
    let mut idle_rounds = 0u64;
    let mut edges_hwm = 0usize;
    let mut frame_no = 0u32;

    let frames_dir = opts.frames_dir.clone();
    if let Some(dir) = &frames_dir {
        std::fs::create_dir_all(dir).ok();
    }
    let check_mode = opts.check;
    let prepared_ref = prepared;

    let (trace, reason) = run_scheduler(
        &mut cfg,
        opts.scheduler,
        opts.max_rounds,
        &mut program::step,
        &mut |cfg, trace| {
            edges_hwm = edges_hwm.max(count_s_edges(cfg));
            if let Some(dir) = &frames_dir {
                let svg = render::render_frame(cfg, Some(prepared_ref));
                let path = dir.join(format!("frame_{frame_no:06}.svg"));
                std::fs::write(path, svg).ok();
                frame_no += 1;
            }
            if check_mode == CheckMode::EveryRound {
                for viol in checker.check(cfg, prepared_ref) {
                    violations.push(format!("round {}: {}", trace.completed_rounds(), viol));
                }
            }
            if cfg.matches_shape(&target) {
                return ControlFlow::Break(StopReason::Done);
            }
            let activity =
                (cfg.metrics.progress_events, cfg.metrics.tokens_sent, trace.activations);
            let busy = (activity.0, activity.1) != (last_activity.0, last_activity.1);
            last_activity = activity;
            if busy {
                idle_rounds = 0;
            } else {
                idle_rounds += 1;
                if idle_rounds >= watchdog {
                    return ControlFlow::Break(StopReason::Watchdog);
                }
            }
            ControlFlow::Continue(())
        },
    );

    if opts.check == CheckMode::Final {
        for viol in checker.check(&cfg, prepared) {
            violations.push(format!("final: {viol}"));
        }
    }
    let completed = cfg.matches_shape(&target);
    let plan_hwm =
        cfg.particles.iter().map(|p| p.mem.borrow().plan_hwm).max().unwrap_or(0);
    RunReport {
        n,
        rounds: trace.completed_rounds(),
        reason,
        completed,
        bubbles: cfg.metrics.bubbles_created,
        max_bubble_path: cfg.metrics.bubble_steps.values().copied().max().unwrap_or(0),
        edges_s: edges_hwm,
        deadlocks: u32::from(reason == StopReason::Watchdog),
        violations,
        max_request_queue: cfg.metrics.max_request_queue,
        max_avail_tokens: cfg.metrics.max_avail_tokens,
        max_cross_activations: cfg.metrics.max_cross_activations,
        plan_high_water: plan_hwm,
        junction_grants: cfg.metrics.junction_grants.iter().map(|(k, v)| (*k, *v)).collect(),
    }
}

/// Run only until supply-graph construction settles: no construction tokens
/// in flight and all maintenance done, stable for a few rounds. Returns the
/// configuration for centralized inspection.
pub fn run_construction(
    prepared: &PreparedScenario,
    scheduler: SchedulerKind,
    seed: u64,
    max_rounds: u64,
) -> Configuration {
    let mut cfg = install(prepared, seed);
    cfg.freeze_assembly = true;
    let mut quiet = 0u32;
    let _ = run_scheduler(
        &mut cfg,
        scheduler,
        max_rounds,
        &mut crate::flow::program::step,
        &mut |cfg, _| {
            let busy = cfg.particles.iter().any(|p| {
                let mem = p.mem.borrow();
                let tokens = mem.inbox.iter().any(|(_, t)| {
                    matches!(
                        t,
                        crate::kernel::token::Token::GlFlood { .. }
                            | crate::kernel::token::Token::StubMark { .. }
                            | crate::kernel::token::Token::LineGrow { .. }
                            | crate::kernel::token::Token::SupplyFound { .. }
                            | crate::kernel::token::Token::Prune
                    )
                });
                let mut sides = vec![&mem.head_state];
                if let Some(t) = mem.tail_state.as_ref() {
                    sides.push(t);
                }
                let pending = sides.iter().any(|st| {
                    (st.region == crate::kernel::memory::Region::Core && st.gl.is_none())
                        || st.demand_root.as_ref().map(|d| !d.stub_sent).unwrap_or(false)
                        || st
                            .supply_root
                            .map(|s| s.entries.iter().any(|e| !s.seeded.contains(e)))
                            .unwrap_or(false)
                });
                tokens || pending
            });
            if busy {
                quiet = 0;
            } else {
                quiet += 1;
                if quiet >= 4 {
                    return ControlFlow::Break(StopReason::Done);
                }
            }
            ControlFlow::Continue(())
        },
    );
    cfg
}

/// Run a scenario over several seeds, collecting reports.
pub fn run_seeds(
    prepared: &PreparedScenario,
    scheduler: SchedulerKind,
    seeds: impl IntoIterator<Item = u64>,
    check: CheckMode,
) -> Vec<RunReport> {
    seeds
        .into_iter()
        .map(|seed| {
            let mut opts = RunOptions::new(scheduler, seed);
            opts.check = check;
            run_one(prepared, &opts)
        })
        .collect()
}

/// Least-squares fit `y = slope * x + intercept`.
pub fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < f64::EPSILON {
        return (0.0, sy / n.max(1.0));
    }
    let slope = (n * sxy - sx * sy) / denom;
    (slope, (sy - slope * sx) / n)
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
