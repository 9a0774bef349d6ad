//! Command-line front end: run reconfigurations, verify invariants over
//! seeds, and dump shortest-path-map decompositions.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use amoebot::grid::node;
use amoebot::harness::experiment::{run_one, run_seeds, CheckMode, RunOptions};
use amoebot::harness::preprocess::preprocess;
use amoebot::harness::scenario::{parse_scenario, parse_shape};
use amoebot::kernel::scheduler::{SchedulerKind, StopReason};
use amoebot::trees::spm::spm_oracle;

const EXIT_ASSUMPTION: u8 = 2;
const EXIT_INVARIANT: u8 = 3;
const EXIT_WATCHDOG: u8 = 4;

#[derive(Parser)]
#[command(name = "amoebot", about = "Amoebot shape reconfiguration simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one reconfiguration to completion.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// seq | async | sweep
        #[arg(long, default_value = "seq")]
        scheduler: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write one SVG frame per round into this directory.
        #[arg(long)]
        frames: Option<PathBuf>,
        /// off | final | every-round
        #[arg(long, default_value = "final")]
        check: String,
        /// Write the metrics line to this file instead of stdout.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Idle rounds before the run aborts (default 10n).
        #[arg(long)]
        watchdog: Option<u64>,
    },
    /// Run the full invariant suite over several seeds and both schedulers.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
    },
    /// Centralized oracles.
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Dump the shortest-path-map decomposition of a shape.
    Spm {
        /// Scenario-format file; the `I` lines define the shape.
        #[arg(long)]
        shape: PathBuf,
        /// Root node: two integers, q and r.
        #[arg(long, num_args = 2, allow_negative_numbers = true)]
        root: Vec<i32>,
    },
}

fn load(path: &PathBuf) -> Result<String, ExitCode> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_ASSUMPTION)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, scheduler, seed, frames, check, metrics, watchdog } => {
            let Some(kind) = SchedulerKind::parse(&scheduler) else {
                eprintln!("error: unknown scheduler `{scheduler}` (seq|async|sweep)");
                return ExitCode::from(EXIT_ASSUMPTION);
            };
            let Some(check) = CheckMode::parse(&check) else {
                eprintln!("error: unknown check mode `{check}` (off|final|every-round)");
                return ExitCode::from(EXIT_ASSUMPTION);
            };
            let text = match load(&scenario) {
                Ok(t) => t,
                Err(c) => return c,
            };
            let sc = match parse_scenario(&text) {
                Ok(sc) => sc,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_ASSUMPTION);
                }
            };
            let prepared = match preprocess(&sc) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("assumption violation: {e}");
                    return ExitCode::from(EXIT_ASSUMPTION);
                }
            };
            let mut opts = RunOptions::new(kind, seed);
            opts.check = check;
            opts.watchdog = watchdog;
            opts.frames_dir = frames;
            let report = run_one(&prepared, &opts);
            let line = report.metrics_line();
            match metrics {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, format!("{line}\n")) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                    }
                }
                None => println!("{line}"),
            }
            for viol in &report.violations {
                eprintln!("invariant violation: {viol}");
            }
            if report.reason == StopReason::Watchdog {
                eprintln!("watchdog: no activity, run aborted at round {}", report.rounds);
                return ExitCode::from(EXIT_WATCHDOG);
            }
            if !report.violations.is_empty() {
                return ExitCode::from(EXIT_INVARIANT);
            }
            if !report.completed {
                eprintln!("run stopped before reaching the target shape");
                return ExitCode::from(EXIT_WATCHDOG);
            }
            ExitCode::SUCCESS
        }
        Command::Verify { scenario, seeds } => {
            let text = match load(&scenario) {
                Ok(t) => t,
                Err(c) => return c,
            };
            let sc = match parse_scenario(&text) {
                Ok(sc) => sc,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_ASSUMPTION);
                }
            };
            let prepared = match preprocess(&sc) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("assumption violation: {e}");
                    return ExitCode::from(EXIT_ASSUMPTION);
                }
            };
            let mut failed = false;
            for kind in [SchedulerKind::Sequential, SchedulerKind::Asynchronous] {
                let reports = run_seeds(&prepared, kind, 0..seeds, CheckMode::EveryRound);
                for (seed, rep) in reports.iter().enumerate() {
                    let ok = rep.completed && rep.violations.is_empty();
                    println!(
                        "{:?} seed {}: {} rounds={} {}",
                        kind,
                        seed,
                        if ok { "ok" } else { "FAILED" },
                        rep.rounds,
                        rep.metrics_line()
                    );
                    for viol in &rep.violations {
                        eprintln!("  {viol}");
                    }
                    failed |= !ok;
                }
            }
            if failed {
                ExitCode::from(EXIT_INVARIANT)
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Oracle { which } => match which {
            OracleCommand::Spm { shape, root } => {
                let text = match load(&shape) {
                    Ok(t) => t,
                    Err(c) => return c,
                };
                let (_, nodes) = match parse_shape(&text) {
                    Ok(s) => s,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(EXIT_ASSUMPTION);
                    }
                };
                let r = node(root[0], root[1]);
                match spm_oracle(r, &nodes) {
                    Ok(spm) => {
                        for (i, reg) in spm.regions.iter().enumerate() {
                            println!(
                                "region {} root {} members {} parent {} window {}",
                                i,
                                reg.root,
                                reg.members.len(),
                                reg.parent.map(|p| p.to_string()).unwrap_or_else(|| "-".into()),
                                reg.window
                                    .iter()
                                    .map(|n| format!("({},{})", n.q, n.r))
                                    .collect::<Vec<_>>()
                                    .join(" ")
                            );
                        }
                        ExitCode::SUCCESS
                    }
                    Err(e) => {
                        eprintln!("assumption violation: {e}");
                        ExitCode::from(EXIT_ASSUMPTION)
                    }
                }
            }
        },
    }
}
