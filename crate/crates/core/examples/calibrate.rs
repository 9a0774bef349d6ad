// One-off calibration: fits the round constants that the acceptance suite
// freezes, and times the tree-oracle workload.
use amoebot::grid::{node, Dir};
use amoebot::harness::experiment::{run_one, CheckMode, RunOptions};
use amoebot::harness::preprocess::preprocess;
use amoebot::harness::suite;
use amoebot::kernel::config::Configuration;
use amoebot::kernel::scheduler::SchedulerKind;
use amoebot::shape::{hexagon, random_blob};
use amoebot::trees::{bfs, feather, sp};
use std::time::Instant;

fn main() {
    // AC4 family: hexagons of diameter d
    for d in [8u32, 16, 32, 64] {
        let shape = hexagon(node(0, 0), d / 2);
        let mut cfg = Configuration::new(3);
        let mut root = 0;
        for (i, &n) in shape.iter().enumerate() {
            cfg.add_particle(n);
            if n == node((d / 2) as i32, 0) {
                root = i;
            }
        }
        cfg.reseed(17);
        let (t1, _) = sp::run_sp_tree(&mut cfg, root, SchedulerKind::Sequential, 100_000);
        let mut cfg2 = Configuration::new(3);
        let mut root2 = 0;
        for (i, &n) in shape.iter().enumerate() {
            cfg2.add_particle(n);
            if n == node((d / 2) as i32, 0) {
                root2 = i;
            }
        }
        cfg2.reseed(17);
        let (t2, _) =
            feather::run_feather_tree(&mut cfg2, root2, SchedulerKind::Sequential, 100_000, Dir::from_index(0));
        println!(
            "d={d}: sp rounds={} ratio={:.2} feather rounds={} ratio={:.2}",
            t1.completed_rounds(),
            t1.completed_rounds() as f64 / d as f64,
            t2.completed_rounds(),
            t2.completed_rounds() as f64 / d as f64
        );
    }
    // AC9 family
    for n in [32usize, 64, 128, 256] {
        let p = preprocess(&suite::scaling(n)).unwrap();
        let mut rs = Vec::new();
        let mut ra = Vec::new();
        for seed in 0..10u64 {
            let mut o = RunOptions::new(SchedulerKind::Sequential, seed);
            o.check = CheckMode::Off;
            let rep = run_one(&p, &o);
            assert!(rep.completed, "seq n={n} seed={seed} {:?}", rep.reason);
            rs.push(rep.rounds as f64);
            let mut o = RunOptions::new(SchedulerKind::Asynchronous, seed);
            o.check = CheckMode::Off;
            let rep = run_one(&p, &o);
            assert!(rep.completed, "async n={n} seed={seed} {:?}", rep.reason);
            ra.push(rep.rounds as f64);
        }
        rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ra.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!(
            "n={n}: seq median {} ratio {:.2} | async median {} ratio-to-seq {:.2}",
            rs[5], rs[5] / n as f64, ra[5], ra[5] / rs[5]
        );
    }
    // AC1 timing probe
    let t0 = Instant::now();
    let mut total = 0u64;
    for seed in 0..20u64 {
        let size = 30 + ((seed * 97) % 330) as usize;
        let shape = random_blob(seed, size);
        let mut cfg = Configuration::new(seed);
        for &n in shape.iter() {
            cfg.add_particle(n);
        }
        cfg.reseed(seed + 1);
        let (tr, reason) = bfs::run_bfs_tree(&mut cfg, 0, SchedulerKind::Sequential, 3_000_000);
        assert_eq!(reason, amoebot::kernel::scheduler::StopReason::Done, "seed {seed}");
        total += tr.activations;
    }
    println!("bfs 20 shapes: {:?} ({} activations)", t0.elapsed(), total);
}
