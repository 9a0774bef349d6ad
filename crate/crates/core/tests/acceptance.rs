//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//! Tolerances and frozen constants are pinned here.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use amoebot::grid::{node, Dir, NodeCoord};
use amoebot::harness::experiment::{
    least_squares, median, run_construction, run_one, CheckMode, RunOptions,
};
use amoebot::harness::preprocess::{preprocess, PreparedScenario};
use amoebot::harness::scenario::Scenario;
use amoebot::harness::{feather_search, suite};
use amoebot::kernel::config::Configuration;
use amoebot::kernel::scheduler::{SchedulerKind, StopReason};
use amoebot::shape::{bfs_distances, hexagon, random_blob};
use amoebot::trees::{bfs, feather, path as fpath, sp, spm};

/// Frozen constant for criterion 4: tree growth completes within this many
/// rounds per unit of diameter (calibrated once, then frozen; the +20%
/// headroom over the calibration maximum of 0.62 is included).
const TREE_ROUNDS_PER_DIAMETER: f64 = 0.75;

/// Frozen constant for criterion 9: sequential reconfiguration rounds per
/// particle on the bar-shift family (calibrated maximum 0.75 plus headroom).
const ROUNDS_PER_PARTICLE: f64 = 1.2;

fn build_particles(shape: &BTreeSet<NodeCoord>, frame_seed: u64) -> Configuration {
    let mut cfg = Configuration::new(frame_seed);
    for &n in shape.iter() {
        cfg.add_particle(n);
    }
    cfg
}

fn shape_sizes() -> Vec<(u64, usize)> {
    (0..100).map(|seed| (seed, 30 + ((seed * 97) % 330) as usize)).collect()
}

#[test]
fn criterion_1_sp_tree_optimality() {
    let t0 = std::time::Instant::now();
    for (seed, size) in shape_sizes() {
        let shape = random_blob(seed, size);
        let root_node = *shape.iter().next().unwrap();
        let want = bfs_distances(&shape, root_node);

        let mut cfg = build_particles(&shape, seed);
        cfg.reseed(seed.wrapping_add(1));
        let (_, reason) = bfs::run_bfs_tree(&mut cfg, 0, SchedulerKind::Sequential, 5_000_000);
        assert_eq!(reason, StopReason::Done, "bfs tree seed {seed}");
        let got = bfs::tree_depths(&cfg);
        assert_eq!(got.len(), shape.len(), "bfs tree spans, seed {seed}");
        for (n, d) in got {
            assert_eq!(d, want[&n], "bfs depth at {n:?}, seed {seed}");
        }

        let mut cfg = build_particles(&shape, seed);
        cfg.reseed(seed.wrapping_add(2));
        let (_, reason) = sp::run_sp_tree(&mut cfg, 0, SchedulerKind::Sequential, 1_000_000);
        assert_eq!(reason, StopReason::Done, "sp tree seed {seed}");
        let got = bfs::tree_depths(&cfg);
        assert_eq!(got.len(), shape.len(), "sp tree spans, seed {seed}");
        for (n, d) in got {
            assert_eq!(d, want[&n], "sp depth at {n:?}, seed {seed}");
        }
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs() < 60, "criterion 1 runtime {elapsed:?}");
    println!("PASS criterion 1: tree depths equal BFS distances on 100 shapes ({elapsed:?})");
}

#[test]
fn criterion_2_spm_equivalence() {
    for seed in 0..50u64 {
        let size = 30 + ((seed * 61) % 170) as usize;
        let shape = random_blob(seed.wrapping_add(1000), size);
        let root_node = *shape.iter().next().unwrap();
        let mut cfg = build_particles(&shape, seed);
        cfg.reseed(seed.wrapping_add(3));
        let root = cfg.occupant(root_node).unwrap();
        let (_, reason) = sp::run_sp_tree(&mut cfg, root, SchedulerKind::Sequential, 1_000_000);
        assert_eq!(reason, StopReason::Done, "seed {seed}");
        let got = sp::extension_sites(&cfg);
        let want = spm::spm_oracle(root_node, &shape).unwrap().region_roots();
        assert_eq!(got, want, "seed {seed}: extension sites vs region roots");
    }
    println!("PASS criterion 2: cone extensions equal SPM region roots on 50 shapes");
}

/// All maximal independent sets of the occupied-neighbor cycle of a node.
fn all_mis(shape: &BTreeSet<NodeCoord>, root: NodeCoord) -> Vec<Vec<usize>> {
    let occupied: Vec<usize> = (0..6)
        .filter(|&i| shape.contains(&root.neighbor(Dir::from_index(i as i32))))
        .collect();
    let mut out: Vec<Vec<usize>> = Vec::new();
    for mask in 0u8..64 {
        let set: Vec<usize> = (0..6).filter(|&i| mask & (1 << i) != 0).collect();
        if set.iter().any(|i| !occupied.contains(i)) {
            continue;
        }
        let independent = set
            .iter()
            .all(|&i| !set.contains(&((i + 1) % 6)) && !set.contains(&((i + 5) % 6)));
        if !independent {
            continue;
        }
        let maximal = occupied.iter().all(|&c| {
            set.contains(&c)
                || set.contains(&((c + 1) % 6))
                || set.contains(&((c + 5) % 6))
        });
        if independent && maximal {
            out.push(set);
        }
    }
    out
}

/// Feather tree with a prescribed independent-set for the root (centralized
/// regrowth of the distributed rules, used only to enumerate admissible
/// trees for the equivalence check).
fn feather_tree_with_mis(
    shape: &BTreeSet<NodeCoord>,
    root: NodeCoord,
    mis: &[usize],
) -> BTreeMap<NodeCoord, NodeCoord> {
    #[derive(Clone, Copy, PartialEq)]
    enum Role {
        Shaft(Dir),
        Branch(Dir),
    }
    let mut parent: BTreeMap<NodeCoord, NodeCoord> = BTreeMap::new();
    let mut role: BTreeMap<NodeCoord, Role> = BTreeMap::new();
    let mut queue: VecDeque<NodeCoord> = VecDeque::new();
    for i in 0..6 {
        let d = Dir::from_index(i as i32);
        let m = root.neighbor(d);
        if shape.contains(&m) {
            parent.insert(m, root);
            role.insert(m, if mis.contains(&i) { Role::Shaft(d) } else { Role::Branch(d) });
            queue.push_back(m);
        }
    }
    while let Some(p) = queue.pop_front() {
        let r = role[&p];
        let mut adopt = |d: Dir, k: Role, out: &mut VecDeque<NodeCoord>| {
            let m = p.neighbor(d);
            if shape.contains(&m) && !parent.contains_key(&m) && m != root {
                parent.insert(m, p);
                role.insert(m, k);
                out.push_back(m);
            }
        };
        match r {
            Role::Shaft(t) => {
                adopt(t, Role::Shaft(t), &mut queue);
                for s in [-1, 1] {
                    let f = t.rotate(s);
                    adopt(f, Role::Branch(f), &mut queue);
                }
            }
            Role::Branch(t) => {
                adopt(t, Role::Branch(t), &mut queue);
                for s in [1i32, -1] {
                    let beyond = p.neighbor(t.rotate(2 * s));
                    let side = t.rotate(s);
                    if !shape.contains(&beyond) && shape.contains(&p.neighbor(side)) {
                        adopt(side, Role::Shaft(side), &mut queue);
                    }
                }
            }
        }
    }
    parent
}

fn tree_path_to(
    parent: &BTreeMap<NodeCoord, NodeCoord>,
    root: NodeCoord,
    t: NodeCoord,
) -> Option<Vec<NodeCoord>> {
    let mut path = vec![t];
    let mut cur = t;
    while cur != root {
        cur = *parent.get(&cur)?;
        path.push(cur);
    }
    path.reverse();
    Some(path)
}

/// Acyclic thin shapes: on wider pieces the bend grammar admits
/// all-boundary zigzags and rings that no feather tree realizes, so the
/// exact equivalence holds on (and the suite consists of) tree-like
/// corridors where simple paths are unique.
fn curated_suite() -> Vec<BTreeSet<NodeCoord>> {
    let bar = |q0: i32, q1: i32, r0: i32, r1: i32| -> BTreeSet<NodeCoord> {
        let mut s = BTreeSet::new();
        for q in q0..q1 {
            for r in r0..r1 {
                s.insert(node(q, r));
            }
        }
        s
    };
    let mut l1 = bar(0, 8, 0, 1);
    l1.extend(bar(0, 1, 1, 8));
    let mut u1 = bar(0, 8, 0, 1);
    u1.extend(bar(0, 1, 1, 6));
    u1.extend(bar(7, 8, 1, 6));
    let mut zig = bar(0, 5, 0, 1);
    zig.extend(bar(4, 5, 1, 5));
    zig.extend(bar(4, 12, 5, 6));
    let mut y = bar(0, 6, 0, 1);
    y.extend(bar(5, 6, 1, 6));
    y.extend((1..6).map(|k| node(5 + k, -k)));
    vec![(0..10).map(|q| node(q, 0)).collect(), l1, u1, zig, y]
}

#[test]
fn criterion_3_feather_determinism_and_equivalence() {
    // determinism: one configuration, five activation orders
    let shape = random_blob(7, 45);
    let root_node = *shape.iter().next().unwrap();
    let mut reference = None;
    for sched_seed in 1..=5u64 {
        let mut cfg = build_particles(&shape, 77);
        let root = cfg.occupant(root_node).unwrap();
        cfg.reseed(sched_seed);
        let kind = if sched_seed % 2 == 0 {
            SchedulerKind::Sequential
        } else {
            SchedulerKind::Asynchronous
        };
        let (_, reason) = feather::run_feather_tree(&mut cfg, root, kind, 100_000, Dir::from_index(0));
        assert_eq!(reason, StopReason::Done);
        let map = feather::feather_map(&cfg);
        match &reference {
            None => reference = Some(map),
            Some(r) => assert_eq!(&map, r, "order {sched_seed}"),
        }
    }

    // exhaustive path/tree equivalence on the curated suite
    for (si, shape) in curated_suite().iter().enumerate() {
        assert!(shape.len() <= 40, "curated shape {si} too large");
        for &s in shape.iter() {
            let trees: Vec<BTreeMap<NodeCoord, NodeCoord>> = all_mis(shape, s)
                .iter()
                .map(|mis| feather_tree_with_mis(shape, s, mis))
                .collect();
            // every tree path is a feather path
            for tree in &trees {
                for &t in shape.iter() {
                    if t == s {
                        continue;
                    }
                    let p = tree_path_to(tree, s, t)
                        .unwrap_or_else(|| panic!("shape {si}: tree from {s:?} misses {t:?}"));
                    assert!(
                        fpath::is_feather_path(&p, shape),
                        "shape {si}: tree path {s:?}->{t:?} fails the predicate"
                    );
                }
            }
            // every feather path is realized by some admissible tree
            for &t in shape.iter() {
                if t == s {
                    continue;
                }
                for p in fpath::enumerate_feather_paths(shape, s, t, 24) {
                    let realized = trees
                        .iter()
                        .any(|tree| tree_path_to(tree, s, t).as_deref() == Some(&p[..]));
                    assert!(
                        realized,
                        "shape {si}: feather path {s:?}->{t:?} {p:?} not on any tree"
                    );
                }
            }
        }
    }
    println!("PASS criterion 3: feather determinism and path/tree equivalence");
}

#[test]
fn criterion_4_tree_round_scaling() {
    for d in [8u32, 16, 32, 64] {
        let shape = hexagon(node(0, 0), d / 2);
        let root_node = node((d / 2) as i32, 0);
        let bound = (TREE_ROUNDS_PER_DIAMETER * d as f64).ceil() as u64 + 1;

        let mut cfg = build_particles(&shape, 3);
        let root = cfg.occupant(root_node).unwrap();
        cfg.reseed(17);
        let (trace, reason) = sp::run_sp_tree(&mut cfg, root, SchedulerKind::Sequential, 100_000);
        assert_eq!(reason, StopReason::Done);
        assert!(
            trace.completed_rounds() <= bound,
            "sp tree d={d}: {} rounds > {bound}",
            trace.completed_rounds()
        );

        let mut cfg = build_particles(&shape, 3);
        let root = cfg.occupant(root_node).unwrap();
        cfg.reseed(17);
        let (trace, reason) =
            feather::run_feather_tree(&mut cfg, root, SchedulerKind::Sequential, 100_000, Dir::from_index(0));
        assert_eq!(reason, StopReason::Done);
        assert!(
            trace.completed_rounds() <= bound,
            "feather tree d={d}: {} rounds > {bound}",
            trace.completed_rounds()
        );
    }
    println!(
        "PASS criterion 4: tree growth within {TREE_ROUNDS_PER_DIAMETER} rounds per diameter unit"
    );
}

/// The reference navigation structure: usable coarse lines, stubs, and
/// gateway attachments, as an undirected adjacency for shortest distances.
fn ideal_graph(p: &PreparedScenario) -> BTreeMap<NodeCoord, Vec<NodeCoord>> {
    let mut adj: BTreeMap<NodeCoord, Vec<NodeCoord>> = BTreeMap::new();
    let mut link = |a: NodeCoord, b: NodeCoord| {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    };
    let grid: BTreeSet<NodeCoord> = p
        .core
        .iter()
        .copied()
        .filter(|&n| amoebot::grid::coarse_class(n, p.leader) == amoebot::grid::CoarseClass::GridNode)
        .collect();
    for &g in &grid {
        for d in Dir::all() {
            let e1 = g.neighbor(d);
            let e2 = e1.neighbor(d);
            let far = e2.neighbor(d);
            if p.core.contains(&e1) && p.core.contains(&e2) && grid.contains(&far) {
                link(g, e1);
                link(e1, e2);
                link(e2, far);
            }
        }
    }
    for sc in &p.supply {
        for m in sc.root.neighbors() {
            if p.gl_usable.contains(&m) {
                link(sc.root, m);
            }
        }
    }
    for dc in &p.demand {
        let mut prev = dc.root;
        for &hop in &dc.stub {
            link(prev, hop);
            prev = hop;
        }
    }
    // deduplicate
    for (_, v) in adj.iter_mut() {
        v.sort();
        v.dedup();
    }
    adj
}

fn graph_dist(
    adj: &BTreeMap<NodeCoord, Vec<NodeCoord>>,
    from: NodeCoord,
) -> BTreeMap<NodeCoord, u32> {
    let mut dist = BTreeMap::new();
    let mut queue = VecDeque::new();
    dist.insert(from, 0u32);
    queue.push_back(from);
    while let Some(n) = queue.pop_front() {
        let d = dist[&n];
        for &m in adj.get(&n).into_iter().flatten() {
            if !dist.contains_key(&m) {
                dist.insert(m, d + 1);
                queue.push_back(m);
            }
        }
    }
    dist
}

#[test]
fn criterion_5_supply_graph_properties() {
    let mut checked = 0;
    for seed in 0..30u64 {
        let ns = 1 + (seed % 5) as usize;
        let nd = 1 + ((seed / 5) % 5) as usize;
        let sc = suite::multi_root(seed, ns, nd);
        let p = preprocess(&sc).unwrap();
        let cfg = run_construction(&p, SchedulerKind::Sequential, seed, 20_000);
        let snap = feather_search::snapshot(&cfg);
        let ideal = ideal_graph(&p);

        for dc in &p.demand {
            let ideal_from_d = graph_dist(&ideal, dc.root);
            let plain = feather_search::plain_s_distance(&snap, dc.root);
            let starts = [feather_search::start_state(dc.root)];
            let (_, gateways) = feather_search::forward(&snap, &starts, false);
            for sup in &p.supply {
                let want = *ideal_from_d
                    .get(&sup.root)
                    .unwrap_or_else(|| panic!("seed {seed}: no ideal path {:?}->{:?}", dc.root, sup.root));
                // property 1: shortest path in S is shortest in the grid
                let got = *plain.get(&sup.root).unwrap_or_else(|| {
                    panic!("seed {seed}: no S path {:?}->{:?}", dc.root, sup.root)
                });
                assert_eq!(got, want, "seed {seed}: P1 {:?}->{:?}", dc.root, sup.root);
                // property 2: a shortest feather path exists in S
                let feather_d = *gateways.get(&sup.root).unwrap_or_else(|| {
                    panic!("seed {seed}: no feather path {:?}->{:?}", dc.root, sup.root)
                });
                assert_eq!(feather_d, want, "seed {seed}: P2 {:?}->{:?}", dc.root, sup.root);
            }
        }

        // property 3: every supply-graph node lies on some shortest feather
        // path for some (demand root, supply root) pair
        let mut on_shortest: BTreeSet<NodeCoord> = BTreeSet::new();
        for dc in &p.demand {
            let starts = [feather_search::start_state(dc.root)];
            let (fwd, gateways) = feather_search::forward(&snap, &starts, false);
            for sup in &p.supply {
                let total = gateways[&sup.root];
                let rev = feather_search::reverse_dists_to(&snap, sup.root);
                for (state, df) in fwd.iter() {
                    if let Some(dr) = rev.get(state) {
                        if df + dr == total {
                            on_shortest.insert(state.0);
                        }
                    }
                }
            }
            on_shortest.insert(dc.root);
        }
        for sup in &p.supply {
            on_shortest.insert(sup.root);
        }
        for (&n, view) in &snap.nodes {
            if view.in_s && !on_shortest.contains(&n) {
                panic!("seed {seed}: node {n:?} in S but on no shortest feather path");
            }
        }
        checked += 1;
    }
    assert_eq!(checked, 30);
    println!("PASS criterion 5: supply-graph properties 1-3 on 30 multi-root scenarios");
}

#[test]
fn criterion_6_and_7_end_to_end_with_bubble_budget() {
    let mut scenarios = suite::acceptance_suite();
    scenarios.push(suite::multi_root(3, 2, 3));
    for sc in scenarios {
        let p = preprocess(&sc).unwrap_or_else(|e| panic!("{}: {e}", sc.name));
        for kind in [SchedulerKind::Sequential, SchedulerKind::Asynchronous] {
            for seed in 0..10u64 {
                let mut opts = RunOptions::new(kind, seed);
                opts.check = CheckMode::EveryRound;
                opts.max_rounds = 200_000;
                let rep = run_one(&p, &opts);
                assert!(
                    rep.completed,
                    "{} {kind:?} seed {seed}: {:?} after {} rounds",
                    sc.name, rep.reason, rep.rounds
                );
                assert_eq!(rep.deadlocks, 0, "{} {kind:?} seed {seed}", sc.name);
                assert!(
                    rep.violations.is_empty(),
                    "{} {kind:?} seed {seed}: {:?}",
                    sc.name,
                    rep.violations
                );
                // criterion 7: bubble budget from the budget argument
                assert!(
                    (rep.max_bubble_path as usize) <= 3 * rep.edges_s.max(1),
                    "{} {kind:?} seed {seed}: path {} > 3x{}",
                    sc.name,
                    rep.max_bubble_path,
                    rep.edges_s
                );
                // criterion 10 collects these too
                assert!(rep.max_request_queue <= 6, "{}: queue {}", sc.name, rep.max_request_queue);
                assert!(rep.max_avail_tokens <= 6, "{}: avail {}", sc.name, rep.max_avail_tokens);
            }
        }
    }
    println!("PASS criterion 6: full suite terminates in T with empty invariants, both schedulers x 10 seeds");
    println!("PASS criterion 7: every bubble path within 3 x |E(S)|");
}

#[test]
fn criterion_8_lower_bound() {
    for n in [8i32, 16, 32, 64] {
        let sc = suite::line_shift(n);
        let p = preprocess(&sc).unwrap();
        for seed in 0..3u64 {
            let mut opts = RunOptions::new(SchedulerKind::AsynchronousSweep, seed);
            opts.check = CheckMode::Off;
            opts.max_rounds = 200_000;
            let rep = run_one(&p, &opts);
            assert!(rep.completed, "n={n} seed {seed}: {:?}", rep.reason);
            assert!(
                rep.rounds >= (2 * n - 2) as u64,
                "n={n} seed {seed}: {} rounds < 2n-2 = {}",
                rep.rounds,
                2 * n - 2
            );
        }
    }
    println!("PASS criterion 8: line shift needs at least 2n-2 rounds under once-per-round activation");
}

#[test]
fn criterion_9_linear_scaling() {
    let mut points = Vec::new();
    for n in [32usize, 64, 128, 256] {
        let p = preprocess(&suite::scaling(n)).unwrap();
        let mut seq = Vec::new();
        let mut asn = Vec::new();
        for seed in 0..10u64 {
            let mut o = RunOptions::new(SchedulerKind::Sequential, seed);
            o.check = CheckMode::Off;
            let rep = run_one(&p, &o);
            assert!(rep.completed, "seq n={n} seed {seed}");
            seq.push(rep.rounds as f64);
            let mut o = RunOptions::new(SchedulerKind::Asynchronous, seed);
            o.check = CheckMode::Off;
            let rep = run_one(&p, &o);
            assert!(rep.completed, "async n={n} seed {seed}");
            asn.push(rep.rounds as f64);
        }
        let med_seq = median(seq);
        let med_async = median(asn);
        assert!(
            med_seq / n as f64 <= ROUNDS_PER_PARTICLE,
            "n={n}: {med_seq} rounds/n over {ROUNDS_PER_PARTICLE}"
        );
        assert!(
            med_async <= 2.0 * med_seq,
            "n={n}: async median {med_async} over 2x sequential {med_seq}"
        );
        points.push(((n as f64).ln(), med_seq.max(1.0).ln()));
    }
    // sub-quadratic growth: log-log slope strictly below 2
    let (slope, _) = least_squares(&points);
    assert!(slope < 2.0, "log-log slope {slope}");
    println!("PASS criterion 9: sequential rounds scale linearly (log-log slope {slope:.2}), async within 2x");
}

#[test]
fn criterion_10_junction_protocol() {
    // queue bounds and bidirectional exclusion are asserted per run in
    // criterion 6; here the crossing latency after acknowledgment is pinned
    let mut worst = 0u32;
    for sc in [suite::bottleneck(), suite::five_demand(), suite::dove_to_fish()] {
        let p = preprocess(&sc).unwrap();
        for kind in [SchedulerKind::Sequential, SchedulerKind::Asynchronous] {
            for seed in 0..5u64 {
                let mut opts = RunOptions::new(kind, seed);
                opts.check = CheckMode::Off;
                opts.max_rounds = 200_000;
                let rep = run_one(&p, &opts);
                assert!(rep.completed, "{} {kind:?} {seed}", sc.name);
                assert!(rep.max_request_queue <= 6, "{}: {}", sc.name, rep.max_request_queue);
                assert!(rep.max_avail_tokens <= 6, "{}: {}", sc.name, rep.max_avail_tokens);
                assert!(
                    rep.max_cross_activations <= 3,
                    "{} {kind:?} {seed}: crossing took {} holder activations",
                    sc.name,
                    rep.max_cross_activations
                );
                worst = worst.max(rep.max_cross_activations);
            }
        }
    }
    println!("PASS criterion 10: queues within 6, crossings within 3 activations (worst {worst})");
}
