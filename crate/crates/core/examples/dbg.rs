use amoebot::grid::{node, Dir, NodeCoord};
use amoebot::harness::experiment::run_construction;
use amoebot::harness::preprocess::preprocess;
use amoebot::harness::{feather_search, suite};
use amoebot::kernel::scheduler::SchedulerKind;

fn main() {
    let sc = suite::multi_root(0, 1, 1);
    let p = preprocess(&sc).unwrap();
    println!("supplies {:?}", p.supply.iter().map(|s| s.root).collect::<Vec<_>>());
    println!("demands {:?}", p.demand.iter().map(|d| (d.root, d.entry)).collect::<Vec<_>>());
    let cfg = run_construction(&p, SchedulerKind::Sequential, 0, 20_000);
    let snap = feather_search::snapshot(&cfg);
    let sroot = p.supply[0].root;
    println!("sroot {:?} view: {:?}", sroot, snap.nodes.get(&sroot).map(|v| (v.in_s, v.pred, v.gateway)));
    for d in Dir::all() {
        let m = sroot.neighbor(d);
        if let Some(v) = snap.nodes.get(&m) {
            if v.in_s || !v.succ.is_empty() {
                println!("  adj {m:?}: in_s {} succ {:?} pred {:?} usable {}", v.in_s, v.succ, v.pred, p.gl_usable.contains(&m));
            }
        }
    }
    let starts = [feather_search::start_state(p.demand[0].root)];
    let (fwd, gws) = feather_search::forward(&snap, &starts, false);
    println!("gateways: {:?}, fwd states {}", gws, fwd.len());
    let _ = node(0,0);
    let _: Vec<NodeCoord> = vec![];
}
