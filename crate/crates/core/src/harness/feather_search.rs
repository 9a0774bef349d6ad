//! Centralized view of the supply graph for verification: a frame-free
//! snapshot of every node's links, liveliness and labels, plus reachability
//! over the bend-state graph that mirrors the distributed routing rules.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::grid::{classify_turn, BendKind, CoarseClass, Dir, DirSet, NodeCoord};
use crate::kernel::config::Configuration;
use crate::kernel::memory::Region;
use crate::supply::found::{beta_after, bend_legal, DirBetaSet};

/// One node's supply-graph state in global directions.
#[derive(Clone, Default, Debug)]
pub struct NodeView {
    pub region: Region,
    pub is_inner: bool,
    pub in_s: bool,
    pub succ: DirSet,
    pub pred: DirSet,
    pub lambda: DirBetaSet,
    pub entry_root: bool,
    pub stub_fwd: Option<Dir>,
    pub stub_back: crate::grid::DirSet,
    pub gateway: Option<(crate::grid::DirSet, bool)>,
    pub demand_root: bool,
    pub got_token: bool,
    pub class: Option<CoarseClass>,
    pub dom: Option<(Dir, bool)>,
    pub junction_queue: usize,
    pub junction_avail: usize,
    pub plan_left: usize,
    pub comp_children: DirSet,
    pub occupied_contracted: bool,
}

#[derive(Clone, Default, Debug)]
pub struct Snapshot {
    pub nodes: BTreeMap<NodeCoord, NodeView>,
}

/// Extract a global-direction snapshot of all node states.
pub fn snapshot(cfg: &Configuration) -> Snapshot {
    let mut nodes = BTreeMap::new();
    for p in &cfg.particles {
        let mem = p.mem.borrow();
        let mut sides = vec![(p.head, &mem.head_state)];
        if let Some(t) = p.tail {
            sides.push((t, mem.tail_state.as_ref().unwrap()));
        }
        for (n, st) in sides {
            let g = |d: Dir| p.frame.to_global(d);
            nodes.insert(
                n,
                NodeView {
                    region: st.region,
                    is_inner: st.is_inner,
                    in_s: st.s.in_s,
                    succ: st.s.succ.map(g),
                    pred: st.s.pred.map(g),
                    lambda: st.s.lambda.map_dirs(g),
                    entry_root: st.s.entry_root,
                    stub_fwd: st.stub.and_then(|s| s.toward_entry).map(g),
                    stub_back: st.stub.map(|s| s.toward_root.map(g)).unwrap_or_default(),
                    gateway: st.supply_root.map(|sr| (sr.entries.map(g), sr.supply_left)),
                    demand_root: st.demand_root.is_some(),
                    got_token: st.demand_root.as_ref().map(|d| d.got_token).unwrap_or(false),
                    class: st.gl.map(|x| x.class),
                    dom: st.s.dom.map(|c| (g(c.dominant_travel), c.opposite_seen)),
                    junction_queue: st.junction.as_ref().map(|j| j.queue.len()).unwrap_or(0),
                    junction_avail: st.junction.as_ref().map(|j| j.avail.len()).unwrap_or(0),
                    plan_left: st.plan.as_ref().map(|p| p.len()).unwrap_or(0),
                    comp_children: st.tree.children.map(g),
                    occupied_contracted: p.tail.is_none(),
                },
            );
        }
    }
    Snapshot { nodes }
}

/// A walker state: at `node`, having arrived from the predecessor across
/// `from` (None right after a start), carrying bend flag `beta`.
pub type State = (NodeCoord, Option<Dir>, u8);

/// Successor states from `state`, mirroring the distributed candidate rules.
/// With `use_lambda` the walk is gated by stored liveliness; without it the
/// walk explores the full supply graph. Gateways with live supply are
/// terminal (`None` is appended to mark arrival at supply).
pub fn transitions(snap: &Snapshot, state: &State) -> Vec<(State, bool)> {
    let (n, from, beta) = *state;
    let Some(v) = snap.nodes.get(&n) else { return Vec::new() };
    let mut out = Vec::new();
    // demand interior drains toward the root
    if v.region == Region::Demand {
        return out;
    }
    if let Some((entries, live)) = v.gateway {
        // arrival at a gateway resolves into the components
        let _ = entries;
        if live {
            out.push(((n, None, 0), true));
        }
        return out;
    }
    if let Some(fwd) = v.stub_fwd {
        if from != Some(fwd) {
            if let Some(t) = snap.nodes.get(&n.neighbor(fwd)) {
                if t.gateway.is_some() || t.in_s || t.stub_fwd.is_some() {
                    out.push(((n.neighbor(fwd), Some(fwd.opposite()), 0), false));
                }
            }
        }
        return out;
    }
    let unconstrained =
        from.is_none() || (v.entry_root && from.map(|f| v.stub_back.contains(f)).unwrap_or(false));
    for j in v.succ.iter() {
        if Some(j) == from {
            continue;
        }
        let supply_side = snap
            .nodes
            .get(&n.neighbor(j))
            .map(|t| t.gateway.is_some() || t.region == Region::Supply)
            .unwrap_or(false);
        let (legal, beta_next) = if unconstrained || supply_side {
            (true, 0)
        } else {
            let f = from.unwrap();
            let prev = n.neighbor(f);
            let next = n.neighbor(j);
            let turn = f.opposite().turn_to(j);
            let inner = [
                snap.nodes.get(&prev).map(|x| x.is_inner).unwrap_or(false),
                v.is_inner,
                snap.nodes.get(&next).map(|x| x.is_inner).unwrap_or(false),
            ];
            let class = classify_turn(turn, inner);
            let sixty = class == BendKind::Boundary60
                && !inner[0]
                && !inner[1]
                && !inner[2];
            (bend_legal(class, beta, sixty), beta_after(class, beta))
        };
        if !legal {
            continue;
        }
        // domination blocks traffic, not path liveliness; reachability here
        // is the liveliness notion, so dominated edges are walked
        let next = n.neighbor(j);
        if snap.nodes.get(&next).is_none() {
            continue;
        }
        out.push(((next, Some(j.opposite()), beta_next), false));
    }
    out
}

fn state_alive(snap: &Snapshot, s: &State, use_lambda: bool) -> bool {
    if !use_lambda {
        return true;
    }
    let (n, from, beta) = *s;
    let Some(v) = snap.nodes.get(&n) else { return false };
    match from {
        None => true,
        Some(f) => {
            if v.gateway.is_some() || v.region == Region::Supply {
                true
            } else if v.stub_fwd.is_some() || v.stub_back.contains(f) {
                // stub conduits are always traversable
                v.lambda.get(f, beta) || v.stub_fwd.is_some()
            } else {
                v.lambda.get(f, beta)
            }
        }
    }
}

/// Start states for a demand root: the root node itself, unconstrained.
pub fn start_state(root: NodeCoord) -> State {
    (root, None, 0)
}

/// Forward reachability with per-state distances (hops). `use_lambda` gates
/// the walk by stored liveliness. Returns distances and, for terminal supply
/// arrivals, the gateway node reached with its distance.
pub fn forward(
    snap: &Snapshot,
    starts: &[State],
    use_lambda: bool,
) -> (BTreeMap<(NodeCoord, u8, u8), u32>, BTreeMap<NodeCoord, u32>) {
    let key = |s: &State| (s.0, s.1.map(|d| d.index() as u8).unwrap_or(6), s.2);
    let mut dist: BTreeMap<(NodeCoord, u8, u8), u32> = BTreeMap::new();
    let mut gateways: BTreeMap<NodeCoord, u32> = BTreeMap::new();
    let mut queue: VecDeque<State> = VecDeque::new();
    for s in starts {
        if state_alive(snap, s, use_lambda) {
            dist.insert(key(s), 0);
            queue.push_back(*s);
        }
    }
    while let Some(s) = queue.pop_front() {
        let d = dist[&key(&s)];
        for (t, terminal) in transitions(snap, &s) {
            if terminal {
                gateways.entry(t.0).or_insert(d);
                continue;
            }
            if !state_alive(snap, &t, use_lambda) {
                continue;
            }
            if !dist.contains_key(&key(&t)) {
                dist.insert(key(&t), d + 1);
                queue.push_back(t);
            }
        }
    }
    (dist, gateways)
}

/// States that can still reach a live gateway (ignoring stored liveliness
/// when `use_lambda` is false).
pub fn can_reach_supply(snap: &Snapshot, use_lambda: bool) -> BTreeSet<(NodeCoord, u8, u8)> {
    // enumerate the full state space over S nodes, then fix-point backward
    let key = |s: &State| (s.0, s.1.map(|d| d.index() as u8).unwrap_or(6), s.2);
    let mut states: Vec<State> = Vec::new();
    for (&n, v) in &snap.nodes {
        if !(v.in_s || v.stub_fwd.is_some() || v.gateway.is_some() || v.demand_root) {
            continue;
        }
        states.push((n, None, 0));
        for f in Dir::all() {
            for b in [0u8, 1] {
                states.push((n, Some(f), b));
            }
        }
    }
    let mut good: BTreeSet<(NodeCoord, u8, u8)> = BTreeSet::new();
    let mut changed = true;
    while changed {
        changed = false;
        for s in &states {
            if good.contains(&key(s)) || !state_alive(snap, s, use_lambda) {
                continue;
            }
            for (t, terminal) in transitions(snap, s) {
                if terminal || good.contains(&key(&t)) {
                    if terminal || state_alive(snap, &t, use_lambda) {
                        good.insert(key(s));
                        changed = true;
                        break;
                    }
                }
            }
        }
    }
    good
}

/// Reverse distances: for every state, the hop count of the shortest feather
/// continuation to the given supply root node (ignoring stored liveliness).
pub fn reverse_dists_to(
    snap: &Snapshot,
    supply_root: NodeCoord,
) -> BTreeMap<(NodeCoord, u8, u8), u32> {
    let key = |s: &State| (s.0, s.1.map(|d| d.index() as u8).unwrap_or(6), s.2);
    // enumerate states and forward edges once
    let mut states: Vec<State> = Vec::new();
    for (&n, v) in &snap.nodes {
        if !(v.in_s || v.stub_fwd.is_some() || v.gateway.is_some() || v.demand_root) {
            continue;
        }
        states.push((n, None, 0));
        for f in Dir::all() {
            for b in [0u8, 1] {
                states.push((n, Some(f), b));
            }
        }
    }
    let mut rev: BTreeMap<(NodeCoord, u8, u8), Vec<(NodeCoord, u8, u8)>> = BTreeMap::new();
    let mut dist: BTreeMap<(NodeCoord, u8, u8), u32> = BTreeMap::new();
    let mut queue: VecDeque<(NodeCoord, u8, u8)> = VecDeque::new();
    for s in &states {
        for (t, terminal) in transitions(snap, s) {
            if terminal {
                if t.0 == supply_root && !dist.contains_key(&key(s)) {
                    dist.insert(key(s), 0);
                    queue.push_back(key(s));
                }
            } else {
                rev.entry(key(&t)).or_default().push(key(s));
            }
        }
    }
    while let Some(k) = queue.pop_front() {
        let d = dist[&k];
        for p in rev.get(&k).cloned().unwrap_or_default() {
            if !dist.contains_key(&p) {
                dist.insert(p, d + 1);
                queue.push_back(p);
            }
        }
    }
    dist
}

/// Plain breadth-first distance over directed supply-graph edges (bend rules
/// ignored), from a demand root. Used for supply-graph property 1.
pub fn plain_s_distance(snap: &Snapshot, root: NodeCoord) -> BTreeMap<NodeCoord, u32> {
    let mut dist = BTreeMap::new();
    let mut queue = VecDeque::new();
    dist.insert(root, 0u32);
    queue.push_back(root);
    while let Some(n) = queue.pop_front() {
        let d = dist[&n];
        let Some(v) = snap.nodes.get(&n) else { continue };
        let mut nexts: Vec<NodeCoord> = v.succ.iter().map(|j| n.neighbor(j)).collect();
        if let Some(f) = v.stub_fwd {
            nexts.push(n.neighbor(f));
        }
        if let Some((e, _)) = v.gateway {
            let _ = e;
        }
        for m in nexts {
            if snap.nodes.contains_key(&m) && !dist.contains_key(&m) {
                dist.insert(m, d + 1);
                queue.push_back(m);
            }
        }
    }
    dist
}
