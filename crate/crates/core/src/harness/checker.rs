//! Round-by-round invariant checker: centralized, exact assertions of the
//! validity properties. Violations are data, not panics.

use std::collections::BTreeSet;

use crate::grid::{Dir, NodeCoord};
use crate::harness::feather_search::{self, Snapshot};
use crate::harness::preprocess::PreparedScenario;
use crate::kernel::config::Configuration;
use crate::kernel::memory::Region;
use crate::kernel::token::Token;
use crate::shape::is_connected;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: &'static str,
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind, self.detail)
    }
}

fn v(kind: &'static str, detail: String) -> Violation {
    Violation { kind, detail }
}

/// Stateful checker. Liveliness information propagates one hop per
/// activation (dead marks cascade from supply toward demand), so the
/// liveliness checks tolerate a propagation window proportional to the core
/// diameter before flagging.
#[derive(Default)]
pub struct Checker {
    flip_streak: std::collections::BTreeMap<u32, u32>,
    orphan_streak: std::collections::BTreeMap<NodeCoord, u32>,
    pair_streak: std::collections::BTreeMap<NodeCoord, u32>,
    window: u32,
}

impl Checker {
    pub fn new() -> Checker {
        Checker { window: 12, ..Checker::default() }
    }

    /// Set the lag tolerance from the instance size.
    pub fn with_window(window: u32) -> Checker {
        Checker { window: window.max(12), ..Checker::default() }
    }

    pub fn check(&mut self, cfg: &Configuration, prepared: &PreparedScenario) -> Vec<Violation> {
        let mut out = Vec::new();
        let snap = feather_search::snapshot(cfg);

        // occupancy and body sanity
        for (pid, p) in cfg.particles.iter().enumerate() {
            if let Some(t) = p.tail {
                if crate::grid::dist(p.head, t) != 1 {
                    out.push(v("body", format!("particle {pid} spans non-adjacent nodes")));
                }
            }
        }

        // connectivity of the occupied subgraph
        let occupied: BTreeSet<NodeCoord> = cfg.occupied_nodes().into_iter().collect();
        if !is_connected(&occupied) {
            out.push(v("connectivity", "occupied subgraph is disconnected".into()));
        }

        // #b + #d = #s
        let supply_nodes: BTreeSet<NodeCoord> = prepared
            .scenario
            .initial
            .difference(&prepared.scenario.target)
            .copied()
            .collect();
        let demand_nodes: BTreeSet<NodeCoord> = prepared
            .scenario
            .target
            .difference(&prepared.scenario.initial)
            .copied()
            .collect();
        let s_count = supply_nodes.iter().filter(|n| occupied.contains(n)).count();
        let d_count = demand_nodes.iter().filter(|n| !occupied.contains(n)).count();
        let b_count = cfg
            .particles
            .iter()
            .filter(|p| p.mem.borrow().bubble.is_some())
            .count();
        if b_count + d_count != s_count {
            out.push(v(
                "counts",
                format!("#b={b_count} + #d={d_count} != #s={s_count}"),
            ));
        }

        // junction queue bounds
        for (n, view) in &snap.nodes {
            if view.junction_queue > 6 {
                out.push(v("queue", format!("{n:?} holds {} requests", view.junction_queue)));
            }
            if view.junction_avail > 6 {
                out.push(v(
                    "queue",
                    format!("{n:?} holds {} availability tokens", view.junction_avail),
                ));
            }
        }

        // no coarse edge active in both directions
        self.check_bidirectional(&snap, &mut out);

        // single branch: both nodes of an expanded carrier sit on one link
        for (pid, p) in cfg.particles.iter().enumerate() {
            let Some(tail) = p.tail else { continue };
            let (a, b) = (p.head, tail);
            let (Some(va), Some(vb)) = (snap.nodes.get(&a), snap.nodes.get(&b)) else { continue };
            let plain_s = |x: &feather_search::NodeView| {
                x.in_s && x.gateway.is_none() && x.stub_fwd.is_none() && x.stub_back.is_empty()
            };
            if plain_s(va) && plain_s(vb) && va.region != Region::Supply {
                let d_ab = Dir::between(a, b).unwrap();
                let linked = va.succ.contains(d_ab)
                    || vb.succ.contains(d_ab.opposite())
                    || va.pred.contains(d_ab)
                    || vb.pred.contains(d_ab.opposite());
                if !linked {
                    out.push(v(
                        "branch",
                        format!("particle {pid} spans {a:?},{b:?} without a supply-graph link"),
                    ));
                }
            }
        }

        // liveliness checks only make sense once construction settled: no
        // construction tokens in flight and no pending maintenance steps
        // (flood not everywhere, stubs unsent, component trees unseeded)
        let quiescent = cfg.particles.iter().all(|p| {
            let mem = p.mem.borrow();
            let tokens_ok = mem.inbox.iter().all(|(_, t)| {
                !matches!(
                    t,
                    Token::GlFlood { .. }
                        | Token::StubMark { .. }
                        | Token::LineGrow { .. }
                        | Token::SupplyFound { .. }
                        | Token::Prune
                )
            });
            let mut sides = vec![&mem.head_state];
            if let Some(t) = mem.tail_state.as_ref() {
                sides.push(t);
            }
            let maintenance_ok = sides.iter().all(|st| {
                // node-based: carriers that moved into the core hold
                // classified node states even without a compass of their own
                let flooded = st.region != Region::Core || st.gl.is_some();
                let stub_ok =
                    st.demand_root.as_ref().map(|d| d.stub_sent).unwrap_or(true);
                let seed_ok = st
                    .supply_root
                    .map(|s| s.entries.iter().all(|e| s.seeded.contains(e)))
                    .unwrap_or(true);
                flooded && stub_ok && seed_ok
            });
            tokens_ok && maintenance_ok
        });
        if quiescent {
            self.check_liveliness(cfg, prepared, &snap, &mut out);
        } else {
            self.flip_streak.clear();
            self.orphan_streak.clear();
            self.pair_streak.clear();
        }
        out
    }

    fn check_bidirectional(&self, snap: &Snapshot, out: &mut Vec<Violation>) {
        for (&n, view) in &snap.nodes {
            let Some((dom, _)) = view.dom else { continue };
            // both directions along the line active at this node?
            let fwd = dom;
            let bwd = dom.opposite();
            let active = |travel: Dir| match view.dom {
                Some((d, _)) if d == travel => true,
                Some((d, _)) => !view.lambda.any_for_dir(d.opposite()),
                None => true,
            };
            // traffic needs the supply-graph edge, the domination slot and a
            // live continuation for that flow direction
            let usable = |travel: Dir| {
                view.succ.contains(travel)
                    && active(travel)
                    && view.lambda.any_for_dir(travel.opposite())
            };
            if usable(fwd) && usable(bwd) {
                out.push(v("bidirectional", format!("edge node {n:?} active both ways")));
            }
        }
    }

    fn check_liveliness(
        &mut self,
        cfg: &Configuration,
        prepared: &PreparedScenario,
        snap: &Snapshot,
        out: &mut Vec<Violation>,
    ) {
        let started_roots: Vec<NodeCoord> = prepared
            .demand
            .iter()
            .map(|d| d.root)
            .filter(|r| snap.nodes.get(r).map(|v| v.got_token).unwrap_or(false))
            .collect();
        let starts: Vec<feather_search::State> =
            started_roots.iter().map(|&r| feather_search::start_state(r)).collect();
        let (alive_reach, alive_gateways) = feather_search::forward(snap, &starts, true);
        let (full_reach, _) = feather_search::forward(snap, &starts, false);

        // every node holding an alive key is connected to a demand root by
        // an alive feather path (a boundary-bend token may set both beta
        // keys while only one arrival state is realizable, so the check is
        // per node, as the validity property states)
        for (&n, view) in &snap.nodes {
            if view.gateway.is_some() || view.demand_root || view.stub_fwd.is_some() {
                continue;
            }
            let has_alive = view
                .lambda
                .iter()
                .any(|(dir, _)| !view.stub_back.contains(dir));
            // a key must sit on a recorded predecessor edge
            for (dir, beta) in view.lambda.iter() {
                if !view.stub_back.contains(dir) && !view.pred.contains(dir) {
                    out.push(v(
                        "lambda-stray",
                        format!("{n:?} alive for ({dir:?},{beta}) without a predecessor edge"),
                    ));
                }
            }
            if has_alive {
                // nodes no feather path can reach at all are inert dead
                // weight; only reachable nodes must stay alive-connected,
                // and dead marks need time to cascade from supply to demand
                let reachable_at_all = full_reach.keys().any(|&(m, _, _)| m == n);
                let reachable_alive = alive_reach.keys().any(|&(m, _, _)| m == n);
                if reachable_at_all && !reachable_alive {
                    let streak = self.orphan_streak.entry(n).or_insert(0);
                    *streak += 1;
                    if *streak > self.window {
                        out.push(v(
                            "lambda-orphan",
                            format!(
                                "{n:?} holds alive keys but no alive feather path reached it for {} rounds",
                                *streak
                            ),
                        ));
                    }
                } else {
                    self.orphan_streak.remove(&n);
                }
            }
        }

        // every (started demand root, live supply root) pair stays connected
        // over alive feather paths
        let live_roots: Vec<NodeCoord> = prepared
            .supply
            .iter()
            .map(|s| s.root)
            .filter(|r| snap.nodes.get(r).map(|x| matches!(x.gateway, Some((_, true)))).unwrap_or(false))
            .collect();
        if !started_roots.is_empty() {
            for s in &live_roots {
                if !alive_gateways.contains_key(s) {
                    let streak = self.pair_streak.entry(*s).or_insert(0);
                    *streak += 1;
                    if *streak > self.window {
                        out.push(v(
                            "pair-dead",
                            format!(
                                "no alive feather path from any started demand root to supply root {s:?} for {} rounds",
                                *streak
                            ),
                        ));
                    }
                } else {
                    self.pair_streak.remove(s);
                }
            }
        }

        // bubbles heading to demand must lack an alive successor; give one
        // round of grace after a domination hand-over revives a path
        let mut flagged = BTreeSet::new();
        for p in &cfg.particles {
            let mem = p.mem.borrow();
            let Some(b) = mem.bubble else { continue };
            if b.delta != crate::flow::bubble::Delta::ToDemand {
                continue;
            }
            let vb_node = p.node(b.vb);
            let va_node = p.node(b.vb.other());
            let from = Dir::between(vb_node, va_node).unwrap();
            // a flip is owed only over usable edges holding a contracted
            // particle (the flip is a pull), and dominated directions do not
            // count even while their liveliness stays true
            let usable_target = |t: &feather_search::State| -> bool {
                let Some(x) = snap.nodes.get(&t.0) else { return false };
                if !x.occupied_contracted {
                    return false;
                }
                if x.gateway.is_some() {
                    return true;
                }
                let alive = match t.1 {
                    Some(f) => x.lambda.get(f, t.2),
                    None => true,
                };
                if !alive {
                    return false;
                }
                match (x.dom, t.1) {
                    (Some((dom, _)), Some(f)) if dom == f => {
                        // travel direction is opposite the arrival key
                        !x.lambda.any_for_dir(dom.opposite())
                    }
                    _ => true,
                }
            };
            let st = (vb_node, Some(from), b.beta);
            let revived = feather_search::transitions(snap, &st)
                .iter()
                .any(|(t, terminal)| *terminal || usable_target(t));
            if revived {
                let streak = self.flip_streak.entry(b.id).or_insert(0);
                *streak += 1;
                if *streak > self.window {
                    out.push(v(
                        "delta",
                        format!(
                            "bubble {} headed to demand beside an alive path for {} rounds",
                            b.id, *streak
                        ),
                    ));
                }
                flagged.insert(b.id);
            }
        }
        self.flip_streak.retain(|id, _| flagged.contains(id));
    }
}

/// Inject a corrupted liveliness bit, for checker self-tests.
pub fn corrupt_lambda(cfg: &mut Configuration, at: NodeCoord) -> bool {
    let Some(pid) = cfg.occupant(at) else { return false };
    let which = cfg.particles[pid].body_node_at(at).unwrap();
    let mut mem = cfg.mem_mut(pid);
    let st = mem.state_mut(which);
    if !st.s.in_s {
        return false;
    }
    // set an alive bit for a direction with no supply-graph edge
    for d in Dir::all() {
        if !st.s.pred.contains(d) && !st.s.succ.contains(d) {
            st.s.lambda.set(d, 0);
            return true;
        }
    }
    false
}
