//! The centralized preprocessing oracle: validates the instance assumptions,
//! labels core/supply/demand, picks the leader and the component roots,
//! computes demand spanning trees and the short stub paths from demand roots
//! to their entry grid nodes, and installs everything into a configuration.

use std::collections::{BTreeMap, BTreeSet};

use crate::flow::demand::PlanSlice;
use crate::grid::{coarse_class, dist, CoarseClass, Dir, NodeCoord};
use crate::harness::scenario::Scenario;
use crate::kernel::config::Configuration;
use crate::kernel::memory::{DemandRootState, Region, SupplyRootState};
use crate::shape::{bfs_distances, components, is_simply_connected};

/// Longest accepted off-grid path from a demand root to its entry grid node.
pub const MAX_STUB_LEN: usize = 8;

#[derive(Clone, Debug)]
pub struct SupplyComponent {
    pub nodes: BTreeSet<NodeCoord>,
    /// Core particle adjacent to the component.
    pub root: NodeCoord,
    /// Component node the disassembly tree is rooted at.
    pub entry: NodeCoord,
}

#[derive(Clone, Debug)]
pub struct DemandComponent {
    pub nodes: BTreeSet<NodeCoord>,
    /// Core particle adjacent to the component; stores the spanning tree.
    pub root: NodeCoord,
    /// BFS parents within the component (parent of each component node,
    /// which may be the root itself).
    pub parents: BTreeMap<NodeCoord, NodeCoord>,
    /// Nearest core grid node where the feather tree starts.
    pub entry: NodeCoord,
    /// Core path from root to entry (excluding the root, including entry).
    pub stub: Vec<NodeCoord>,
}

#[derive(Clone, Debug)]
pub struct PreparedScenario {
    pub scenario: Scenario,
    pub core: BTreeSet<NodeCoord>,
    pub leader: NodeCoord,
    pub supply: Vec<SupplyComponent>,
    pub demand: Vec<DemandComponent>,
    /// Core nodes on usable coarse structure: grid nodes plus edge nodes of
    /// complete coarse edges.
    pub gl_usable: BTreeSet<NodeCoord>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PrepError {
    #[error("initial shape is not simply connected")]
    InitialNotSimplyConnected,
    #[error("target shape is not simply connected")]
    TargetNotSimplyConnected,
    #[error("core is empty (assumption A1)")]
    CoreEmpty,
    #[error("core is not simply connected (assumption A1)")]
    CoreNotSimplyConnected,
    #[error("coarse grid over the core is disconnected (assumption A3): {0}")]
    GlDisconnected(String),
    #[error("supply component at {0} is not simply connected")]
    SupplyNotSimplyConnected(NodeCoord),
    #[error("supply root {0} has no adjacent usable coarse-grid node")]
    SupplyUnreachable(NodeCoord),
    #[error("demand root {0} has no entry grid node within {MAX_STUB_LEN} hops")]
    DemandUnreachable(NodeCoord),
}

/// Grid nodes of the core, and the coarse-edge graph over them (edges with
/// both edge nodes and both endpoints in the core).
fn coarse_structure(
    core: &BTreeSet<NodeCoord>,
    leader: NodeCoord,
) -> (BTreeSet<NodeCoord>, BTreeMap<NodeCoord, Vec<NodeCoord>>, BTreeSet<NodeCoord>) {
    let grid_nodes: BTreeSet<NodeCoord> = core
        .iter()
        .copied()
        .filter(|&n| coarse_class(n, leader) == CoarseClass::GridNode)
        .collect();
    let mut adj: BTreeMap<NodeCoord, Vec<NodeCoord>> = BTreeMap::new();
    let mut usable: BTreeSet<NodeCoord> = grid_nodes.clone();
    for &g in &grid_nodes {
        for d in Dir::all() {
            let e1 = g.neighbor(d);
            let e2 = e1.neighbor(d);
            let far = e2.neighbor(d);
            if core.contains(&e1) && core.contains(&e2) && grid_nodes.contains(&far) {
                adj.entry(g).or_default().push(far);
                usable.insert(e1);
                usable.insert(e2);
            }
        }
    }
    (grid_nodes, adj, usable)
}

/// Root choice per component: the adjacent core node minimizing
/// (leader flood distance, coordinates).
fn pick_root(
    comp: &BTreeSet<NodeCoord>,
    core: &BTreeSet<NodeCoord>,
    flood: &BTreeMap<NodeCoord, u32>,
) -> Option<NodeCoord> {
    let mut candidates: Vec<NodeCoord> = Vec::new();
    for n in comp {
        for m in n.neighbors() {
            if core.contains(&m) {
                candidates.push(m);
            }
        }
    }
    candidates.sort();
    candidates.dedup();
    candidates.into_iter().min_by_key(|n| (flood.get(n).copied().unwrap_or(u32::MAX), *n))
}

pub fn preprocess(s: &Scenario) -> Result<PreparedScenario, PrepError> {
    if !is_simply_connected(&s.initial) {
        return Err(PrepError::InitialNotSimplyConnected);
    }
    if !is_simply_connected(&s.target) {
        return Err(PrepError::TargetNotSimplyConnected);
    }
    let core: BTreeSet<NodeCoord> =
        s.initial.intersection(&s.target).copied().collect();
    if core.is_empty() {
        return Err(PrepError::CoreEmpty);
    }
    if !is_simply_connected(&core) {
        return Err(PrepError::CoreNotSimplyConnected);
    }
    let leader = *core.iter().next().unwrap();
    let flood = bfs_distances(&core, leader);

    let (grid_nodes, coarse_adj, gl_usable) = coarse_structure(&core, leader);
    if grid_nodes.is_empty() {
        return Err(PrepError::GlDisconnected("no grid node lies in the core".into()));
    }
    // every core grid node must sit in one coarse-edge component
    {
        let start = *grid_nodes.iter().next().unwrap();
        let mut seen = BTreeSet::new();
        seen.insert(start);
        let mut queue = vec![start];
        while let Some(g) = queue.pop() {
            for &m in coarse_adj.get(&g).into_iter().flatten() {
                if seen.insert(m) {
                    queue.push(m);
                }
            }
        }
        if seen.len() != grid_nodes.len() {
            let missing = grid_nodes.iter().find(|g| !seen.contains(g)).unwrap();
            return Err(PrepError::GlDisconnected(format!(
                "grid node {missing:?} unreachable from {start:?} over complete coarse edges"
            )));
        }
    }

    // supply components and their roots
    let supply_nodes: BTreeSet<NodeCoord> =
        s.initial.difference(&s.target).copied().collect();
    let mut supply = Vec::new();
    for comp in components(&supply_nodes) {
        if !is_simply_connected(&comp) {
            return Err(PrepError::SupplyNotSimplyConnected(*comp.iter().next().unwrap()));
        }
        let root = pick_root(&comp, &core, &flood).expect("component touches the core");
        let entry = *comp
            .iter()
            .filter(|n| dist(**n, root) == 1)
            .min()
            .expect("root is adjacent to its component");
        // the feather trees must be able to attach: some neighbor of the
        // root lies on usable coarse structure (or the degenerate case where
        // the root doubles as a demand root, checked below)
        supply.push(SupplyComponent { nodes: comp, root, entry });
    }

    // demand components, roots, spanning trees, entries and stubs
    let demand_nodes: BTreeSet<NodeCoord> =
        s.target.difference(&s.initial).copied().collect();
    let mut demand = Vec::new();
    for comp in components(&demand_nodes) {
        let root = pick_root(&comp, &core, &flood).expect("component touches the core");
        // spanning tree: BFS from the root over {root} ∪ component
        let mut domain = comp.clone();
        domain.insert(root);
        let dists = bfs_distances(&domain, root);
        let mut parents = BTreeMap::new();
        for &n in &comp {
            let dn = dists[&n];
            let parent = n
                .neighbors()
                .iter()
                .copied()
                .filter(|m| domain.contains(m) && dists[m] + 1 == dn)
                .min()
                .expect("bfs parent exists");
            parents.insert(n, parent);
        }
        // entry grid node: nearest by core flood from the root
        let from_root = bfs_distances(&core, root);
        let entry = grid_nodes
            .iter()
            .copied()
            .filter(|g| from_root.contains_key(g))
            .min_by_key(|g| (from_root[g], *g));
        let Some(entry) = entry else {
            return Err(PrepError::DemandUnreachable(root));
        };
        if from_root[&entry] as usize > MAX_STUB_LEN {
            return Err(PrepError::DemandUnreachable(root));
        }
        // shortest core path root -> entry, deterministic
        let mut stub = Vec::new();
        let mut cur = entry;
        while cur != root {
            stub.push(cur);
            let dc = from_root[&cur];
            cur = cur
                .neighbors()
                .iter()
                .copied()
                .filter(|m| from_root.get(m).map(|&v| v + 1 == dc).unwrap_or(false))
                .min()
                .unwrap();
        }
        stub.reverse();
        demand.push(DemandComponent { nodes: comp, root, parents, entry, stub });
    }

    // supply attachment feasibility
    for sc in &supply {
        let attached = sc.root.neighbors().iter().any(|m| gl_usable.contains(m))
            || gl_usable.contains(&sc.root)
            || demand.iter().any(|dc| dc.root == sc.root);
        if !attached {
            return Err(PrepError::SupplyUnreachable(sc.root));
        }
    }

    Ok(PreparedScenario {
        scenario: s.clone(),
        core,
        leader,
        supply,
        demand,
        gl_usable,
    })
}

/// Build the initial configuration: contracted particles on `I` with random
/// frames drawn from `seed`, all oracle labels installed.
pub fn install(prepared: &PreparedScenario, seed: u64) -> Configuration {
    let mut cfg = Configuration::new(seed);
    for &n in &prepared.scenario.initial {
        cfg.add_particle(n);
    }
    let core = &prepared.core;
    for pid in 0..cfg.len() {
        let n = cfg.particles[pid].head;
        let frame = cfg.particles[pid].frame;
        let mut mem = cfg.mem_mut(pid);
        let st = &mut mem.head_state;
        st.region = if core.contains(&n) { Region::Core } else { Region::Supply };
        st.is_inner = core.contains(&n) && n.neighbors().iter().all(|m| core.contains(m));
        st.leader = n == prepared.leader;
        let _ = frame;
    }
    for sc in &prepared.supply {
        let pid = cfg.occupant(sc.root).unwrap();
        let frame = cfg.particles[pid].frame;
        let g = Dir::between(sc.root, sc.entry).unwrap();
        let mut mem = cfg.mem_mut(pid);
        let sr = mem.head_state.supply_root.get_or_insert(SupplyRootState {
            entries: crate::grid::DirSet::EMPTY,
            supply_left: true,
            seeded: crate::grid::DirSet::EMPTY,
        });
        sr.entries.insert(frame.to_local(g));
    }
    let leader_frame = cfg.particles[cfg.occupant(prepared.leader).unwrap()].frame;
    for dc in &prepared.demand {
        let pid = cfg.occupant(dc.root).unwrap();
        let frame = cfg.particles[pid].frame;
        // stub hops in leader axes
        let mut stub_plan = Vec::new();
        let mut prev = dc.root;
        for &hop in &dc.stub {
            let g = Dir::between(prev, hop).unwrap();
            stub_plan.push(leader_frame.to_local(g));
            prev = hop;
        }
        // the spanning tree as relative offsets in the root's local frame
        let inv = crate::kernel::frame::DirXform { mul: frame.chir, add: frame.rot }.inverse();
        let nodes: Vec<(NodeCoord, Option<NodeCoord>)> = dc
            .nodes
            .iter()
            .map(|&n| {
                let parent = dc.parents[&n];
                let p = if parent == dc.root { None } else { Some(inv.apply_vec(parent - dc.root)) };
                (inv.apply_vec(n - dc.root), p)
            })
            .collect();
        let mut mem = cfg.mem_mut(pid);
        match mem.head_state.plan.as_mut() {
            // several demand components can share a root; the plans merge
            // into one forest (offsets are all relative to the root)
            Some(plan) => {
                let extra = PlanSlice::from_tree(&nodes);
                plan.merge(extra);
            }
            None => {
                mem.head_state.demand_root =
                    Some(DemandRootState { got_token: false, stub_sent: false, stub_plan });
                mem.head_state.plan = Some(PlanSlice::from_tree(&nodes));
            }
        }
        mem.note_plan_size();
    }
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::node;
    use crate::shape::hexagon;

    fn scenario(i: BTreeSet<NodeCoord>, t: BTreeSet<NodeCoord>) -> Scenario {
        Scenario { name: "test".into(), initial: i, target: t }
    }

    #[test]
    fn identical_shapes_have_no_supply_or_demand() {
        let h = hexagon(node(0, 0), 3);
        let p = preprocess(&scenario(h.clone(), h)).unwrap();
        assert!(p.supply.is_empty());
        assert!(p.demand.is_empty());
        assert_eq!(p.core.len(), p.scenario.initial.len());
    }

    #[test]
    fn bite_and_lump_yield_one_component_each() {
        // a blob with one bite removed and one lump added on the far side
        let h = hexagon(node(0, 0), 4);
        let mut i = h.clone();
        let mut t = h.clone();
        // bite: remove a corner wedge from the target (those are supply)
        for &n in h.iter() {
            if n.q >= 3 {
                t.remove(&n);
            }
        }
        // lump: add nodes beyond the opposite corner to the target
        for r in 0..2 {
            for k in 0..3 {
                t.insert(node(-5 - r, k + r));
            }
        }
        while i.len() != t.len() {
            // balance sizes by trimming the lump
            let last = *t.iter().next_back().unwrap();
            if t.len() > i.len() {
                t.remove(&last);
            } else {
                break;
            }
        }
        if i.len() != t.len() {
            // trim initial instead
            while i.len() > t.len() {
                let n = *i.iter().find(|n| n.q >= 3).unwrap();
                i.remove(&n);
                t.remove(&n);
            }
        }
        let sc = scenario(i, t);
        let p = preprocess(&sc).unwrap();
        assert_eq!(p.supply.len(), 1, "{:?}", p.supply);
        assert_eq!(p.demand.len(), 1);
        // roots are core nodes adjacent to their components
        let sroot = p.supply[0].root;
        assert!(p.core.contains(&sroot));
        assert!(sroot.neighbors().iter().any(|m| p.supply[0].nodes.contains(m)));
        let droot = p.demand[0].root;
        assert!(p.core.contains(&droot));
        assert!(droot.neighbors().iter().any(|m| p.demand[0].nodes.contains(m)));
    }

    #[test]
    fn disconnected_core_rejected() {
        // an interior core hole would force I or T to be holey as well (the
        // enclosing ring lies in both shapes), so the reachable A1 violation
        // is a disconnected core: two blobs bridged differently in I and T
        let a = hexagon(node(0, 0), 2);
        let b = hexagon(node(10, 0), 2);
        let mut i: BTreeSet<NodeCoord> = a.union(&b).copied().collect();
        let mut t = i.clone();
        for q in 3..8 {
            i.insert(node(q, 0)); // bar in I only
        }
        for q in 2..8 {
            t.insert(node(q, 1)); // different bar in T only
        }
        i.insert(node(0, -3)); // balance sizes
        assert_eq!(i.len(), t.len());
        let err = preprocess(&scenario(i, t)).unwrap_err();
        assert_eq!(err, PrepError::CoreNotSimplyConnected);
    }

    #[test]
    fn prepared_labels_installed() {
        let h = hexagon(node(0, 0), 4);
        let mut i = h.clone();
        let mut t = h.clone();
        t.remove(&node(4, 0));
        t.insert(node(-5, 0));
        assert_eq!(i.len(), t.len());
        i = i; // silence mut
        let p = preprocess(&scenario(i, t)).unwrap();
        let cfg = install(&p, 5);
        let supply_pid = cfg.occupant(node(4, 0)).unwrap();
        assert_eq!(cfg.mem(supply_pid).head_state.region, Region::Supply);
        let leader_pid = cfg.occupant(p.leader).unwrap();
        assert!(cfg.mem(leader_pid).head_state.leader);
        let droot = p.demand[0].root;
        let dm = cfg.mem(cfg.occupant(droot).unwrap());
        let dr = dm.head_state.demand_root.as_ref().unwrap();
        assert_eq!(dr.stub_plan.len(), p.demand[0].stub.len());
        assert_eq!(dm.head_state.plan.as_ref().unwrap().len(), 1);
    }
}
