//! Feather trees: SP-trees with straight shafts (3-cones) and straight
//! branches (1-cones). The root seeds shafts on a maximal independent set of
//! its neighbors; branches spawn fresh shafts around reflex corners. The
//! resulting tree is independent of the activation order.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use crate::flow::bubble::BodyNode;
use crate::grid::{Dir, DirSet, NodeCoord};
use crate::kernel::config::{ActivationCtx, Configuration};
use crate::kernel::scheduler::{run_scheduler, RunTrace, SchedulerKind, StopReason};
use crate::trees::cone::{Cone, FeatherRole};

/// Greedy maximal independent set on the cycle of occupied neighbor ports,
/// scanning ascending from `start`. Deterministic.
pub fn maximal_independent_set(occupied: DirSet, start: Dir) -> DirSet {
    let mut taken = DirSet::EMPTY;
    for k in 0..6 {
        let d = start.rotate(k);
        if occupied.contains(d) && !taken.contains(d.rotate(-1)) && !taken.contains(d.rotate(1)) {
            taken.insert(d);
        }
    }
    taken
}

fn adopt(ctx: &mut ActivationCtx, d: Dir, role: FeatherRole, cone: Cone) -> bool {
    let Some(q) = ctx.neighbor(BodyNode::Head, d) else { return false };
    if ctx.mem_of(q).head_state.tree.in_tree() {
        return false;
    }
    let x = ctx.xform_to(q);
    {
        let mut qm = ctx.mem_of(q);
        qm.head_state.tree.parent = Some(x.apply(d).opposite());
        qm.head_state.tree.cone = Some(cone.map(|dd| x.apply(dd)));
        qm.head_state.tree.role = Some(role);
    }
    ctx.mem().head_state.tree.children.insert(d);
    true
}

/// One activation of the feather-tree program. `n_ind_start` picks the
/// root's independent-set scan origin (port 0 per default, the other class
/// starts at port 1).
pub fn step(ctx: &mut ActivationCtx, n_ind_start: Dir) {
    let (in_tree, is_root, pending, role, cone) = {
        let mem = ctx.mem();
        let t = &mem.head_state.tree;
        (t.in_tree(), t.is_root, t.pending, t.role, t.cone)
    };
    if !in_tree {
        return;
    }

    if is_root && pending {
        ctx.mem().head_state.tree.pending = false;
        let mut occupied = DirSet::EMPTY;
        for d in Dir::all() {
            if ctx.neighbor(BodyNode::Head, d).is_some() {
                occupied.insert(d);
            }
        }
        let shafts = maximal_independent_set(occupied, n_ind_start);
        for d in occupied.iter() {
            if shafts.contains(d) {
                adopt(ctx, d, FeatherRole::Shaft, Cone::three(d));
            } else {
                adopt(ctx, d, FeatherRole::Branch, Cone::one(d));
            }
        }
        return;
    }

    let Some(role) = role else { return };
    let Some(cone) = cone else { return };
    let parent = ctx.mem().head_state.tree.parent;
    let Some(parent) = parent else { return };
    let travel = parent.opposite();

    match role {
        FeatherRole::Shaft => {
            // continue the shaft straight, start branches on the flanks
            adopt(ctx, travel, FeatherRole::Shaft, Cone::three(travel));
            for s in [-1, 1] {
                let d = travel.rotate(s);
                if cone.contains(d) {
                    adopt(ctx, d, FeatherRole::Branch, Cone::one(d));
                }
            }
        }
        FeatherRole::Branch => {
            adopt(ctx, travel, FeatherRole::Branch, Cone::one(travel));
            // reflex-corner rule: spawn a new shaft toward travel+1 when the
            // node at travel+2 is empty and travel+1 is occupied (mirrored
            // for the other side)
            for s in [1i32, -1] {
                let beyond = travel.rotate(2 * s);
                let side = travel.rotate(s);
                if ctx.neighbor(BodyNode::Head, beyond).is_none()
                    && ctx.neighbor(BodyNode::Head, side).is_some()
                {
                    adopt(ctx, side, FeatherRole::Shaft, Cone::three(side));
                }
            }
        }
        FeatherRole::Root => {}
    }
}

/// Grow a feather tree from `root` to quiescence.
pub fn run_feather_tree(
    cfg: &mut Configuration,
    root: usize,
    kind: SchedulerKind,
    max_rounds: u64,
    n_ind_start: Dir,
) -> (RunTrace, StopReason) {
    {
        let mut mem = cfg.mem_mut(root);
        mem.head_state.tree.is_root = true;
        mem.head_state.tree.pending = true;
        mem.head_state.tree.role = Some(FeatherRole::Root);
        mem.head_state.tree.cone = Some(Cone::full());
    }
    let mut settle = 0u32;
    run_scheduler(
        cfg,
        kind,
        max_rounds,
        &mut |ctx| step(ctx, n_ind_start),
        &mut |cfg, _| {
            let members = cfg
                .particles
                .iter()
                .filter(|p| p.mem.borrow().head_state.tree.in_tree())
                .count();
            if members == cfg.particles.len() {
                settle += 1;
                if settle >= 3 {
                    return ControlFlow::Break(StopReason::Done);
                }
            }
            ControlFlow::Continue(())
        },
    )
}

/// Parent map plus roles, in global coordinates.
pub fn feather_map(cfg: &Configuration) -> BTreeMap<NodeCoord, (Option<NodeCoord>, FeatherRole)> {
    let mut out = BTreeMap::new();
    for p in &cfg.particles {
        let mem = p.mem.borrow();
        let t = &mem.head_state.tree;
        if t.in_tree() {
            let parent = t.parent.map(|d| p.head.neighbor(p.frame.to_global(d)));
            out.insert(p.head, (parent, t.role.unwrap_or(FeatherRole::Root)));
        }
    }
    out
}
