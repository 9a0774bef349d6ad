//! Cone-based SP-tree growth: members adopt in-cone neighbors, passing each
//! child the intersection of their own cone with the 120-degree cone around
//! the adoption port. Region roots detect themselves locally and widen their
//! cone to 180 degrees, which lets growth continue around reflex corners.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use crate::flow::bubble::BodyNode;
use crate::grid::{Dir, NodeCoord};
use crate::kernel::config::{ActivationCtx, Configuration};
use crate::kernel::scheduler::{run_scheduler, RunTrace, SchedulerKind, StopReason};
use crate::trees::cone::Cone;

/// Intersect the parent's cone with the 120-degree window around the
/// adoption port `i` and re-express it in the child's frame via `f`.
pub fn assign_child_cone(parent_cone: Cone, i: Dir, f: impl Fn(Dir) -> Dir) -> Cone {
    assert!(parent_cone.contains(i), "adoption port outside parent cone");
    parent_cone.intersect_around(i).expect("nonempty by construction").map(f)
}

/// The three-part local test for a region root: a 2-cone `[i-1, i]` (or
/// `[i, i+1]`) with the node beyond the occupied flank empty. Returns the
/// extended 180-degree cone if the test fires. `member` bounds the shape the
/// tree grows in (all particles for standalone trees, one supply component
/// during disassembly setup).
pub fn detect_reflex_extension(
    ctx: &ActivationCtx,
    member: &dyn Fn(&ActivationCtx, usize) -> bool,
    side: BodyNode,
) -> Option<Cone> {
    let mem = ctx.mem();
    let t = &mem.state(side).tree;
    if t.extended || t.is_root {
        return None;
    }
    let cone = t.cone?;
    let parent = t.parent?;
    if cone.len() != 2 {
        return None;
    }
    let i = parent.opposite();
    drop(mem);
    let occupied = |d: Dir| {
        ctx.neighbor(side, d).map(|q| member(ctx, q)).unwrap_or(false)
    };
    // cone [i-1, i]: extend to [i-1, i+2] when i+2 empty and i+1 occupied
    if cone.lo() == i.rotate(-1) && cone.hi() == i && !occupied(i.rotate(2)) && occupied(i.rotate(1))
    {
        return Some(Cone::new(i.rotate(-1), 4));
    }
    // mirrored: cone [i, i+1]: extend to [i-2, i+1]
    if cone.lo() == i && cone.hi() == i.rotate(1) && !occupied(i.rotate(-2)) && occupied(i.rotate(-1))
    {
        return Some(Cone::new(i.rotate(-2), 4));
    }
    None
}

/// One activation of cone-based growth over the sub-shape `member` selects,
/// acting for the node at `side` (adoption writes memory, so expanded
/// particles may keep growing the tree).
pub fn grow_step_with(
    ctx: &mut ActivationCtx,
    member: &dyn Fn(&ActivationCtx, usize) -> bool,
    side: BodyNode,
) {
    let in_tree = ctx.mem().state(side).tree.in_tree();
    if !in_tree {
        return;
    }
    if let Some(wide) = detect_reflex_extension(ctx, member, side) {
        let mut mem = ctx.mem();
        mem.state_mut(side).tree.cone = Some(wide);
        mem.state_mut(side).tree.extended = true;
    }
    let Some(cone) = ctx.mem().state(side).tree.cone else { return };
    for d in cone.dirs() {
        let Some(q) = ctx.neighbor(side, d) else { continue };
        if !member(ctx, q) || !ctx.cfg.particles[q].is_contracted() {
            continue;
        }
        if ctx.mem_of(q).head_state.tree.in_tree() {
            continue;
        }
        let x = ctx.xform_to(q);
        let child_cone = assign_child_cone(cone, d, |dd| x.apply(dd));
        {
            let mut qm = ctx.mem_of(q);
            qm.head_state.tree.parent = Some(x.apply(d).opposite());
            qm.head_state.tree.cone = Some(child_cone);
        }
        ctx.mem().state_mut(side).tree.children.insert(d);
    }
}

/// One activation of the cone SP-tree program over the whole configuration.
pub fn step(ctx: &mut ActivationCtx) {
    grow_step_with(ctx, &|_, _| true, BodyNode::Head);
}

/// Grow an SP-tree from `root` until quiescence (all particles joined, plus
/// two settle rounds for late cone extensions).
pub fn run_sp_tree(
    cfg: &mut Configuration,
    root: usize,
    kind: SchedulerKind,
    max_rounds: u64,
) -> (RunTrace, StopReason) {
    {
        let mut mem = cfg.mem_mut(root);
        mem.head_state.tree.is_root = true;
        mem.head_state.tree.cone = Some(Cone::full());
    }
    let mut settle = 0u32;
    run_scheduler(cfg, kind, max_rounds, &mut step, &mut |cfg, _| {
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
    })
}

/// Nodes whose cone was widened by the reflex extension.
pub fn extension_sites(cfg: &Configuration) -> BTreeSet<NodeCoord> {
    cfg.particles
        .iter()
        .filter(|p| p.mem.borrow().head_state.tree.extended)
        .map(|p| p.head)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::node;
    use crate::shape::{bfs_distances, hexagon, random_blob};
    use crate::trees::bfs::tree_depths;
    use crate::trees::spm::spm_oracle;

    fn build(shape: &BTreeSet<NodeCoord>, root_node: NodeCoord, seed: u64) -> Configuration {
        let mut cfg = Configuration::new(seed);
        let mut root = usize::MAX;
        for &n in shape.iter() {
            let pid = cfg.add_particle(n);
            if n == root_node {
                root = pid;
            }
        }
        let (_, reason) = run_sp_tree(&mut cfg, root, SchedulerKind::Sequential, 50_000);
        assert_eq!(reason, StopReason::Done);
        cfg
    }

    #[test]
    fn convex_blob_no_extensions_all_paths_shortest() {
        let shape = hexagon(node(0, 0), 4);
        let cfg = build(&shape, node(4, 0), 2);
        assert!(extension_sites(&cfg).is_empty());
        let want = bfs_distances(&shape, node(4, 0));
        for (n, d) in tree_depths(&cfg) {
            assert_eq!(d, want[&n]);
        }
    }

    #[test]
    fn extension_sites_equal_spm_region_roots_on_l_shape() {
        let mut shape = BTreeSet::new();
        for q in 0..8 {
            for r in 0..3 {
                shape.insert(node(q, r));
            }
        }
        for r in 3..8 {
            for q in 0..3 {
                shape.insert(node(q, r));
            }
        }
        let root_node = node(7, 0);
        let cfg = build(&shape, root_node, 11);
        let spm = spm_oracle(root_node, &shape).unwrap();
        assert_eq!(extension_sites(&cfg), spm.region_roots());
        // depth equals in-shape distance everywhere
        let want = bfs_distances(&shape, root_node);
        let got = tree_depths(&cfg);
        assert_eq!(got.len(), shape.len());
        for (n, d) in got {
            assert_eq!(d, want[&n], "node {n:?}");
        }
    }

    #[test]
    fn random_shapes_depths_match_bfs() {
        for seed in 0..10u64 {
            let shape = random_blob(seed + 100, 60);
            let root_node = *shape.iter().next().unwrap();
            let cfg = build(&shape, root_node, seed);
            let want = bfs_distances(&shape, root_node);
            let got = tree_depths(&cfg);
            assert_eq!(got.len(), shape.len(), "seed {seed}");
            for (n, d) in got {
                assert_eq!(d, want[&n], "seed {seed} node {n:?}");
            }
        }
    }
}
