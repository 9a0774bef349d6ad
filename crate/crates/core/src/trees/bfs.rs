//! Breadth-first SP-tree growth synchronized by growth / finished-growth
//! tokens: layers grow in lockstep, and the root learns termination from a
//! finished-growth token whose grew flag stayed clear.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use crate::flow::bubble::BodyNode;
use crate::grid::{Dir, NodeCoord};
use crate::kernel::config::{ActivationCtx, Configuration};
use crate::kernel::scheduler::{run_scheduler, RunTrace, SchedulerKind, StopReason};
use crate::kernel::token::Token;

/// Adopt every unclaimed occupied neighbor of `ctx`'s particle, writing the
/// parent link into the neighbor's memory. Returns the adopted directions.
fn adopt_all(ctx: &mut ActivationCtx) -> Vec<Dir> {
    let mut adopted = Vec::new();
    for d in Dir::all() {
        let Some(q) = ctx.neighbor(BodyNode::Head, d) else { continue };
        {
            let qm = ctx.mem_of(q);
            if qm.head_state.tree.in_tree() {
                continue;
            }
        }
        let toward_me = ctx.xform_to(q).apply(d).opposite();
        ctx.mem_of(q).head_state.tree.parent = Some(toward_me);
        ctx.mem().head_state.tree.children.insert(d);
        adopted.push(d);
    }
    adopted
}

fn send_to_children(ctx: &mut ActivationCtx, token: Token) {
    let children = ctx.mem().head_state.tree.children;
    for d in children.iter() {
        ctx.send(BodyNode::Head, d, token.clone()).expect("child vanished");
    }
}

/// One activation of the synchronized BFS program.
pub fn step(ctx: &mut ActivationCtx) {
    // drain inbound tokens
    loop {
        let item = ctx.mem().inbox.pop_front();
        let Some((tag, token)) = item else { break };
        match token {
            Token::Growth => {
                ctx.mem().head_state.tree.pending = true;
            }
            Token::FinishedGrowth { grew } => {
                let mut mem = ctx.mem();
                let t = &mut mem.head_state.tree;
                t.waiting.remove(tag.from);
                t.grew |= grew;
            }
            _ => unreachable!("unexpected token in bfs program"),
        }
    }

    let (is_root, pending, waiting_empty, has_children, in_tree, done) = {
        let mem = ctx.mem();
        let t = &mem.head_state.tree;
        (t.is_root, t.pending, t.waiting.is_empty(), !t.children.is_empty(), t.in_tree(), t.done)
    };
    if !in_tree || done {
        return;
    }

    if pending {
        ctx.mem().head_state.tree.pending = false;
        if has_children {
            // interior node: forward the wave and wait for reports
            let children = ctx.mem().head_state.tree.children;
            {
                let mut mem = ctx.mem();
                mem.head_state.tree.waiting = children;
                mem.head_state.tree.layer_open = true;
            }
            send_to_children(ctx, Token::Growth);
        } else {
            // leaf: grow one layer, then report
            let adopted = adopt_all(ctx);
            let grew = !adopted.is_empty();
            if is_root {
                if grew {
                    let children = ctx.mem().head_state.tree.children;
                    {
                        let mut mem = ctx.mem();
                        mem.head_state.tree.waiting = children;
                        mem.head_state.tree.layer_open = true;
                    }
                    send_to_children(ctx, Token::Growth);
                } else {
                    ctx.mem().head_state.tree.done = true;
                }
            } else {
                let parent = ctx.mem().head_state.tree.parent.unwrap();
                ctx.send(BodyNode::Head, parent, Token::FinishedGrowth { grew })
                    .expect("parent vanished");
            }
        }
        return;
    }

    // a layer below this node just completed: pass one finished token up,
    // or start the next layer when this is the root
    let layer_open = ctx.mem().head_state.tree.layer_open;
    if layer_open && waiting_empty {
        let grew = ctx.mem().head_state.tree.grew;
        {
            let mut mem = ctx.mem();
            mem.head_state.tree.layer_open = false;
            mem.head_state.tree.grew = false;
        }
        if is_root {
            if grew {
                let children = ctx.mem().head_state.tree.children;
                {
                    let mut mem = ctx.mem();
                    mem.head_state.tree.waiting = children;
                    mem.head_state.tree.layer_open = true;
                }
                send_to_children(ctx, Token::Growth);
            } else {
                ctx.mem().head_state.tree.done = true;
            }
        } else {
            let parent = ctx.mem().head_state.tree.parent.unwrap();
            ctx.send(BodyNode::Head, parent, Token::FinishedGrowth { grew })
                .expect("parent vanished");
        }
    }
}

/// Run the synchronized BFS tree from `root` to completion.
pub fn run_bfs_tree(
    cfg: &mut Configuration,
    root: usize,
    kind: SchedulerKind,
    max_rounds: u64,
) -> (RunTrace, StopReason) {
    {
        let mut mem = cfg.mem_mut(root);
        mem.head_state.tree.is_root = true;
        mem.head_state.tree.pending = true;
    }
    run_scheduler(cfg, kind, max_rounds, &mut step, &mut |cfg, _trace| {
        if cfg.mem(root).head_state.tree.done {
            ControlFlow::Break(StopReason::Done)
        } else {
            ControlFlow::Continue(())
        }
    })
}

/// Parent map in global coordinates: node -> parent node (None for the root).
pub fn parent_map(cfg: &Configuration) -> BTreeMap<NodeCoord, Option<NodeCoord>> {
    let mut out = BTreeMap::new();
    for p in &cfg.particles {
        let mem = p.mem.borrow();
        let t = &mem.head_state.tree;
        if t.in_tree() {
            let parent = t.parent.map(|d| p.head.neighbor(p.frame.to_global(d)));
            out.insert(p.head, parent);
        }
    }
    out
}

/// Depth of every tree member, by walking parent links.
pub fn tree_depths(cfg: &Configuration) -> BTreeMap<NodeCoord, u32> {
    let parents = parent_map(cfg);
    let mut out = BTreeMap::new();
    for (&n, _) in parents.iter() {
        let mut d = 0;
        let mut cur = n;
        loop {
            match parents.get(&cur).copied().flatten() {
                Some(p) => {
                    d += 1;
                    cur = p;
                    assert!(d as usize <= parents.len(), "cycle in tree at {n:?}");
                }
                None => break,
            }
        }
        out.insert(n, d);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::node;
    use crate::shape::{bfs_distances, random_blob};

    #[test]
    fn single_particle_terminates_immediately() {
        let mut cfg = Configuration::new(9);
        let root = cfg.add_particle(node(0, 0));
        let (trace, reason) = run_bfs_tree(&mut cfg, root, SchedulerKind::Sequential, 50);
        assert_eq!(reason, StopReason::Done);
        assert!(trace.completed_rounds() <= 3);
    }

    #[test]
    fn straight_line_becomes_path_tree() {
        let mut cfg = Configuration::new(5);
        for i in 0..7 {
            cfg.add_particle(node(i, 0));
        }
        let (_, reason) = run_bfs_tree(&mut cfg, 0, SchedulerKind::Sequential, 4000);
        assert_eq!(reason, StopReason::Done);
        let depths = tree_depths(&cfg);
        for i in 0..7 {
            assert_eq!(depths[&node(i, 0)], i as u32);
        }
    }

    #[test]
    fn depths_match_bfs_distances_on_random_shapes() {
        for seed in 0..8u64 {
            let shape = random_blob(seed, 40);
            let mut cfg = Configuration::new(seed);
            let mut root = 0;
            for (i, &n) in shape.iter().enumerate() {
                cfg.add_particle(n);
                if i == 0 {
                    root = 0;
                }
            }
            let root_node = *shape.iter().next().unwrap();
            let (_, reason) = run_bfs_tree(&mut cfg, root, SchedulerKind::Sequential, 100_000);
            assert_eq!(reason, StopReason::Done, "seed {seed}");
            let want = bfs_distances(&shape, root_node);
            let got = tree_depths(&cfg);
            assert_eq!(got.len(), shape.len(), "seed {seed}: tree spans shape");
            for (n, d) in got {
                assert_eq!(d, want[&n], "seed {seed} node {n:?}");
            }
        }
    }

    #[test]
    fn async_scheduler_also_builds_sp_tree() {
        let shape = random_blob(3, 35);
        let mut cfg = Configuration::new(17);
        for &n in shape.iter() {
            cfg.add_particle(n);
        }
        let (_, reason) = run_bfs_tree(&mut cfg, 0, SchedulerKind::Asynchronous, 100_000);
        assert_eq!(reason, StopReason::Done);
        let root_node = *shape.iter().next().unwrap();
        let want = bfs_distances(&shape, root_node);
        for (n, d) in tree_depths(&cfg) {
            assert_eq!(d, want[&n]);
        }
    }
}
