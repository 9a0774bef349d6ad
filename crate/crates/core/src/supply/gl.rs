//! Coarse-grid construction: the leader floods residue tokens through the
//! core. Every core particle learns its node's coarse class and a compass
//! mapping its local directions to the leader's axes.

use crate::flow::bubble::BodyNode;
use crate::grid::{CoarseClass, Dir};
use crate::kernel::config::ActivationCtx;
use crate::kernel::frame::DirXform;
use crate::kernel::memory::{GlNode, Region};
use crate::kernel::token::{RecvTag, Token};

/// Coarse class of a residue pair in leader axes.
pub fn class_of_residue(a: u8, b: u8) -> CoarseClass {
    match (a, b) {
        (0, 0) => CoarseClass::GridNode,
        (1, 1) | (2, 2) => CoarseClass::Neither,
        _ => CoarseClass::EdgeNode,
    }
}

fn forward_flood(ctx: &mut ActivationCtx) {
    let (residue, compass) = {
        let mem = ctx.mem();
        let gl = mem.head_state.gl.expect("flood forward before classification");
        (gl.residue, mem.compass.expect("compass set with classification"))
    };
    for d in Dir::all() {
        let Some(q) = ctx.neighbor(BodyNode::Head, d) else { continue };
        let skip = {
            let qm = ctx.mem_of(q);
            qm.head_state.region != Region::Core || qm.compass.is_some()
        };
        if skip {
            continue;
        }
        let travel = compass.apply(d);
        let _ = ctx.send(BodyNode::Head, d, Token::GlFlood { residue, travel, compass });
    }
}

/// The leader classifies itself as the anchor grid node and starts the flood.
pub fn seed_flood(ctx: &mut ActivationCtx) {
    let ready = {
        let mem = ctx.mem();
        mem.head_state.leader && mem.compass.is_none()
    };
    if !ready {
        return;
    }
    {
        let mut mem = ctx.mem();
        mem.compass = Some(DirXform::identity());
        mem.head_state.gl = Some(GlNode { class: CoarseClass::GridNode, residue: (0, 0) });
    }
    forward_flood(ctx);
}

/// Handle a flood token: adopt residue, class and compass, then forward.
/// The compass field was rewritten for this receiver at delivery.
pub fn process_flood(
    ctx: &mut ActivationCtx,
    _tag: RecvTag,
    residue: (u8, u8),
    travel: Dir,
    compass: DirXform,
) {
    {
        let mut mem = ctx.mem();
        if mem.compass.is_some() || mem.head_state.region != Region::Core {
            return;
        }
        let step = travel.delta();
        let a = ((residue.0 as i32 + step.q).rem_euclid(3)) as u8;
        let b = ((residue.1 as i32 + step.r).rem_euclid(3)) as u8;
        mem.compass = Some(compass);
        mem.head_state.gl = Some(GlNode { class: class_of_residue(a, b), residue: (a, b) });
    }
    forward_flood(ctx);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{coarse_class, node, NodeCoord};
    use crate::kernel::config::Configuration;
    use crate::kernel::scheduler::{run_scheduler, SchedulerKind};
    use crate::shape::{hexagon, random_blob};
    use std::collections::BTreeSet;
    use std::ops::ControlFlow;

    fn flood_step(ctx: &mut ActivationCtx) {
        loop {
            let item = ctx.mem().inbox.pop_front();
            let Some((tag, token)) = item else { break };
            if let Token::GlFlood { residue, travel, compass } = token {
                process_flood(ctx, tag, residue, travel, compass);
            }
        }
        seed_flood(ctx);
    }

    fn run_flood(shape: &BTreeSet<NodeCoord>, leader: NodeCoord, seed: u64) -> Configuration {
        let mut cfg = Configuration::new(seed);
        for &n in shape.iter() {
            let pid = cfg.add_particle(n);
            let mut mem = cfg.mem_mut(pid);
            mem.head_state.region = Region::Core;
            mem.head_state.leader = n == leader;
        }
        let (_, _) = run_scheduler(
            &mut cfg,
            SchedulerKind::Sequential,
            100_000,
            &mut flood_step,
            &mut |cfg, _| {
                let done = cfg.particles.iter().all(|p| p.mem.borrow().compass.is_some());
                if done {
                    ControlFlow::Break(crate::kernel::scheduler::StopReason::Done)
                } else {
                    ControlFlow::Continue(())
                }
            },
        );
        cfg
    }

    #[test]
    fn leader_hexagon_classifies_neighbors_as_edges() {
        let shape = hexagon(node(2, 2), 1);
        let cfg = run_flood(&shape, node(2, 2), 3);
        for p in &cfg.particles {
            let gl = p.mem.borrow().head_state.gl.unwrap();
            if p.head == node(2, 2) {
                assert_eq!(gl.class, CoarseClass::GridNode);
            } else {
                assert_eq!(gl.class, CoarseClass::EdgeNode);
            }
        }
    }

    #[test]
    fn distributed_classes_match_centralized_oracle() {
        for seed in 0..6u64 {
            let shape = random_blob(seed + 9, 50);
            let leader = *shape.iter().next().unwrap();
            let cfg = run_flood(&shape, leader, seed);
            for p in &cfg.particles {
                let gl = p.mem.borrow().head_state.gl.unwrap();
                assert_eq!(gl.class, coarse_class(p.head, leader), "seed {seed} node {:?}", p.head);
            }
        }
    }

    #[test]
    fn compass_maps_local_to_leader_axes() {
        let shape = hexagon(node(0, 0), 3);
        let cfg = run_flood(&shape, node(0, 0), 11);
        let leader_pid = cfg.occupant(node(0, 0)).unwrap();
        let leader_frame = cfg.particles[leader_pid].frame;
        for p in &cfg.particles {
            let compass = p.mem.borrow().compass.unwrap();
            for d in Dir::all() {
                // direction d in p's frame, expressed in leader axes, equals
                // the true global direction mapped into the leader's frame
                let g = p.frame.to_global(d);
                assert_eq!(compass.apply(d), leader_frame.to_local(g));
            }
        }
    }
}
