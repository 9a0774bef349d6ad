//! The full reconfiguration program: one function run at every activation.
//!
//! Order of duties: drain the inbox (flood, stub, growth, supply-found and
//! junction tokens), refresh liveliness for the owned nodes, run gateway and
//! demand-root bookkeeping, grow the supply-component tree, publish
//! availability, serve junction grants, then make at most one move (a bubble
//! step, or a plan expansion that creates a bubble).

use crate::flow::bubble::{BodyNode, Bubble, Delta};
use crate::flow::junction::{JunctionState, Request};
use crate::grid::{BendKind, CoarseClass, Dir};
use crate::kernel::config::ActivationCtx;
use crate::kernel::memory::Region;
use crate::kernel::token::{RecvTag, Token};
use crate::supply::found::{beta_after, bend_legal};
use crate::supply::gl;
use crate::supply::growth::{self, bend_class_at, side_of, sixty_allowed};

/// One candidate continuation for a bubble or a liveliness key.
#[derive(Clone, Copy, Debug)]
struct Cand {
    dir: Dir,
    beta_next: u8,
    /// Entering this target requires a junction grant.
    needs_grant: bool,
    target_contracted: bool,
    /// The edge is currently dominated by the opposite flow: alive for
    /// liveliness bookkeeping, but not traversable until the dominant
    /// branch dies.
    blocked: bool,
    /// Distance-to-supply estimate at the target for this arrival state
    /// (zero at gateways, components and demand drains).
    target_dist: u32,
}

pub fn step(ctx: &mut ActivationCtx) {
    process_inbox(ctx);
    maintenance(ctx);
    comp_grow(ctx);
    refresh_lambda(ctx);
    publish_availability(ctx);
    junction_duty(ctx);
    movement(ctx);
}

fn process_inbox(ctx: &mut ActivationCtx) {
    let mut deferred = Vec::new();
    loop {
        let item = ctx.mem().inbox.pop_front();
        let Some((tag, token)) = item else { break };
        match token {
            Token::GlFlood { residue, travel, compass } => {
                gl::process_flood(ctx, tag, residue, travel, compass)
            }
            Token::StubMark { rest } => {
                if !growth::process_stub_mark(ctx, tag, rest.clone()) {
                    deferred.push((tag, Token::StubMark { rest }));
                }
            }
            Token::LineGrow { kind } => growth::process_line_grow(ctx, tag, kind),
            Token::SupplyFound { beta } => growth::process_supply_found(ctx, tag, beta),
            Token::Request { out, beta_in } => process_request(ctx, tag, out, beta_in),
            Token::Availability => process_availability(ctx, tag),
            Token::Ack { out } => process_ack(ctx, tag, out),
            Token::Decline => process_decline(ctx, tag),
            Token::Deny => process_deny(ctx, tag),
            Token::Prune => growth::process_prune(ctx, tag),
            Token::Growth | Token::FinishedGrowth { .. } => {}
        }
    }
    for (tag, token) in deferred {
        ctx.mem().inbox.push_back((tag, token));
    }
}

/// A pure junction: an in-supply grid node that is not a root, stub or
/// gateway node. Crossing one requires the request/availability protocol.
fn is_junction_state(st: &crate::kernel::memory::NodeState) -> bool {
    st.s.in_s
        && st.gl.map(|g| g.class) == Some(CoarseClass::GridNode)
        && st.supply_root.is_none()
        && st.demand_root.is_none()
        && st.stub.is_none()
}

fn process_request(ctx: &mut ActivationCtx, tag: RecvTag, out: Dir, beta_in: u8) {
    let Some(side) = side_of(ctx, &tag) else { return };
    let mut mem = ctx.mem();
    let st = mem.state_mut(side);
    if !is_junction_state(st) {
        return;
    }
    let j = st.junction.get_or_insert_with(JunctionState::default);
    j.push_request(Request { from: tag.from, out, beta_in });
    let qlen = j.queue.len();
    drop(mem);
    let m = &mut ctx.cfg.metrics;
    m.max_request_queue = m.max_request_queue.max(qlen);
}

fn process_availability(ctx: &mut ActivationCtx, tag: RecvTag) {
    let Some(side) = side_of(ctx, &tag) else { return };
    let mut mem = ctx.mem();
    let st = mem.state_mut(side);
    if !is_junction_state(st) {
        return;
    }
    let j = st.junction.get_or_insert_with(JunctionState::default);
    j.avail.insert(tag.from);
    let alen = j.avail.len();
    drop(mem);
    let m = &mut ctx.cfg.metrics;
    m.max_avail_tokens = m.max_avail_tokens.max(alen);
}

fn process_ack(ctx: &mut ActivationCtx, tag: RecvTag, out: Dir) {
    let accept_side = {
        let mem = ctx.mem();
        match (&mem.bubble, side_of(ctx, &tag)) {
            (Some(_), Some(side)) => Some(side),
            _ => None,
        }
    };
    match accept_side {
        Some(side) => {
            let mut mem = ctx.mem();
            let b = mem.bubble.as_mut().unwrap();
            b.granted = Some((side, tag.from, out));
            b.cross_acts = 0;
        }
        None => {
            // reversed or resolved since requesting: release the junction
            let _ = side_of(ctx, &tag).map(|side| ctx.send(side, tag.from, Token::Decline));
        }
    }
}

/// The junction ahead cannot serve this bubble's arrival state: back out
/// like an all-dominated reversal, leaving the liveliness intact.
fn process_deny(ctx: &mut ActivationCtx, tag: RecvTag) {
    let flip = {
        let mem = ctx.mem();
        match (&mem.bubble, side_of(ctx, &tag)) {
            (Some(b), Some(side)) => side == b.vb && b.delta == Delta::ToSupply,
            _ => false,
        }
    };
    if flip {
        let mut mem = ctx.mem();
        let b = mem.bubble.as_mut().unwrap();
        b.delta = Delta::ToDemand;
        b.beta = 0;
        b.granted = None;
        b.reserved_out = None;
        drop(mem);
        ctx.note_progress();
    }
}

fn process_decline(ctx: &mut ActivationCtx, tag: RecvTag) {
    let Some(side) = side_of(ctx, &tag) else { return };
    let mut mem = ctx.mem();
    let st = mem.state_mut(side);
    if let Some(j) = st.junction.as_mut() {
        j.in_flight = None;
        j.in_flight_started = false;
    }
}

fn maintenance(ctx: &mut ActivationCtx) {
    gl::seed_flood(ctx);

    let sides: &[BodyNode] =
        if ctx.is_contracted() { &[BodyNode::Head] } else { &[BodyNode::Head, BodyNode::Tail] };
    for &side in sides {
        // gateway: seed the component trees, watch for exhaustion
        let root_info = ctx.mem().state(side).supply_root;
        if let Some(sr) = root_info {
            for e in sr.entries.iter() {
                if sr.seeded.contains(e) {
                    continue;
                }
                if let Some(q) = ctx.neighbor(side, e) {
                    let seed_ok = {
                        let qm = ctx.cfg.mem(q);
                        qm.head_state.region == Region::Supply && !qm.head_state.tree.in_tree()
                    };
                    if seed_ok {
                        let mut qm = ctx.mem_of(q);
                        qm.head_state.tree.is_root = true;
                        qm.head_state.tree.cone = Some(crate::trees::cone::Cone::full());
                    }
                    ctx.mem().state_mut(side).supply_root.as_mut().unwrap().seeded.insert(e);
                }
            }
            if sr.supply_left {
                let all_empty = sr.entries.iter().all(|e| {
                    let n = ctx.node(side).neighbor(ctx.global(e));
                    ctx.cfg.occupant(n).is_none()
                });
                if all_empty {
                    ctx.mem().state_mut(side).supply_root.as_mut().unwrap().supply_left = false;
                }
            }
        }

        // demand root: walk the stub marker once classified
        let needs_stub = {
            let mem = ctx.mem();
            let st = mem.state(side);
            st.demand_root.as_ref().map(|dr| !dr.stub_sent).unwrap_or(false)
                && mem.compass.is_some()
        };
        if needs_stub {
            let (plan, compass) = {
                let mem = ctx.mem();
                (mem.state(side).demand_root.as_ref().unwrap().stub_plan.clone(), mem.compass.unwrap())
            };
            ctx.mem().state_mut(side).demand_root.as_mut().unwrap().stub_sent = true;
            if plan.is_empty() {
                // the root sits on its entry grid node
                growth::seed_entry(ctx, side);
                let self_supply = ctx
                    .mem()
                    .state(side)
                    .supply_root
                    .map(|sr| sr.supply_left)
                    .unwrap_or(false);
                if self_supply {
                    let mut mem = ctx.mem();
                    let st = mem.state_mut(side);
                    st.s.in_s = true;
                    st.demand_root.as_mut().unwrap().got_token = true;
                }
            } else {
                let first = compass.inverse().apply(plan[0]);
                ctx.mem().state_mut(side).stub =
                    Some(crate::kernel::memory::StubState {
                        toward_entry: Some(first),
                        toward_root: crate::grid::DirSet::EMPTY,
                    });
                let _ = ctx.send(side, first, Token::StubMark { rest: plan[1..].to_vec() });
            }
        }
    }
}

/// Grow the disassembly tree inside a supply component. Adoption writes
/// memory only, so it runs for expanded carriers too (a bubble can reach a
/// small component before its tree is finished).
fn comp_grow(ctx: &mut ActivationCtx) {
    let member = |c: &ActivationCtx, q: usize| {
        let qm = c.cfg.mem(q);
        qm.head_state.region == Region::Supply && c.cfg.particles[q].is_contracted()
    };
    let sides: &[BodyNode] =
        if ctx.is_contracted() { &[BodyNode::Head] } else { &[BodyNode::Head, BodyNode::Tail] };
    for &side in sides {
        if ctx.mem().state(side).region == Region::Supply {
            crate::trees::sp::grow_step_with(ctx, &member, side);
        }
    }
}

/// Whether the node across `dir` is a supply gateway or component node;
/// stepping onto those is not bend-constrained (a supply root accepts every
/// incoming supply-graph edge).
fn target_is_supply_side(ctx: &ActivationCtx, side: BodyNode, dir: Dir) -> bool {
    let n = ctx.node(side).neighbor(ctx.global(dir));
    let Some((pid, which)) = ctx.at(n) else { return false };
    let m = ctx.cfg.mem(pid);
    let st = m.state(which);
    st.supply_root.is_some() || st.region == Region::Supply
}

/// Target-side liveliness of stepping onto the node across `dir` (local)
/// arriving with flag `beta_next`. The target may be this particle's own
/// other body node (mid-handover states); its state is read all the same.
fn target_alive(ctx: &ActivationCtx, side: BodyNode, dir: Dir, beta_next: u8) -> Option<Cand> {
    let n = ctx.node(side).neighbor(ctx.global(dir));
    let (pid, which) = ctx.at(n)?;
    let x = ctx.xform_to(pid);
    let contracted = ctx.cfg.particles[pid].is_contracted();
    let m = ctx.cfg.mem(pid);
    let st = m.state(which);
    if let Some(sr) = st.supply_root {
        if sr.supply_left {
            return Some(Cand {
                dir,
                beta_next,
                needs_grant: false,
                target_contracted: contracted,
                blocked: false,
                target_dist: 0,
            });
        }
        return None;
    }
    if st.region == Region::Supply {
        return Some(Cand {
            dir,
            beta_next,
            needs_grant: false,
            target_contracted: contracted,
            blocked: false,
            target_dist: 0,
        });
    }
    // the drain chain inside a demand component, and the demand root that
    // swallows it, are unconditionally alive; bubbles queue there until an
    // onward path through the supply graph is alive
    if st.demand_root.is_some() || st.region == Region::Demand {
        return Some(Cand {
            dir,
            beta_next,
            needs_grant: false,
            target_contracted: contracted,
            blocked: false,
            target_dist: 0,
        });
    }
    let key = x.apply(dir).opposite();
    if !st.s.lambda.get(key, beta_next) {
        return None;
    }
    let target_dist = st.s.lambda_dist[key.index() * 2 + beta_next as usize];
    // a dominated edge stays alive for the liveliness bookkeeping but is not
    // traversable while the dominant branch lives
    let travel_in_target = x.apply(dir);
    let blocked = !st.s.edge_active(travel_in_target);
    Some(Cand {
        dir,
        beta_next,
        needs_grant: is_junction_state(st),
        target_contracted: contracted,
        blocked,
        target_dist,
    })
}

/// Alive continuations from the node at `side`, for a walker that arrived
/// over `from` (local direction toward its predecessor node) carrying `beta`.
fn alive_successors(ctx: &ActivationCtx, side: BodyNode, from: Option<Dir>, beta: u8) -> Vec<Cand> {
    let (succ, stub_fwd, gateway, entry_root, region, tree_parent) = {
        let mem = ctx.mem();
        let st = mem.state(side);
        (
            st.s.succ,
            st.stub.and_then(|s| s.toward_entry),
            st.supply_root.map(|sr| (sr.entries, sr.supply_left)),
            st.s.entry_root,
            st.region,
            st.tree.parent,
        )
    };
    let mut out = Vec::new();

    // demand interior drains toward the root along the spanning tree
    if region == Region::Demand {
        if let Some(p) = tree_parent {
            if let Some(c) = target_alive(ctx, side, p, 0) {
                out.push(c);
            }
        }
        return out;
    }
    // a gateway forwards into its components while supply remains
    if let Some((entries, left)) = gateway {
        if left {
            for entry in entries.iter() {
                if ctx.neighbor(side, entry).is_none() {
                    continue; // this component is already gone
                }
                if let Some(c) = target_alive(ctx, side, entry, beta) {
                    out.push(c);
                }
            }
        }
        return out;
    }
    if let Some(fwd) = stub_fwd {
        if from != Some(fwd) {
            if let Some(c) = target_alive(ctx, side, fwd, 0) {
                out.push(c);
            }
        }
        return out;
    }

    let stub_back = ctx
        .mem()
        .state(side)
        .stub
        .map(|s| s.toward_root)
        .unwrap_or(crate::grid::DirSet::EMPTY);
    let unconstrained =
        from.is_none() || (entry_root && from.map(|f| stub_back.contains(f)).unwrap_or(false));
    for j in succ.iter() {
        if Some(j) == from {
            continue;
        }
        // entering a supply gateway or component is never bend-constrained:
        // the root accepts all its incoming supply-graph edges
        let (legal, beta_next) = if unconstrained || target_is_supply_side(ctx, side, j) {
            (true, 0)
        } else {
            let f = from.unwrap();
            let class = bend_class_at(ctx, side, f, j);
            let sixty = class == BendKind::Boundary60 && sixty_allowed(ctx, side, f, j);
            (bend_legal(class, beta, sixty), beta_after(class, beta))
        };
        if !legal {
            continue;
        }
        if let Some(c) = target_alive(ctx, side, j, beta_next) {
            out.push(c);
        }
    }
    out
}

/// Recompute the owned nodes' liveliness keys downward (true to false only).
fn refresh_lambda(ctx: &mut ActivationCtx) {
    let sides: &[BodyNode] =
        if ctx.is_contracted() { &[BodyNode::Head] } else { &[BodyNode::Head, BodyNode::Tail] };
    for &side in sides {
        let keys: Vec<(Dir, u8)> = {
            let mem = ctx.mem();
            let st = mem.state(side);
            if !st.s.in_s || st.demand_root.is_some() {
                continue;
            }
            st.s.lambda.iter().collect()
        };
        for (u, b) in keys {
            let best = alive_successors(ctx, side, Some(u), b)
                .iter()
                .map(|c| c.target_dist.saturating_add(1))
                .min();
            match best {
                Some(d) if d <= crate::supply::found::LAMBDA_CAP => {
                    let mut mem = ctx.mem();
                    mem.state_mut(side).s.lambda_dist[u.index() * 2 + b as usize] = d;
                }
                _ => {
                    let mut mem = ctx.mem();
                    let st = mem.state_mut(side);
                    st.s.lambda.clear(u, b);
                    st.s.lambda_dist[u.index() * 2 + b as usize] = 0;
                }
            }
        }
    }
}

/// An in-supply node publishes availability to its predecessor junctions
/// when it and its successor-side neighbor are contracted. The junction's
/// stored availability set is readable one hop away, so the token is only
/// (re)sent while the junction lacks it; this survives tokens that arrived
/// before the junction joined the supply graph and re-publishes after every
/// consumed grant.
fn publish_availability(ctx: &mut ActivationCtx) {
    if !ctx.is_contracted() {
        return;
    }
    let side = BodyNode::Head;
    let (in_s, preds, succs, gateway_entry) = {
        let mem = ctx.mem();
        let st = mem.state(side);
        (
            st.s.in_s,
            st.s.pred,
            st.s.succ,
            st.supply_root.map(|sr| sr.entries),
        )
    };
    if !in_s {
        return;
    }
    // room beyond: some successor-side occupant is contracted
    let mut room = false;
    let check_dirs: Vec<Dir> = match gateway_entry {
        Some(es) => es.iter().collect(),
        None => succs.iter().collect(),
    };
    for j in check_dirs {
        if let Some(q) = ctx.neighbor(side, j) {
            if ctx.cfg.particles[q].is_contracted() {
                room = true;
                break;
            }
        }
    }
    if !room {
        return;
    }
    for p in preds.iter() {
        let needs = ctx
            .neighbor(side, p)
            .and_then(|q| {
                let which = ctx.at(ctx.node(side).neighbor(ctx.global(p))).unwrap().1;
                let x = ctx.xform_to(q);
                let qm = ctx.cfg.mem(q);
                let st = qm.state(which);
                if !is_junction_state(st) {
                    return None;
                }
                let my_dir_in_theirs = x.apply(p).opposite();
                let present = st
                    .junction
                    .as_ref()
                    .map(|j| j.avail.contains(my_dir_in_theirs))
                    .unwrap_or(false);
                Some(!present)
            })
            .unwrap_or(false);
        if needs {
            let _ = ctx.send(side, p, Token::Availability);
        }
    }
}

/// Junctions serve their queues: validate the head requests and grant the
/// first one with a matching availability token.
fn junction_duty(ctx: &mut ActivationCtx) {
    let side = BodyNode::Head;
    // mark a granted crossing as started once the junction occupant expands
    if !ctx.is_contracted() {
        for s in [BodyNode::Head, BodyNode::Tail] {
            let mut mem = ctx.mem();
            if let Some(j) = mem.state_mut(s).junction.as_mut() {
                if j.in_flight.is_some() {
                    j.in_flight_started = true;
                }
            }
        }
        return;
    }
    let is_j = {
        let mem = ctx.mem();
        is_junction_state(mem.state(side))
    };
    if !is_j {
        return;
    }
    {
        // a started crossing is complete once the occupant is contracted again
        let mut mem = ctx.mem();
        if let Some(j) = mem.state_mut(side).junction.as_mut() {
            if j.in_flight.is_some() && j.in_flight_started {
                j.in_flight = None;
                j.in_flight_started = false;
            }
        }
    }
    let pending = {
        let mem = ctx.mem();
        let st = mem.state(side);
        st.junction.as_ref().map(|j| j.in_flight.is_none() && !j.queue.is_empty()).unwrap_or(false)
    };
    if !pending {
        return;
    }
    // scan FIFO: drop requests that became illegal or dead, grant the first
    // request whose availability matches and whose exit checks out
    let queue: Vec<Request> = ctx.mem().state(side).junction.as_ref().unwrap().queue.iter().copied().collect();
    let succs = ctx.mem().state(side).s.succ;
    let avail = ctx.mem().state(side).junction.as_ref().unwrap().avail;
    let trace = std::env::var("AMOEBOT_TRACE").is_ok();
    for req in queue {
        if trace {
            eprintln!(
                "junction {:?} scan req from {:?} out {:?} beta {} avail {:?}",
                ctx.node(side),
                ctx.global(req.from),
                ctx.global(req.out),
                req.beta_in,
                avail.iter().map(|d| ctx.global(d)).collect::<Vec<_>>()
            );
        }
        let class = bend_class_at(ctx, side, req.from, req.out);
        let sixty = class == BendKind::Boundary60 && sixty_allowed(ctx, side, req.from, req.out);
        let legal = succs.contains(req.out) && bend_legal(class, req.beta_in, sixty);
        let beta_out = beta_after(class, req.beta_in);
        let exit = target_alive(ctx, side, req.out, beta_out);
        // dominated exits drop the request too: holding it would clog the
        // one queue slot this direction gets, and the requester re-requests
        // with a fresh choice anyway
        let exit_ok = legal && exit.map(|c| !c.blocked).unwrap_or(false);
        if trace {
            eprintln!("   legal {legal} class {class:?} exit {exit:?}");
        }
        if !exit_ok {
            // no exit the requester could ever use for this arrival state?
            // tell it to back out instead of spinning on re-requests
            let any_usable = succs.iter().any(|out2| {
                let class2 = bend_class_at(ctx, side, req.from, out2);
                let sixty2 =
                    class2 == BendKind::Boundary60 && sixty_allowed(ctx, side, req.from, out2);
                bend_legal(class2, req.beta_in, sixty2)
                    && target_alive(ctx, side, out2, beta_after(class2, req.beta_in))
                        .map(|c| !c.blocked)
                        .unwrap_or(false)
            });
            if !any_usable {
                let _ = ctx.send(side, req.from, Token::Deny);
            }
            let mut mem = ctx.mem();
            mem.state_mut(side).junction.as_mut().unwrap().remove_request_from(req.from);
            continue;
        }
        if !avail.contains(req.out) {
            continue;
        }
        let exit_contracted = ctx
            .neighbor(side, req.out)
            .map(|q| ctx.cfg.particles[q].is_contracted())
            .unwrap_or(false);
        if !exit_contracted {
            continue;
        }
        if ctx.send(side, req.from, Token::Ack { out: req.out }).is_ok() {
            {
                let mut mem = ctx.mem();
                let j = mem.state_mut(side).junction.as_mut().unwrap();
                j.remove_request_from(req.from);
                j.avail.remove(req.out);
                j.in_flight = Some((req.from, req.out));
                j.in_flight_started = false;
            }
            let node = ctx.node(side);
            *ctx.cfg.metrics.junction_grants.entry(node).or_insert(0) += 1;
        }
        return;
    }
}

/// Test/debug probe: the alive successor candidates of a node for a walker
/// arriving from the given global direction with `beta`.
pub fn probe_successors(
    cfg: &mut crate::kernel::config::Configuration,
    node: crate::grid::NodeCoord,
    from_global: Option<Dir>,
    beta: u8,
) -> Vec<(Dir, u8, bool, bool)> {
    let Some(pid) = cfg.occupant(node) else { return Vec::new() };
    let which = cfg.particles[pid].body_node_at(node).unwrap();
    let frame = cfg.particles[pid].frame;
    let ctx = ActivationCtx::new(cfg, pid);
    let from = from_global.map(|g| frame.to_local(g));
    alive_successors(&ctx, which, from, beta)
        .into_iter()
        .map(|c| (frame.to_global(c.dir), c.beta_next, c.blocked, c.target_contracted))
        .collect()
}

fn movement(ctx: &mut ActivationCtx) {
    if ctx.mem().bubble.is_some() {
        bubble_step(ctx);
    } else if ctx.is_contracted() {
        assembly_step(ctx);
    }
}

/// Hand the bubble to the particle just pulled.
fn transfer_bubble(
    ctx: &mut ActivationCtx,
    qid: usize,
    bubble: Bubble,
    beta: u8,
    delta: Delta,
    vb: BodyNode,
) {
    let mut nb = bubble;
    nb.beta = beta;
    nb.delta = delta;
    nb.vb = vb;
    nb.stall = 0;
    nb.granted = None;
    nb.reserved_out = nb.reserved_out.map(|d| ctx.xform_to(qid).apply(d));
    ctx.mem().bubble = None;
    ctx.mem_of(qid).bubble = Some(nb);
    *ctx.cfg.metrics.bubble_steps.entry(nb.id).or_insert(0) += 1;
    ctx.note_progress();
}

fn bubble_step(ctx: &mut ActivationCtx) {
    let b = ctx.mem().bubble.expect("bubble_step without bubble");
    let vb = b.vb;
    let va = vb.other();
    if ctx.is_contracted() {
        // cannot happen: bubbles live on expanded particles
        return;
    }
    // mid-crossing activations count against the latency bound; the
    // crossing starts with the granted pull onto the junction
    if b.reserved_out.is_some() {
        let mut mem = ctx.mem();
        let bb = mem.bubble.as_mut().unwrap();
        bb.cross_acts = bb.cross_acts.saturating_add(1);
        let acts = bb.cross_acts;
        drop(mem);
        let m = &mut ctx.cfg.metrics;
        m.max_cross_activations = m.max_cross_activations.max(acts as u32 + 1);
    }

    // case 1: the bubble sits inside a supply component
    if ctx.mem().state(vb).region == Region::Supply {
        let children = ctx.mem().state(vb).tree.children;
        let mut live_children = false;
        let mut contracted: Vec<Dir> = Vec::new();
        let mut unadopted_neighbor = false;
        for d in Dir::all() {
            let Some(q) = ctx.neighbor(vb, d) else { continue };
            let which = ctx.at(ctx.node(vb).neighbor(ctx.global(d))).unwrap().1;
            let qm = ctx.cfg.mem(q);
            let st = qm.state(which);
            if children.contains(d) {
                // consumed children left empty nodes behind; only occupied
                // ones count
                live_children = true;
                if ctx.cfg.particles[q].is_contracted() {
                    contracted.push(d);
                }
            }
            if st.region == Region::Supply && !st.tree.in_tree() {
                unadopted_neighbor = true;
            }
        }
        if live_children || unadopted_neighbor {
            if contracted.is_empty() {
                return; // wait for the tree or for a child to contract
            }
            let d = contracted[ctx.rand_range(contracted.len())];
            if let Ok(qid) = ctx.pull(vb, d) {
                transfer_bubble(ctx, qid, b, b.beta, Delta::ToSupply, BodyNode::Tail);
            }
            return;
        }
        // leaf: resolve the bubble, freeing the supply node
        let keep = match va {
            BodyNode::Head => crate::kernel::config::Keep::Head,
            BodyNode::Tail => crate::kernel::config::Keep::Tail,
        };
        if ctx.contract(keep).is_ok() {
            ctx.mem().bubble = None;
            ctx.note_progress();
        }
        return;
    }

    let from = {
        let me = ctx.me();
        let g = Dir::between(me.node(vb), me.node(va)).expect("expanded body is adjacent");
        ctx.local(g)
    };

    match b.delta {
        Delta::ToSupply => {
            let cands = alive_successors(ctx, vb, Some(from), b.beta);
            let all_blocked = !cands.is_empty() && cands.iter().all(|c| c.blocked);
            if cands.is_empty() || all_blocked {
                // a bubble still in a demand component, or parked at its
                // demand root, waits rather than reversing deeper into
                // demand; reversal is only meaningful on the supply graph
                let wait = {
                    let mem = ctx.mem();
                    let st = mem.state(vb);
                    st.region == Region::Demand || st.demand_root.is_some()
                };
                if wait {
                    return;
                }
                // case 3: no alive feather successor; reverse. When every
                // continuation is merely dominated (alive but unavailable),
                // back out of the way without killing the liveliness: the
                // path resurrects once the dominant branch dies.
                {
                    let mut mem = ctx.mem();
                    let beta = b.beta;
                    if !all_blocked {
                        mem.state_mut(vb).s.lambda.clear(from, beta);
                    }
                    let bb = mem.bubble.as_mut().unwrap();
                    bb.delta = Delta::ToDemand;
                    bb.beta = 0;
                }
                if std::env::var("AMOEBOT_TRACE").is_ok() {
                    eprintln!(
                        "case3 at {:?} from {:?} beta {} all_blocked {all_blocked} round {}",
                        ctx.node(vb),
                        ctx.global(from),
                        b.beta,
                        ctx.cfg.round
                    );
                }
                if let Some((gs, jd, _)) = b.granted {
                    let _ = ctx.send(gs, jd, Token::Decline);
                    ctx.mem().bubble.as_mut().unwrap().granted = None;
                }
                ctx.mem().bubble.as_mut().unwrap().reserved_out = None;
                ctx.note_progress();
                return;
            }
            try_forward(ctx, b, vb, cands);
        }
        Delta::ToDemand => {
            // case 4: an alive successor of v_b, or of v_a, lets the bubble
            // flip back toward supply (v_b preferred)
            let vb_cands = alive_successors(ctx, vb, Some(from), b.beta);
            if try_flip_forward(ctx, b, vb, &vb_cands) {
                return;
            }
            let va_cands = alive_successors(ctx, va, Some(from.opposite()), b.beta);
            if try_flip_forward(ctx, b, va, &va_cands) {
                return;
            }
            // case 5: mark the abandoned approach dead and step back; keys
            // whose continuations are merely dominated stay alive
            if vb_cands.is_empty() {
                let mut mem = ctx.mem();
                let beta = b.beta;
                mem.state_mut(vb).s.lambda.clear(from, beta);
            }
            let preds: Vec<Dir> = {
                let mem = ctx.mem();
                let st = mem.state(va);
                let mut v: Vec<Dir> = st.s.pred.iter().collect();
                if let Some(stub) = st.stub {
                    v.extend(stub.toward_root.iter());
                }
                if st.region == Region::Demand {
                    // a bubble never retreats into a demand component
                    v.clear();
                }
                v
            };
            let mut movable = Vec::new();
            for x in preds {
                if x == from.opposite() {
                    continue;
                }
                let class = bend_class_at(ctx, va, from.opposite(), x);
                let sixty = class == BendKind::Boundary60 && sixty_allowed(ctx, va, from.opposite(), x);
                if !bend_legal(class, b.beta, sixty) {
                    continue;
                }
                if let Some(q) = ctx.neighbor(va, x) {
                    if ctx.cfg.particles[q].is_contracted() {
                        movable.push((x, beta_after(class, b.beta)));
                    }
                }
            }
            if movable.is_empty() {
                // jammed retreat: after a long stall, try facing supply
                // again; the environment may have changed meanwhile
                let mut mem = ctx.mem();
                let bb = mem.bubble.as_mut().unwrap();
                bb.stall = bb.stall.saturating_add(1);
                if bb.stall >= 50 {
                    bb.delta = Delta::ToSupply;
                    bb.beta = 0;
                    bb.stall = 0;
                }
                return;
            }
            let (x, nb) = movable[ctx.rand_range(movable.len())];
            if let Ok(qid) = ctx.pull(va, x) {
                transfer_bubble(ctx, qid, b, nb, Delta::ToDemand, BodyNode::Head);
            }
        }
    }
}

/// Forward moves for a to-supply bubble: honor a mid-crossing reservation,
/// pull a contracted alive successor, or request the junction ahead.
fn try_forward(ctx: &mut ActivationCtx, b: Bubble, vb: BodyNode, cands: Vec<Cand>) {
    let on_junction = {
        let mem = ctx.mem();
        mem.state(vb).gl.map(|g| g.class) == Some(CoarseClass::GridNode) && mem.state(vb).s.in_s
    };
    let filtered: Vec<Cand> = match (on_junction, b.reserved_out) {
        (true, Some(res)) => cands.iter().copied().filter(|c| c.dir == res).collect(),
        _ => cands.clone(),
    };
    // movable now: contracted target, and junction entries only when granted
    let movable: Vec<Cand> = filtered
        .iter()
        .copied()
        .filter(|c| {
            c.target_contracted
                && !c.blocked
                && (!c.needs_grant
                    || matches!(b.granted, Some((gs, jd, _)) if gs == vb && jd == c.dir))
        })
        .collect();
    if !movable.is_empty() {
        let pick = movable[ctx.rand_range(movable.len())];
        let entering_grant = b.granted.filter(|&(gs, jd, _)| gs == vb && jd == pick.dir);
        if let Ok(qid) = ctx.pull(vb, pick.dir) {
            let mut nb = b;
            if let Some((_, _, out)) = entering_grant {
                nb.reserved_out = Some(out);
                nb.granted = None;
                nb.cross_acts = 0;
                ctx.cfg.metrics.max_cross_activations =
                    ctx.cfg.metrics.max_cross_activations.max(1);
            } else if on_junction {
                nb.reserved_out = None;
            }
            transfer_bubble(ctx, qid, nb, pick.beta_next, Delta::ToSupply, BodyNode::Tail);
        }
        return;
    }
    // alive but jammed behind other carriers: after a long stall, yield and
    // back out (no liveliness marks) so packed single-lane rings unwind
    let mid_cross = b.reserved_out.is_some() || on_junction;
    if !mid_cross {
        let stalled = {
            let mut mem = ctx.mem();
            let bb = mem.bubble.as_mut().unwrap();
            bb.stall = bb.stall.saturating_add(1);
            bb.stall >= 50
        };
        if stalled {
            {
                let mut mem = ctx.mem();
                let bb = mem.bubble.as_mut().unwrap();
                bb.delta = Delta::ToDemand;
                bb.beta = 0;
                bb.stall = 0;
                bb.reserved_out = None;
            }
            if let Some((gs, jd, _)) = b.granted {
                let _ = ctx.send(gs, jd, Token::Decline);
                ctx.mem().bubble.as_mut().unwrap().granted = None;
            }
            ctx.note_progress();
            return;
        }
    }
    // blocked: request permission at the junction ahead, if that is the block
    if b.granted.is_some() {
        return; // already granted, waiting for the pull to become possible
    }
    let junctions: Vec<Cand> =
        filtered.iter().copied().filter(|c| c.needs_grant && !c.blocked).collect();
    if junctions.is_empty() {
        return;
    }
    let jc = junctions[ctx.rand_range(junctions.len())];
    // desired exit: a successor direction of the junction, random pick,
    // expressed in this holder's frame; the junction validates it fully
    let jnode = ctx.node(vb).neighbor(ctx.global(jc.dir));
    let Some((jpid, jwhich)) = ctx.at(jnode) else { return };
    let outs: Vec<Dir> = {
        let x = ctx.xform_from(jpid);
        let jm = ctx.cfg.mem(jpid);
        jm.state(jwhich)
            .s
            .succ
            .iter()
            .map(|d| x.apply(d))
            .filter(|&d| d != jc.dir.opposite())
            .collect()
    };
    if outs.is_empty() {
        return;
    }
    let out = outs[ctx.rand_range(outs.len())];
    let _ = ctx.send(vb, jc.dir, Token::Request { out, beta_in: jc.beta_next });
}

fn try_flip_forward(ctx: &mut ActivationCtx, b: Bubble, side: BodyNode, cands: &[Cand]) -> bool {
    let movable: Vec<Cand> = cands
        .iter()
        .copied()
        .filter(|c| {
            c.target_contracted
                && !c.blocked
                && (!c.needs_grant
                    || matches!(b.granted, Some((gs, jd, _)) if gs == side && jd == c.dir))
        })
        .collect();
    if movable.is_empty() {
        // request a grant if a junction blocks the flip
        let junctions: Vec<Cand> = cands
            .iter()
            .copied()
            .filter(|c| c.needs_grant && !c.blocked && b.granted.is_none())
            .collect();
        if let Some(jc) = junctions.first() {
            let jnode = ctx.node(side).neighbor(ctx.global(jc.dir));
            if let Some((jpid, jwhich)) = ctx.at(jnode) {
                let x = ctx.xform_from(jpid);
                let outs: Vec<Dir> = ctx
                    .cfg
                    .mem(jpid)
                    .state(jwhich)
                    .s
                    .succ
                    .iter()
                    .map(|d| x.apply(d))
                    .filter(|&d| d != jc.dir.opposite())
                    .collect();
                if !outs.is_empty() {
                    let out = outs[ctx.rand_range(outs.len())];
                    let _ = ctx.send(side, jc.dir, Token::Request { out, beta_in: jc.beta_next });
                }
            }
        }
        return false;
    }
    let pick = movable[ctx.rand_range(movable.len())];
    let entering_grant = b.granted.filter(|&(gs, jd, _)| gs == side && jd == pick.dir);
    if let Ok(qid) = ctx.pull(side, pick.dir) {
        let mut nb = b;
        if let Some((_, _, out)) = entering_grant {
            nb.reserved_out = Some(out);
        }
        transfer_bubble(ctx, qid, nb, pick.beta_next, Delta::ToSupply, BodyNode::Tail);
        ctx.note_progress(); // the delta flip itself is progress
        true
    } else {
        false
    }
}

/// Contracted particles holding a nonempty plan slice expand into the next
/// unbuilt child, creating a bubble.
fn assembly_step(ctx: &mut ActivationCtx) {
    if ctx.cfg.freeze_assembly {
        return;
    }
    let side = BodyNode::Head;
    let gate = {
        let mem = ctx.mem();
        let st = mem.state(side);
        match (&st.plan, &st.demand_root) {
            (Some(p), _) if p.is_empty() => false,
            (Some(_), Some(dr)) => dr.got_token,
            (Some(_), None) => true,
            (None, _) => false,
        }
    };
    if !gate {
        return;
    }
    let Some(d) = ctx.mem().state(side).plan.as_ref().and_then(|p| p.next_child()) else {
        return;
    };
    if ctx.expand(d).is_err() {
        return;
    }
    // after expansion the old node (with the plan) is the tail
    let sub = {
        let mut mem = ctx.mem();
        let tail = mem.tail_state.as_mut().unwrap();
        let sub = tail.plan.as_mut().unwrap().split_child(d);
        if tail.plan.as_ref().unwrap().is_empty() {
            tail.plan = None;
        }
        sub
    };
    let id = ctx.cfg.metrics.bubbles_created;
    ctx.cfg.metrics.bubbles_created += 1;
    {
        let mut mem = ctx.mem();
        mem.head_state.region = Region::Demand;
        mem.head_state.tree.parent = Some(d.opposite());
        if !sub.is_empty() {
            mem.head_state.plan = Some(sub);
        }
        mem.bubble = Some(Bubble::new(id));
        mem.note_plan_size();
    }
    ctx.note_progress();
}
