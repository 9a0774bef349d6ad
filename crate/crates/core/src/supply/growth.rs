//! Feather-tree growth over the coarse grid and supply-found
//! back-propagation.
//!
//! Growth hops node to node along coarse lines: edge nodes pass straight
//! through, grid nodes apply the coarse feather rules (shafts continue
//! straight and emit branch flanks, branches continue straight and spawn
//! shafts near the boundary). A node adjacent to a supply root with remaining
//! supply injects a supply-found token; the token walks back toward demand
//! roots over every bend-legal predecessor, recording supply-graph edges and
//! seeding liveliness.

use crate::flow::bubble::BodyNode;
use crate::grid::{classify_turn, BendKind, CoarseClass, Dir};
use crate::kernel::config::ActivationCtx;
use crate::kernel::memory::Region;
use crate::kernel::token::{RecvTag, Token};
use crate::supply::found::{
    beta_after, bend_legal, lambda_keys_for_forward, DomClaim, GrowthKind,
};

/// Body node covering the tagged node, if this particle still owns it.
pub fn side_of(ctx: &ActivationCtx, tag: &RecvTag) -> Option<BodyNode> {
    ctx.me().body_node_at(tag.node)
}

fn is_inner_at(ctx: &ActivationCtx, n: crate::grid::NodeCoord) -> bool {
    match ctx.at(n) {
        Some((pid, which)) => {
            let m = ctx.cfg.mem(pid);
            let v = m.state(which).is_inner;
            v
        }
        None => false,
    }
}

/// Classify the bend formed at `side` between the neighbor across
/// `toward_prev` and the neighbor across `toward_next` (both local).
pub fn bend_class_at(
    ctx: &ActivationCtx,
    side: BodyNode,
    toward_prev: Dir,
    toward_next: Dir,
) -> BendKind {
    let here = ctx.node(side);
    let prev = here.neighbor(ctx.global(toward_prev));
    let next = here.neighbor(ctx.global(toward_next));
    let turn = toward_prev.opposite().turn_to(toward_next);
    let self_inner = {
        let m = ctx.cfg.mem(ctx.pid);
        m.state(side).is_inner
    };
    let prev_inner = is_inner_at(ctx, prev);
    let next_inner = is_inner_at(ctx, next);
    classify_turn(turn, [prev_inner, self_inner, next_inner])
}

/// Whether the coarse 60-degree bend is permitted here: all three bend
/// vertices sit on the boundary.
pub fn sixty_allowed(ctx: &ActivationCtx, side: BodyNode, toward_prev: Dir, toward_next: Dir) -> bool {
    let here = ctx.node(side);
    let prev = here.neighbor(ctx.global(toward_prev));
    let next = here.neighbor(ctx.global(toward_next));
    let self_inner = {
        let m = ctx.cfg.mem(ctx.pid);
        m.state(side).is_inner
    };
    !is_inner_at(ctx, prev) && !self_inner && !is_inner_at(ctx, next)
}

/// A coarse line hop in direction `d` can start here: the first edge node
/// exists in the core.
fn usable1(ctx: &ActivationCtx, side: BodyNode, d: Dir) -> bool {
    let n = ctx.node(side).neighbor(ctx.global(d));
    match ctx.at(n) {
        Some((pid, which)) => ctx.cfg.mem(pid).state(which).region == Region::Core,
        None => false,
    }
}

/// Coarse continuations for growth arriving at a grid node heading `travel`:
/// straight plus both flanks, with a sixty-degree detour where a flank line
/// is missing. Growth is deliberately generous — whether a node pair ends up
/// usable by tokens and bubbles is decided by the bend grammar during
/// supply-found passing, so extra tree edges only widen the search, and the
/// prune pass removes branches no demand root can enter. One-hop knowledge
/// only; coarse-boundary detection from farther away is not attempted.
pub fn junction_continuations(
    ctx: &ActivationCtx,
    side: BodyNode,
    kind: GrowthKind,
    travel: Dir,
) -> Vec<(Dir, GrowthKind)> {
    let u = |d: Dir| usable1(ctx, side, d);
    let mut out = Vec::new();
    if u(travel) {
        out.push((travel, kind));
    }
    for s in [1i32, -1] {
        let flank = travel.rotate(s);
        if u(flank) {
            out.push((flank, GrowthKind::Branch));
        } else if u(travel.rotate(2 * s)) {
            // flank blocked: the sixty-degree detour keeps coverage near
            // indirect boundary junctions
            out.push((travel.rotate(2 * s), GrowthKind::Shaft));
        }
    }
    out
}

fn extend(ctx: &mut ActivationCtx, side: BodyNode, d: Dir, kind: GrowthKind) {
    if ctx.mem().state(side).s.growth_out.contains(d) {
        return;
    }
    if ctx.send(side, d, Token::LineGrow { kind }).is_ok() {
        ctx.mem().state_mut(side).s.growth_out.insert(d);
    }
}

/// Seed a demand root's feather tree at its entry grid node: shafts on a
/// maximal independent set of usable coarse directions, branches elsewhere.
pub fn seed_entry(ctx: &mut ActivationCtx, side: BodyNode) {
    ctx.mem().state_mut(side).s.entry_root = true;
    let mut usable = crate::grid::DirSet::EMPTY;
    for d in Dir::all() {
        if usable1(ctx, side, d) {
            usable.insert(d);
        }
    }
    let shafts = crate::trees::feather::maximal_independent_set(usable, Dir::from_index(0));
    for d in usable.iter() {
        let kind = if shafts.contains(d) { GrowthKind::Shaft } else { GrowthKind::Branch };
        extend(ctx, side, d, kind);
    }
    try_attach_supply_root(ctx, side);
}

/// Walk the stub marker toward the entry grid node. Hops are leader-frame
/// directions; each node needs its compass before it can forward.
/// Returns false when the token must wait (requeued by the caller).
pub fn process_stub_mark(ctx: &mut ActivationCtx, tag: RecvTag, rest: Vec<Dir>) -> bool {
    let Some(side) = side_of(ctx, &tag) else { return true };
    let Some(compass) = ctx.mem().compass else { return false };
    {
        let st = ctx.mem().state(side).stub.unwrap_or_default();
        let mut st = st;
        st.toward_root.insert(tag.from);
        if let Some(&first) = rest.first() {
            st.toward_entry = Some(compass.inverse().apply(first));
        }
        ctx.mem().state_mut(side).stub = Some(st);
    }
    match rest.split_first() {
        None => seed_entry(ctx, side),
        Some((&first, remaining)) => {
            let local = compass.inverse().apply(first);
            let _ = ctx.send(side, local, Token::StubMark { rest: remaining.to_vec() });
        }
    }
    true
}

/// Handle a growth hop arriving over `tag`.
pub fn process_line_grow(ctx: &mut ActivationCtx, tag: RecvTag, kind: GrowthKind) {
    let Some(side) = side_of(ctx, &tag) else { return };
    let fresh = {
        let mut mem = ctx.mem();
        let st = mem.state_mut(side);
        if st.region != Region::Core {
            return;
        }
        let slot = &mut st.s.growth_in[tag.from.index()];
        if slot.is_some() {
            false
        } else {
            *slot = Some(kind);
            true
        }
    };
    if !fresh {
        return;
    }
    let class = ctx.mem().state(side).gl.map(|g| g.class);
    match class {
        Some(CoarseClass::EdgeNode) => {
            extend(ctx, side, tag.from.opposite(), kind);
        }
        Some(CoarseClass::GridNode) => {
            for (d, k) in junction_continuations(ctx, side, kind, tag.from.opposite()) {
                extend(ctx, side, d, k);
            }
        }
        _ => return,
    }
    try_attach_supply_root(ctx, side);
    replay_to_new_pred(ctx, side, tag.from);
}

/// If a supply root with remaining supply sits next to this node, inject a
/// supply-found token for it (once per root direction).
pub fn try_attach_supply_root(ctx: &mut ActivationCtx, side: BodyNode) {
    for d in Dir::all() {
        let n = ctx.node(side).neighbor(ctx.global(d));
        let Some((pid, which)) = ctx.at(n) else { continue };
        if pid == ctx.pid {
            continue;
        }
        let ok = {
            let qm = ctx.cfg.mem(pid);
            qm.state(which).supply_root.map(|sr| sr.supply_left).unwrap_or(false)
        };
        if !ok {
            continue;
        }
        if ctx.mem().state(side).s.stored.get(d, 0) {
            continue;
        }
        // mark the root's gateway links: it accepts this incoming edge
        {
            let x = ctx.xform_to(pid);
            let mut qm = ctx.cfg.mem_mut(pid);
            let st = qm.state_mut(which);
            st.s.in_s = true;
            st.s.pred.insert(x.apply(d).opposite());
        }
        accept_supply_found(ctx, side, d, 0, false, true);
    }
}

/// The set of valid predecessors for a token that arrived from `incoming`
/// with flag `beta`: growth predecessors reachable by a legal bend, plus the
/// stub link toward the demand root. Returns (direction, forwarded beta,
/// lambda keys).
pub fn valid_predecessors(
    ctx: &ActivationCtx,
    side: BodyNode,
    incoming: Dir,
    beta: u8,
    unconstrained: bool,
) -> Vec<(Dir, u8, &'static [u8])> {
    let (preds, stub_back) = {
        let mem = ctx.mem();
        let st = mem.state(side);
        (
            st.s.growth_in_dirs(),
            st.stub.map(|s| s.toward_root).unwrap_or(crate::grid::DirSet::EMPTY),
        )
    };
    let mut out = Vec::new();
    for u in preds.iter() {
        if u == incoming {
            continue;
        }
        if unconstrained {
            out.push((u, 0, &[0u8, 1][..]));
            continue;
        }
        let class = bend_class_at(ctx, side, incoming, u);
        let sixty = class == BendKind::Boundary60 && sixty_allowed(ctx, side, incoming, u);
        if bend_legal(class, beta, sixty) {
            out.push((u, beta_after(class, beta), lambda_keys_for_forward(class, beta)));
        }
    }
    for back in stub_back.iter() {
        if back != incoming {
            // stubs are unconstrained conduits to their demand roots
            out.push((back, 0, &[0u8, 1][..]));
        }
    }
    out
}

/// Execute the supply-found steps at this node: record the successor, claim
/// edge domination, forward to valid predecessors, store the token.
/// `injected` marks token creation next to a supply root: finding no
/// predecessor yet is normal there (the tree may arrive later and replay),
/// so no dead-end prune is sent.
pub fn accept_supply_found(
    ctx: &mut ActivationCtx,
    side: BodyNode,
    incoming: Dir,
    beta: u8,
    unconstrained: bool,
    injected: bool,
) {
    let dup = ctx.mem().state(side).s.stored.get(incoming, beta);
    if dup {
        return;
    }
    {
        let mut mem = ctx.mem();
        let st = mem.state_mut(side);
        st.s.in_s = true;
        st.s.succ.insert(incoming);
        st.s.stored.set(incoming, beta);
    }
    claim_domination(ctx, side, incoming);

    // a stub node relays straight to the demand root; the entry node both
    // relays to the stub and fans out over tree predecessors
    let is_stub_interior = {
        let mem = ctx.mem();
        let st = mem.state(side);
        st.stub.is_some() && !st.s.entry_root && st.demand_root.is_none()
    };
    if is_stub_interior {
        let backs = ctx.mem().state(side).stub.unwrap().toward_root;
        for back in backs.iter() {
            if back == incoming {
                continue;
            }
            {
                let mut mem = ctx.mem();
                let st = mem.state_mut(side);
                st.s.pred.insert(back);
                st.s.lambda.set(back, 0);
                st.s.lambda.set(back, 1);
            }
            let _ = ctx.send(side, back, Token::SupplyFound { beta: 0 });
        }
        return;
    }
    if ctx.mem().state(side).demand_root.is_some() {
        let mut mem = ctx.mem();
        mem.state_mut(side).demand_root.as_mut().unwrap().got_token = true;
        return;
    }

    let entry_unconstrained = ctx.mem().state(side).s.entry_root;
    let targets = valid_predecessors(ctx, side, incoming, beta, unconstrained || entry_unconstrained);
    if targets.is_empty() && !entry_unconstrained && !injected {
        // nowhere to forward: this token walked into a branch no feather
        // path from a demand root can use; scrub it from the supply graph
        let preds_empty = ctx.mem().state(side).s.pred.is_empty();
        if preds_empty {
            ctx.mem().state_mut(side).s.in_s = false;
        }
        let _ = ctx.send(side, incoming, Token::Prune);
        return;
    }
    for (u, fwd_beta, keys) in targets {
        {
            let mut mem = ctx.mem();
            let st = mem.state_mut(side);
            st.s.pred.insert(u);
            for &b in keys {
                st.s.lambda.set(u, b);
            }
        }
        let _ = ctx.send(side, u, Token::SupplyFound { beta: fwd_beta });
    }
}

/// A successor-side node reported the edge toward it as dead weight: drop
/// the predecessor link, and cascade toward supply when this node becomes
/// unreachable itself.
pub fn process_prune(ctx: &mut ActivationCtx, tag: RecvTag) {
    let Some(side) = side_of(ctx, &tag) else { return };
    let cascade = {
        let mut mem = ctx.mem();
        let st = mem.state_mut(side);
        // root gateways are not part of the prunable tree structure
        if st.supply_root.is_some() || st.demand_root.is_some() {
            return;
        }
        if !st.s.pred.contains(tag.from) {
            return;
        }
        st.s.pred.remove(tag.from);
        st.s.lambda.clear(tag.from, 0);
        st.s.lambda.clear(tag.from, 1);
        let dead_now = st.s.pred.is_empty()
            && !st.s.entry_root
            && st.demand_root.is_none()
            && st.stub.is_none()
            && st.supply_root.is_none();
        if dead_now {
            st.s.in_s = false;
        }
        if dead_now { Some(st.s.succ) } else { None }
    };
    if let Some(succs) = cascade {
        for j in succs.iter() {
            let _ = ctx.send(side, j, Token::Prune);
        }
    }
}

/// Token handler for `Token::SupplyFound`.
pub fn process_supply_found(ctx: &mut ActivationCtx, tag: RecvTag, beta: u8) {
    let Some(side) = side_of(ctx, &tag) else { return };
    if ctx.mem().state(side).region != Region::Core {
        return;
    }
    accept_supply_found(ctx, side, tag.from, beta, false, false);
}

/// A new tree predecessor appeared: replay at most one stored token per beta
/// value to it, as if forwarding step 3 had seen it.
pub fn replay_to_new_pred(ctx: &mut ActivationCtx, side: BodyNode, new_pred: Dir) {
    let stored = ctx.mem().state(side).s.stored;
    let entry_unconstrained = ctx.mem().state(side).s.entry_root;
    for want_beta in [0u8, 1] {
        let mut candidates: Vec<Dir> = stored
            .iter()
            .filter(|&(_, b)| b == want_beta)
            .map(|(d, _)| d)
            .collect();
        candidates.sort_by_key(|d| d.index());
        for i in candidates {
            if i == new_pred {
                continue;
            }
            let (legal, fwd_beta, keys) = if entry_unconstrained {
                (true, 0, &[0u8, 1][..])
            } else {
                let class = bend_class_at(ctx, side, i, new_pred);
                let sixty =
                    class == BendKind::Boundary60 && sixty_allowed(ctx, side, i, new_pred);
                (
                    bend_legal(class, want_beta, sixty),
                    beta_after(class, want_beta),
                    lambda_keys_for_forward(class, want_beta),
                )
            };
            if !legal {
                continue;
            }
            {
                let mut mem = ctx.mem();
                let st = mem.state_mut(side);
                st.s.in_s = true;
                st.s.pred.insert(new_pred);
                for &b in keys {
                    st.s.lambda.set(new_pred, b);
                }
            }
            let _ = ctx.send(side, new_pred, Token::SupplyFound { beta: fwd_beta });
            break; // one per beta value
        }
    }
}

/// First come, first served per coarse edge: claim the travel direction, or
/// record this direction as dominated when the partner edge node (or this
/// one) already holds the opposite claim.
fn claim_domination(ctx: &mut ActivationCtx, side: BodyNode, travel: Dir) {
    let is_edge = ctx.mem().state(side).gl.map(|g| g.class) == Some(CoarseClass::EdgeNode);
    if !is_edge {
        return;
    }
    let existing = ctx.mem().state(side).s.dom;
    if let Some(mut dom) = existing {
        if dom.dominant_travel == travel.opposite() {
            dom.opposite_seen = true;
            ctx.mem().state_mut(side).s.dom = Some(dom);
        }
        return;
    }
    // partner edge node: one more hop along the line axis
    let residue = {
        let mem = ctx.mem();
        mem.state(side).gl.unwrap().residue
    };
    let partner_claim = partner_dir(ctx, residue).and_then(|pd| {
        let n = ctx.node(side).neighbor(ctx.global(pd));
        let (pid, which) = ctx.at(n)?;
        if pid == ctx.pid {
            return None;
        }
        let x = ctx.xform_from(pid);
        let m = ctx.cfg.mem(pid);
        let claim = m.state(which).s.dom.map(|c| DomClaim {
            dominant_travel: x.apply(c.dominant_travel),
            opposite_seen: c.opposite_seen,
        });
        claim
    });
    let claim = match partner_claim {
        Some(c) if c.dominant_travel == travel.opposite() => {
            DomClaim { dominant_travel: travel.opposite(), opposite_seen: true }
        }
        _ => DomClaim { dominant_travel: travel, opposite_seen: false },
    };
    ctx.mem().state_mut(side).s.dom = Some(claim);
}

/// Local direction toward this edge node's partner on the same coarse edge,
/// from the node's residue in leader axes.
fn partner_dir(ctx: &ActivationCtx, residue: (u8, u8)) -> Option<Dir> {
    let compass = ctx.mem().compass?;
    for d in Dir::all() {
        let v = d.delta();
        let near = ((v.q.rem_euclid(3)) as u8, (v.r.rem_euclid(3)) as u8);
        let far = (((2 * v.q).rem_euclid(3)) as u8, ((2 * v.r).rem_euclid(3)) as u8);
        if residue == near {
            // one step along leader-dir d from a grid node: partner is ahead
            return Some(compass.inverse().apply(d));
        }
        if residue == far {
            return Some(compass.inverse().apply(d).opposite());
        }
    }
    None
}
