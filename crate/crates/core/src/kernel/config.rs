//! The particle configuration: occupancy, local frames, move mechanics
//! (expand, contract, handover pull) and token delivery.

use std::cell::{Ref, RefCell, RefMut};
use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::flow::bubble::BodyNode;
use crate::grid::{Dir, NodeCoord};
use crate::kernel::frame::{DirXform, LocalFrame};
use crate::kernel::memory::{Memory, NodeState, INBOX_CAPACITY};
use crate::kernel::token::{RecvTag, Token};

#[derive(Clone, Copy, PartialEq, Eq, Debug, thiserror::Error)]
pub enum MoveError {
    #[error("target node is occupied")]
    TargetOccupied,
    #[error("particle is already expanded")]
    AlreadyExpanded,
    #[error("particle is already contracted")]
    AlreadyContracted,
    #[error("handover neighbor is expanded")]
    NeighborExpanded,
    #[error("no particle across that port")]
    NoNeighbor,
    #[error("inbound token buffer is full")]
    BufferFull,
}

/// Which node an expanded particle keeps when contracting.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Keep {
    Head,
    Tail,
}

pub struct Particle {
    /// Most recently entered node.
    pub head: NodeCoord,
    /// Second node while expanded.
    pub tail: Option<NodeCoord>,
    pub frame: LocalFrame,
    pub mem: RefCell<Memory>,
    pub activations: u64,
}

impl Particle {
    pub fn is_contracted(&self) -> bool {
        self.tail.is_none()
    }

    pub fn node(&self, which: BodyNode) -> NodeCoord {
        match which {
            BodyNode::Head => self.head,
            BodyNode::Tail => self.tail.expect("tail of contracted particle"),
        }
    }

    pub fn body_node_at(&self, n: NodeCoord) -> Option<BodyNode> {
        if self.head == n {
            Some(BodyNode::Head)
        } else if self.tail == Some(n) {
            Some(BodyNode::Tail)
        } else {
            None
        }
    }
}

/// Run statistics the harness aggregates; invisible to the algorithm.
#[derive(Clone, Default, Debug)]
pub struct Metrics {
    pub bubbles_created: u32,
    /// Steps taken per bubble id.
    pub bubble_steps: HashMap<u32, u32>,
    pub junction_grants: HashMap<NodeCoord, u64>,
    pub max_request_queue: usize,
    pub max_avail_tokens: usize,
    /// Most holder activations spent crossing a junction after a grant.
    pub max_cross_activations: u32,
    /// High-water mark of directed supply-graph edges.
    pub edges_s_hwm: usize,
    pub plan_hwm: u32,
    /// Progress events (bubble moves, delta flips, bubble creations) this run.
    pub progress_events: u64,
    /// Tokens delivered (activity signal for the watchdog).
    pub tokens_sent: u64,
}

pub struct Configuration {
    pub particles: Vec<Particle>,
    occ: HashMap<NodeCoord, usize>,
    pub rng: ChaCha8Rng,
    pub round: u64,
    /// Harness flag: demand roots do not start building (used to inspect
    /// the supply graph as constructed, before the flow phase).
    pub freeze_assembly: bool,
    pub moves_this_round: u64,
    pub conflicts_this_round: u64,
    pub metrics: Metrics,
}

impl Configuration {
    pub fn new(seed: u64) -> Configuration {
        Configuration {
            particles: Vec::new(),
            occ: HashMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            round: 0,
            freeze_assembly: false,
            moves_this_round: 0,
            conflicts_this_round: 0,
            metrics: Metrics::default(),
        }
    }

    /// Add a contracted particle with a uniformly random local frame.
    pub fn add_particle(&mut self, at: NodeCoord) -> usize {
        let frame = LocalFrame::random(&mut self.rng);
        self.add_particle_with_frame(at, frame)
    }

    pub fn add_particle_with_frame(&mut self, at: NodeCoord, frame: LocalFrame) -> usize {
        assert!(!self.occ.contains_key(&at), "node {at:?} already occupied");
        let pid = self.particles.len();
        self.particles.push(Particle {
            head: at,
            tail: None,
            frame,
            mem: RefCell::new(Memory::default()),
            activations: 0,
        });
        self.occ.insert(at, pid);
        pid
    }

    /// Replace the scheduler stream, keeping particles and frames. Used to
    /// vary activation order over an otherwise identical configuration.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn occupant(&self, n: NodeCoord) -> Option<usize> {
        self.occ.get(&n).copied()
    }

    pub fn node_free(&self, n: NodeCoord) -> bool {
        !self.occ.contains_key(&n)
    }

    pub fn mem(&self, pid: usize) -> Ref<'_, Memory> {
        self.particles[pid].mem.borrow()
    }

    pub fn mem_mut(&self, pid: usize) -> RefMut<'_, Memory> {
        self.particles[pid].mem.borrow_mut()
    }

    pub fn global_of(&self, pid: usize, local: Dir) -> Dir {
        self.particles[pid].frame.to_global(local)
    }

    pub fn local_of(&self, pid: usize, global: Dir) -> Dir {
        self.particles[pid].frame.to_local(global)
    }

    /// Sender-local to receiver-local direction map.
    pub fn xform(&self, sender: usize, receiver: usize) -> DirXform {
        DirXform::between(self.particles[sender].frame, self.particles[receiver].frame)
    }

    /// Occupant across `dir` (local to `pid`) from the given body node.
    pub fn neighbor(&self, pid: usize, which: BodyNode, dir: Dir) -> Option<usize> {
        let from = self.particles[pid].node(which);
        let target = from.neighbor(self.global_of(pid, dir));
        let other = self.occupant(target)?;
        if other == pid {
            None
        } else {
            Some(other)
        }
    }

    /// Expand a contracted particle into the empty node across `dir`.
    pub fn expand(&mut self, pid: usize, dir: Dir) -> Result<(), MoveError> {
        let p = &self.particles[pid];
        if p.tail.is_some() {
            return Err(MoveError::AlreadyExpanded);
        }
        let target = p.head.neighbor(self.global_of(pid, dir));
        if self.occ.contains_key(&target) {
            return Err(MoveError::TargetOccupied);
        }
        let p = &mut self.particles[pid];
        p.tail = Some(p.head);
        p.head = target;
        self.occ.insert(target, pid);
        let mut mem = p.mem.borrow_mut();
        let old_head = std::mem::take(&mut mem.head_state);
        mem.tail_state = Some(old_head);
        self.moves_this_round += 1;
        Ok(())
    }

    /// Contract an expanded particle into one of its nodes.
    pub fn contract(&mut self, pid: usize, keep: Keep) -> Result<(), MoveError> {
        let p = &mut self.particles[pid];
        let Some(tail) = p.tail else {
            return Err(MoveError::AlreadyContracted);
        };
        let vacated = match keep {
            Keep::Head => tail,
            Keep::Tail => {
                let old_head = p.head;
                p.head = tail;
                let mut mem = p.mem.borrow_mut();
                mem.head_state = mem.tail_state.take().unwrap_or_default();
                old_head
            }
        };
        if keep == Keep::Head {
            p.mem.borrow_mut().tail_state = None;
        }
        p.tail = None;
        // the vacated node is empty now; pending tokens for it are moot
        p.mem.borrow_mut().inbox.retain(|(tag, _)| tag.node != vacated);
        self.occ.remove(&vacated);
        self.moves_this_round += 1;
        Ok(())
    }

    /// Handover pull: `pid` (expanded) pulls the contracted neighbor across
    /// `dir` from its `shared` body node. Atomically, `pid` contracts into
    /// its other node and the neighbor expands into the shared node, taking
    /// over the shared node's state (frame-translated).
    ///
    /// Returns the pulled particle's id.
    pub fn pull(&mut self, pid: usize, shared: BodyNode, dir: Dir) -> Result<usize, MoveError> {
        let p = &self.particles[pid];
        if p.tail.is_none() {
            return Err(MoveError::AlreadyContracted);
        }
        let shared_node = p.node(shared);
        let target = shared_node.neighbor(self.global_of(pid, dir));
        let qid = self.occupant(target).ok_or(MoveError::NoNeighbor)?;
        if qid == pid {
            return Err(MoveError::NoNeighbor);
        }
        if !self.particles[qid].is_contracted() {
            return Err(MoveError::NeighborExpanded);
        }

        // take the shared node's state out of p, translated into q's frame
        let x = self.xform(pid, qid);
        let transferred: NodeState = {
            let mut mem = self.particles[pid].mem.borrow_mut();
            let st = match shared {
                BodyNode::Head => std::mem::take(&mut mem.head_state),
                BodyNode::Tail => mem.tail_state.take().unwrap_or_default(),
            };
            st.translate(x)
        };

        // p contracts into its other node
        {
            let p = &mut self.particles[pid];
            match shared {
                BodyNode::Head => {
                    // keep tail: tail becomes head
                    let tail = p.tail.take().unwrap();
                    p.head = tail;
                    let mut mem = p.mem.borrow_mut();
                    mem.head_state = mem.tail_state.take().unwrap_or_default();
                }
                BodyNode::Tail => {
                    p.tail = None;
                    // head state stays; tail state was taken above
                }
            }
        }

        // q expands into the shared node
        {
            let q = &mut self.particles[qid];
            q.tail = Some(q.head);
            q.head = shared_node;
            let mut mem = q.mem.borrow_mut();
            let old_head = std::mem::take(&mut mem.head_state);
            mem.tail_state = Some(old_head);
            mem.head_state = transferred;
        }
        // tokens address nodes: anything pending for the shared node moves to
        // its new owner, re-expressed in its frame
        {
            let mut moved = Vec::new();
            {
                let mut pm = self.particles[pid].mem.borrow_mut();
                let mut keep = std::collections::VecDeque::new();
                while let Some((tag, tok)) = pm.inbox.pop_front() {
                    if tag.node == shared_node {
                        moved.push((tag, tok));
                    } else {
                        keep.push_back((tag, tok));
                    }
                }
                pm.inbox = keep;
            }
            if !moved.is_empty() {
                let mut qm = self.particles[qid].mem.borrow_mut();
                for (tag, tok) in moved {
                    qm.inbox.push_back((
                        RecvTag { node: tag.node, from: x.apply(tag.from) },
                        tok.translate(x),
                    ));
                }
            }
        }
        self.occ.insert(shared_node, qid);
        self.moves_this_round += 1;
        Ok(qid)
    }

    /// Send a token across a port. The token's direction fields are
    /// re-expressed in the receiver's frame.
    pub fn deliver(
        &mut self,
        pid: usize,
        from: BodyNode,
        dir: Dir,
        token: Token,
    ) -> Result<(), MoveError> {
        let sender_node = self.particles[pid].node(from);
        let g = self.global_of(pid, dir);
        let target = sender_node.neighbor(g);
        let qid = self.occupant(target).ok_or(MoveError::NoNeighbor)?;
        if qid == pid {
            return Err(MoveError::NoNeighbor);
        }
        let x = self.xform(pid, qid);
        let token = token.translate(x);
        let recv_dir = self.local_of(qid, g.opposite());
        let mut mem = self.particles[qid].mem.borrow_mut();
        if mem.inbox.len() >= INBOX_CAPACITY {
            return Err(MoveError::BufferFull);
        }
        mem.inbox.push_back((RecvTag { node: target, from: recv_dir }, token));
        self.metrics.tokens_sent += 1;
        Ok(())
    }

    /// Nodes currently occupied (head and tail), unsorted.
    pub fn occupied_nodes(&self) -> Vec<NodeCoord> {
        let mut v: Vec<NodeCoord> = self.occ.keys().copied().collect();
        v.sort();
        v
    }

    /// All particles contracted and the occupied set equals `target`.
    pub fn matches_shape(&self, target: &std::collections::BTreeSet<NodeCoord>) -> bool {
        if self.particles.iter().any(|p| p.tail.is_some()) {
            return false;
        }
        if self.occ.len() != target.len() {
            return false;
        }
        target.iter().all(|n| self.occ.contains_key(n))
    }
}

/// Handle given to a particle's program for one activation. Enforces the
/// one-move budget; reads and neighbor writes are atomic with respect to the
/// particle's neighborhood (the scheduler serializes activations).
pub struct ActivationCtx<'a> {
    pub cfg: &'a mut Configuration,
    pub pid: usize,
    pub moved: bool,
}

impl<'a> ActivationCtx<'a> {
    pub fn new(cfg: &'a mut Configuration, pid: usize) -> Self {
        ActivationCtx { cfg, pid, moved: false }
    }

    pub fn me(&self) -> &Particle {
        &self.cfg.particles[self.pid]
    }

    pub fn mem(&self) -> RefMut<'_, Memory> {
        self.cfg.particles[self.pid].mem.borrow_mut()
    }

    pub fn mem_of(&self, pid: usize) -> RefMut<'_, Memory> {
        self.cfg.particles[pid].mem.borrow_mut()
    }

    pub fn is_contracted(&self) -> bool {
        self.me().is_contracted()
    }

    pub fn neighbor(&self, which: BodyNode, dir: Dir) -> Option<usize> {
        self.cfg.neighbor(self.pid, which, dir)
    }

    pub fn xform_to(&self, other: usize) -> DirXform {
        self.cfg.xform(self.pid, other)
    }

    pub fn xform_from(&self, other: usize) -> DirXform {
        self.cfg.xform(other, self.pid)
    }

    pub fn node(&self, which: BodyNode) -> NodeCoord {
        self.me().node(which)
    }

    /// Occupant of an arbitrary node, with the body node it covers it with.
    pub fn at(&self, n: NodeCoord) -> Option<(usize, BodyNode)> {
        let pid = self.cfg.occupant(n)?;
        Some((pid, self.cfg.particles[pid].body_node_at(n)?))
    }

    pub fn global(&self, local: Dir) -> Dir {
        self.cfg.global_of(self.pid, local)
    }

    pub fn local(&self, global: Dir) -> Dir {
        self.cfg.local_of(self.pid, global)
    }

    fn budget(&mut self) {
        assert!(!self.moved, "second move in one activation");
        self.moved = true;
    }

    pub fn expand(&mut self, dir: Dir) -> Result<(), MoveError> {
        self.budget();
        let r = self.cfg.expand(self.pid, dir);
        if r.is_err() {
            self.cfg.conflicts_this_round += 1;
            self.moved = false;
        }
        r
    }

    pub fn contract(&mut self, keep: Keep) -> Result<(), MoveError> {
        self.budget();
        let r = self.cfg.contract(self.pid, keep);
        if r.is_err() {
            self.cfg.conflicts_this_round += 1;
            self.moved = false;
        }
        r
    }

    pub fn pull(&mut self, shared: BodyNode, dir: Dir) -> Result<usize, MoveError> {
        self.budget();
        let r = self.cfg.pull(self.pid, shared, dir);
        if r.is_err() {
            self.cfg.conflicts_this_round += 1;
            self.moved = false;
        }
        r
    }

    pub fn send(&mut self, from: BodyNode, dir: Dir, token: Token) -> Result<(), MoveError> {
        self.cfg.deliver(self.pid, from, dir, token)
    }

    pub fn rand_range(&mut self, n: usize) -> usize {
        self.cfg.rng.gen_range(0..n)
    }

    pub fn note_progress(&mut self) {
        self.cfg.metrics.progress_events += 1;
    }
}
