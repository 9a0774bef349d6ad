//! Particle memory: the constant-size protocol record, split into
//! particle-bound fields (frame compass, carried bubble) and node-bound state
//! that travels with node occupancy through handovers.

use std::collections::VecDeque;

use crate::flow::bubble::Bubble;
use crate::flow::demand::PlanSlice;
use crate::flow::junction::JunctionState;
use crate::grid::{CoarseClass, Dir, DirSet};
use crate::kernel::frame::DirXform;
use crate::kernel::token::{RecvTag, Token};
use crate::supply::found::SupplyNodeState;
use crate::trees::cone::{Cone, FeatherRole};

/// Inbound token buffer capacity per particle. The protocol's own bounds
/// (six request entries, six availability tokens, two supply-found tokens per
/// direction) fit well under this; overflow is a protocol bug.
pub const INBOX_CAPACITY: usize = 16;

/// Which part of the instance a node belongs to.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Region {
    /// Not labeled (standalone tree programs).
    #[default]
    Plain,
    /// A node of the static core.
    Core,
    /// A node of a supply component.
    Supply,
    /// A demand node, labeled when a particle expands into it.
    Demand,
}

/// Tree membership and growth state for one node (BFS, SP and feather trees
/// on the fine grid; also the supply-component tree).
#[derive(Clone, Default, Debug)]
pub struct TreeState {
    pub parent: Option<Dir>,
    pub children: DirSet,
    pub cone: Option<Cone>,
    pub role: Option<FeatherRole>,
    pub extended: bool,
    pub is_root: bool,
    /// A growth token (or the root's initial seeding) waits to be acted on.
    pub pending: bool,
    /// BFS synchronizer: children that have not yet reported back.
    pub waiting: DirSet,
    /// Sticky flag: some leaf in the subtree grew this layer.
    pub grew: bool,
    /// A layer wave is in progress below this node.
    pub layer_open: bool,
    /// Root only: the tree is complete.
    pub done: bool,
}

impl TreeState {
    pub fn in_tree(&self) -> bool {
        self.parent.is_some() || self.is_root
    }

    pub fn translate(&self, f: impl Fn(Dir) -> Dir + Copy) -> TreeState {
        TreeState {
            parent: self.parent.map(f),
            children: self.children.map(f),
            cone: self.cone.map(|c| c.map(f)),
            role: self.role,
            extended: self.extended,
            is_root: self.is_root,
            pending: self.pending,
            waiting: self.waiting.map(f),
            grew: self.grew,
            layer_open: self.layer_open,
            done: self.done,
        }
    }
}

/// Coarse-grid classification of a node, in leader axes.
#[derive(Clone, Copy, Debug)]
pub struct GlNode {
    pub class: CoarseClass,
    pub residue: (u8, u8),
}

/// Links along the short off-grid paths between demand roots and their entry
/// grid nodes. Several roots may share a node (thin cores share entries).
#[derive(Clone, Copy, Default, Debug)]
pub struct StubState {
    pub toward_entry: Option<Dir>,
    pub toward_root: DirSet,
}

impl StubState {
    fn translate(&self, f: impl Fn(Dir) -> Dir + Copy) -> StubState {
        StubState {
            toward_entry: self.toward_entry.map(f),
            toward_root: self.toward_root.map(f),
        }
    }
}

/// State of a supply-root node: the gateway into its component(s). Several
/// components may share one root; each gets its own entry direction.
#[derive(Clone, Copy, Debug)]
pub struct SupplyRootState {
    /// Directions to the component nodes the disassembly trees are rooted at.
    pub entries: DirSet,
    pub supply_left: bool,
    /// Entries whose component tree root has been seeded.
    pub seeded: DirSet,
}

/// State of a demand-root node.
#[derive(Clone, Default, Debug)]
pub struct DemandRootState {
    pub got_token: bool,
    pub stub_sent: bool,
    /// Leader-frame hops from this node to its entry grid node (oracle-set).
    pub stub_plan: Vec<crate::grid::Dir>,
}

/// Everything bound to a node rather than a particle. Handed to the next
/// occupant, frame-translated, on every handover.
#[derive(Clone, Default, Debug)]
pub struct NodeState {
    pub region: Region,
    /// The node and all six neighbors lie in the core (oracle-derived,
    /// locally recomputable).
    pub is_inner: bool,
    /// The leader's node anchors the coarse grid.
    pub leader: bool,
    pub gl: Option<GlNode>,
    pub tree: TreeState,
    pub s: SupplyNodeState,
    pub junction: Option<JunctionState>,
    pub stub: Option<StubState>,
    pub supply_root: Option<SupplyRootState>,
    pub demand_root: Option<DemandRootState>,
    pub plan: Option<PlanSlice>,
}

impl NodeState {
    pub fn translate(&self, x: DirXform) -> NodeState {
        let f = |d: Dir| x.apply(d);
        NodeState {
            region: self.region,
            is_inner: self.is_inner,
            leader: self.leader,
            gl: self.gl,
            tree: self.tree.translate(f),
            s: self.s.translate(f),
            junction: self.junction.as_ref().map(|j| j.translate(f)),
            stub: self.stub.as_ref().map(|st| st.translate(f)),
            supply_root: self.supply_root.map(|sr| SupplyRootState {
                entries: sr.entries.map(f),
                supply_left: sr.supply_left,
                seeded: sr.seeded.map(f),
            }),
            demand_root: self.demand_root.clone(),
            plan: self.plan.as_ref().map(|p| p.translate(|v| x.apply_vec(v))),
        }
    }
}

/// The full per-particle memory record.
#[derive(Clone, Default, Debug)]
pub struct Memory {
    /// Local directions expressed in leader axes, learned in the coarse-grid
    /// flood. A frame property: stays valid as the particle moves.
    pub compass: Option<DirXform>,
    pub bubble: Option<Bubble>,
    /// State of the head node (the most recently entered node).
    pub head_state: NodeState,
    /// State of the tail node while expanded.
    pub tail_state: Option<NodeState>,
    pub inbox: VecDeque<(RecvTag, Token)>,
    /// High-water mark of plan entries held, for the memory report.
    pub plan_hwm: u32,
}

impl Memory {
    pub fn state(&self, which: crate::flow::bubble::BodyNode) -> &NodeState {
        match which {
            crate::flow::bubble::BodyNode::Head => &self.head_state,
            crate::flow::bubble::BodyNode::Tail => {
                self.tail_state.as_ref().expect("tail state of contracted particle")
            }
        }
    }

    pub fn state_mut(&mut self, which: crate::flow::bubble::BodyNode) -> &mut NodeState {
        match which {
            crate::flow::bubble::BodyNode::Head => &mut self.head_state,
            crate::flow::bubble::BodyNode::Tail => {
                self.tail_state.as_mut().expect("tail state of contracted particle")
            }
        }
    }

    pub fn note_plan_size(&mut self) {
        let n = self.head_state.plan.as_ref().map(|p| p.len()).unwrap_or(0)
            + self.tail_state.as_ref().and_then(|s| s.plan.as_ref()).map(|p| p.len()).unwrap_or(0);
        self.plan_hwm = self.plan_hwm.max(n as u32);
    }
}
