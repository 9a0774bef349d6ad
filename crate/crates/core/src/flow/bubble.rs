//! Demand bubbles: the abstract unit of unmet demand carried by an expanded
//! particle, flowing from demand to supply along the supply graph.

use crate::grid::Dir;

/// Which way a bubble is traveling.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Delta {
    /// Forward, toward supply.
    ToSupply,
    /// Backward, toward demand (only after hitting a dead path).
    ToDemand,
}

/// Which body node of the carrier the bubble occupies.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BodyNode {
    Head,
    Tail,
}

impl BodyNode {
    pub fn other(self) -> BodyNode {
        match self {
            BodyNode::Head => BodyNode::Tail,
            BodyNode::Tail => BodyNode::Head,
        }
    }
}

/// A bubble and its routing flags. `vb` names the carrier body node on the
/// successor side (the node the bubble occupies); the other body node is the
/// predecessor-side node.
#[derive(Clone, Copy, Debug)]
pub struct Bubble {
    /// Inner bends taken since the last boundary bend, 0 or 1.
    pub beta: u8,
    pub delta: Delta,
    /// Successor-side body node.
    pub vb: BodyNode,
    /// Acknowledged crossing: (body node the ack landed on, direction toward
    /// the junction, exit direction), directions in the carrier's frame.
    pub granted: Option<(BodyNode, Dir, Dir)>,
    /// Exit reserved while mid-crossing, in the carrier's local frame.
    pub reserved_out: Option<Dir>,
    /// Holder activations since the acknowledgment (harness metric).
    pub cross_acts: u8,
    /// Activations spent unable to act; long stalls trigger a yield
    /// reversal that unwinds packed single-lane rings.
    pub stall: u8,
    /// Harness-side identity for metrics; never read by the algorithm.
    pub id: u32,
}

impl Bubble {
    pub fn new(id: u32) -> Bubble {
        Bubble {
            beta: 0,
            delta: Delta::ToSupply,
            vb: BodyNode::Tail,
            granted: None,
            reserved_out: None,
            cross_acts: 0,
            stall: 0,
            id,
        }
    }
}
