//! Tokens: constant-size messages delivered over ports. Direction-valued
//! fields are re-expressed in the receiver's frame at delivery time.

use crate::grid::Dir;
use crate::kernel::frame::DirXform;
use crate::supply::found::GrowthKind;

#[derive(Clone, Debug)]
pub enum Token {
    /// BFS layer wave traveling from the root to the current leaves.
    Growth,
    /// BFS layer completion traveling back to the root; `grew` is sticky.
    FinishedGrowth { grew: bool },
    /// Coarse-grid flood from the leader: the sender's residue in leader
    /// axes, the leader-frame direction of travel, and a compass that maps
    /// local directions to leader axes (rewritten for the receiver at
    /// delivery).
    GlFlood { residue: (u8, u8), travel: Dir, compass: DirXform },
    /// Marks the short path from a demand root to its entry grid node.
    /// Hops are leader-frame directions still to walk.
    StubMark { rest: Vec<Dir> },
    /// Feather-tree growth hop along a coarse line.
    LineGrow { kind: GrowthKind },
    /// Supply discovered; travels from supply toward demand roots.
    SupplyFound { beta: u8 },
    /// Ask a junction for permission to cross, exiting toward `out`.
    Request { out: Dir, beta_in: u8 },
    /// An exit edge pair is free; sent from the first exit edge node to its
    /// junction.
    Availability,
    /// Junction grant for a crossing exiting toward `out`.
    Ack { out: Dir },
    /// A granted bubble no longer wants to cross (it reversed).
    Decline,
    /// The junction has no usable exit for the requester's arrival state
    /// (every legal continuation is dead or dominated); the requester backs
    /// out without marking liveliness.
    Deny,
    /// The sender found no way to forward a supply-found token: the edge
    /// from the receiver to the sender is dead weight; drop it from the
    /// supply graph and cascade if the receiver becomes unreachable too.
    Prune,
}

impl Token {
    /// Re-express direction fields through the sender-to-receiver map.
    pub fn translate(self, x: DirXform) -> Token {
        match self {
            Token::Request { out, beta_in } => Token::Request { out: x.apply(out), beta_in },
            Token::Ack { out } => Token::Ack { out: x.apply(out) },
            Token::GlFlood { residue, travel, compass } => Token::GlFlood {
                residue,
                travel,
                // receiver-local -> sender-local -> leader
                compass: x.inverse().then(compass),
            },
            other => other,
        }
    }
}

/// Where a token landed: the receiving node and the receiver-local direction
/// back toward the sender.
#[derive(Clone, Copy, Debug)]
pub struct RecvTag {
    pub node: crate::grid::NodeCoord,
    pub from: Dir,
}
