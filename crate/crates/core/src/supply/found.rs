//! Per-node supply-graph state and the supply-found token rules.
//!
//! Directed edges of the supply graph point from demand to supply. For a node
//! `v`, `succ` holds the directions of edges `v -> w` (toward supply) and
//! `pred` the directions of edges `u -> v` (toward demand). Liveliness
//! `lambda(i, beta)` is keyed by the direction `i` from `v` toward a
//! predecessor and the bend flag a bubble would carry when arriving over that
//! edge.

use crate::grid::{BendKind, Dir, DirSet};

/// Hop budget for liveliness distances. Keys whose distance-to-supply
/// estimate exceeds this are dead. Self-supporting key cycles (possible
/// around boundary rings, where closed feather-legal loops exist) count up
/// to the cap and collapse instead of surviving forever.
pub const LAMBDA_CAP: u32 = 256;

/// A map from `(direction, beta)` to a boolean, packed into twelve bits.
#[derive(Clone, Copy, PartialEq, Eq, Default)]
pub struct DirBetaSet(u16);

impl DirBetaSet {
    #[inline]
    fn bit(d: Dir, beta: u8) -> u16 {
        1 << (d.index() as u16 * 2 + beta as u16)
    }

    pub fn set(&mut self, d: Dir, beta: u8) {
        self.0 |= Self::bit(d, beta);
    }

    pub fn clear(&mut self, d: Dir, beta: u8) {
        self.0 &= !Self::bit(d, beta);
    }

    pub fn get(self, d: Dir, beta: u8) -> bool {
        self.0 & Self::bit(d, beta) != 0
    }

    pub fn any_for_dir(self, d: Dir) -> bool {
        self.get(d, 0) || self.get(d, 1)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = (Dir, u8)> {
        (0..12).filter_map(move |k| {
            if self.0 & (1 << k) != 0 {
                Some((Dir::from_index(k / 2), (k % 2) as u8))
            } else {
                None
            }
        })
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn map_dirs(self, f: impl Fn(Dir) -> Dir) -> DirBetaSet {
        let mut out = DirBetaSet::default();
        for (d, b) in self.iter() {
            out.set(f(d), b);
        }
        out
    }
}

impl std::fmt::Debug for DirBetaSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:012b}", self.0)
    }
}

/// What kind of feather-tree growth reached a node.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GrowthKind {
    Shaft,
    Branch,
}

/// Domination claim for the coarse edge this edge node lies on.
///
/// `dominant_travel` is the direction of bubble travel along the line that
/// reserved the edge first. The opposite direction stays inactive while any
/// lambda entry of the dominant direction is still alive.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct DomClaim {
    pub dominant_travel: Dir,
    pub opposite_seen: bool,
}

/// Supply-graph state carried by whichever particle occupies the node.
#[derive(Clone, Default, Debug)]
pub struct SupplyNodeState {
    pub in_s: bool,
    /// Directions toward supply-graph successors.
    pub succ: DirSet,
    /// Directions toward supply-graph predecessors.
    pub pred: DirSet,
    /// Liveliness per (predecessor direction, beta).
    pub lambda: DirBetaSet,
    /// Distance-to-supply estimates backing the liveliness keys
    /// (direction-major, beta minor). Refreshed Bellman-Ford style.
    pub lambda_dist: [u32; 12],
    /// Stored supply-found tokens per (successor direction, beta).
    pub stored: DirBetaSet,
    /// Feather-growth arrivals: direction toward the tree predecessor hop.
    pub growth_in: [Option<GrowthKind>; 6],
    /// Directions this node has already extended growth toward.
    pub growth_out: DirSet,
    /// Set on the grid node where a demand root's feather tree originates.
    pub entry_root: bool,
    /// Domination state for the coarse edge through this edge node.
    pub dom: Option<DomClaim>,
}

impl SupplyNodeState {
    pub fn growth_in_dirs(&self) -> DirSet {
        let mut s = DirSet::EMPTY;
        for d in Dir::all() {
            if self.growth_in[d.index()].is_some() {
                s.insert(d);
            }
        }
        s
    }

    /// Whether bubbles may travel in direction `travel` over this edge node.
    /// True when unclaimed, claimed in the same direction, or when the
    /// dominating direction has died out.
    pub fn edge_active(&self, travel: Dir) -> bool {
        match self.dom {
            None => true,
            Some(c) if c.dominant_travel == travel => true,
            Some(c) => {
                // dominated direction: usable only once the dominant one is dead
                let pred_dir_of_dominant = c.dominant_travel.opposite();
                !self.lambda.any_for_dir(pred_dir_of_dominant)
            }
        }
    }

    pub fn translate(&self, f: impl Fn(Dir) -> Dir + Copy) -> SupplyNodeState {
        let mut growth_in = [None; 6];
        for d in Dir::all() {
            if let Some(k) = self.growth_in[d.index()] {
                growth_in[f(d).index()] = Some(k);
            }
        }
        let mut lambda_dist = [0u32; 12];
        for d in Dir::all() {
            for b in 0..2usize {
                lambda_dist[f(d).index() * 2 + b] = self.lambda_dist[d.index() * 2 + b];
            }
        }
        SupplyNodeState {
            in_s: self.in_s,
            succ: self.succ.map(f),
            pred: self.pred.map(f),
            lambda: self.lambda.map_dirs(f),
            lambda_dist,
            stored: self.stored.map_dirs(f),
            growth_in,
            growth_out: self.growth_out.map(f),
            entry_root: self.entry_root,
            dom: self.dom.map(|c| DomClaim {
                dominant_travel: f(c.dominant_travel),
                opposite_seen: c.opposite_seen,
            }),
        }
    }
}

/// Update the bend flag after taking a bend of the given kind.
/// Straight keeps the flag, an inner bend sets it, boundary bends reset it.
pub fn beta_after(kind: BendKind, beta: u8) -> u8 {
    match kind {
        BendKind::Straight => beta,
        BendKind::Inner120 => 1,
        BendKind::Boundary120 | BendKind::Boundary60 => 0,
        BendKind::Reversal => beta,
    }
}

/// Whether a step taking a bend of the given kind is legal for a walker
/// carrying flag `beta`. `allow_sixty` grants the coarse-grid 60-degree bend.
pub fn bend_legal(kind: BendKind, beta: u8, allow_sixty: bool) -> bool {
    match kind {
        BendKind::Straight => true,
        BendKind::Boundary120 => true,
        BendKind::Inner120 => beta == 0,
        BendKind::Boundary60 => allow_sixty,
        BendKind::Reversal => false,
    }
}

/// The set of lambda beta-keys a token forward through a bend establishes.
///
/// A bubble arriving at the node from the predecessor with flag `b` can use
/// the continuation the token came from when:
/// - the bend at the node is inner: only `b = 0` (and the token must carry 0),
/// - the bend is boundary: any `b`,
/// - straight: `b = 0` always, `b = 1` only when the token carries 0.
pub fn lambda_keys_for_forward(kind: BendKind, token_beta: u8) -> &'static [u8] {
    match kind {
        BendKind::Inner120 => &[0],
        BendKind::Boundary120 | BendKind::Boundary60 => &[0, 1],
        BendKind::Straight => {
            if token_beta == 0 {
                &[0, 1]
            } else {
                &[0]
            }
        }
        BendKind::Reversal => &[],
    }
}
