//! Triangular-lattice geometry: axial coordinates, the six unit directions,
//! hop distance, factor-three coarse classification and bend classification.
//!
//! Everything in this module is pure integer arithmetic on the infinite
//! lattice; occupancy and protocol state live elsewhere.

use std::fmt;
use std::ops::{Add, Neg, Sub};

/// Axial coordinate of a node on the infinite triangular grid.
///
/// The six unit directions, in index order, are
/// `(1,0), (0,1), (-1,1), (-1,0), (0,-1), (1,-1)`; direction `i+3` is the
/// opposite of direction `i`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeCoord {
    pub q: i32,
    pub r: i32,
}

/// Shorthand constructor.
pub const fn node(q: i32, r: i32) -> NodeCoord {
    NodeCoord { q, r }
}

impl fmt::Debug for NodeCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.q, self.r)
    }
}

impl fmt::Display for NodeCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.q, self.r)
    }
}

impl Add for NodeCoord {
    type Output = NodeCoord;
    fn add(self, rhs: NodeCoord) -> NodeCoord {
        node(self.q + rhs.q, self.r + rhs.r)
    }
}

impl Sub for NodeCoord {
    type Output = NodeCoord;
    fn sub(self, rhs: NodeCoord) -> NodeCoord {
        node(self.q - rhs.q, self.r - rhs.r)
    }
}

impl Neg for NodeCoord {
    type Output = NodeCoord;
    fn neg(self) -> NodeCoord {
        node(-self.q, -self.r)
    }
}

/// The six unit direction vectors in index order.
pub const DIRS: [NodeCoord; 6] = [
    node(1, 0),
    node(0, 1),
    node(-1, 1),
    node(-1, 0),
    node(0, -1),
    node(1, -1),
];

/// A lattice direction, one of six, with arithmetic modulo six.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dir(u8);

impl Dir {
    pub const COUNT: usize = 6;

    pub fn from_index(i: i32) -> Dir {
        Dir(i.rem_euclid(6) as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = Dir> {
        (0..6).map(|i| Dir(i as u8))
    }

    pub fn opposite(self) -> Dir {
        self.rotate(3)
    }

    pub fn rotate(self, by: i32) -> Dir {
        Dir::from_index(self.0 as i32 + by)
    }

    /// The unit vector for this direction.
    pub fn delta(self) -> NodeCoord {
        DIRS[self.0 as usize]
    }

    /// Direction from `a` to an adjacent node `b`, if they are lattice-adjacent.
    pub fn between(a: NodeCoord, b: NodeCoord) -> Option<Dir> {
        let d = b - a;
        DIRS.iter().position(|&v| v == d).map(|i| Dir(i as u8))
    }

    /// Signed turn from direction `self` to `to`, as an index in `[0,6)`.
    /// 0 is straight ahead, 3 is a full reversal.
    pub fn turn_to(self, to: Dir) -> u8 {
        ((to.0 as i32 - self.0 as i32).rem_euclid(6)) as u8
    }
}

impl fmt::Debug for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}", self.0)
    }
}

impl NodeCoord {
    pub fn neighbor(self, d: Dir) -> NodeCoord {
        self + d.delta()
    }

    /// The six adjacent nodes in direction-index order.
    pub fn neighbors(self) -> [NodeCoord; 6] {
        [
            self + DIRS[0],
            self + DIRS[1],
            self + DIRS[2],
            self + DIRS[3],
            self + DIRS[4],
            self + DIRS[5],
        ]
    }

    /// Rotate this vector counter-clockwise by `by` sixths of a full turn.
    pub fn rotated(self, by: i32) -> NodeCoord {
        let mut v = self;
        for _ in 0..by.rem_euclid(6) {
            // one 60-degree step: (q, r) -> (-r, q + r)
            v = node(-v.r, v.q + v.r);
        }
        v
    }

    /// Reflect this vector so direction 0 is fixed and directions 1 and 5 swap.
    pub fn reflected(self) -> NodeCoord {
        node(self.q + self.r, -self.r)
    }
}

/// Hop distance between two nodes on the unobstructed grid.
pub fn dist(a: NodeCoord, b: NodeCoord) -> u32 {
    let dq = a.q - b.q;
    let dr = a.r - b.r;
    ((dq.abs() + dr.abs() + (dq + dr).abs()) / 2) as u32
}

/// Membership of a node in the factor-three coarse lattice.
#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord, Hash)]
pub enum CoarseClass {
    /// A node of the coarse sublattice itself.
    GridNode,
    /// A node lying on a segment between two adjacent coarse grid nodes.
    EdgeNode,
    /// Neither a grid node nor an edge node.
    Neither,
}

/// Classify `n` relative to the coarse lattice anchored at `anchor`.
///
/// With `o = n - anchor` reduced modulo 3 componentwise: `(0,0)` is a grid
/// node, the six residues `k * d mod 3` for unit directions `d` and
/// `k in {1,2}` are edge nodes, and `(1,1)`, `(2,2)` are neither.
pub fn coarse_class(n: NodeCoord, anchor: NodeCoord) -> CoarseClass {
    let o = n - anchor;
    let a = o.q.rem_euclid(3);
    let b = o.r.rem_euclid(3);
    match (a, b) {
        (0, 0) => CoarseClass::GridNode,
        (1, 1) | (2, 2) => CoarseClass::Neither,
        _ => CoarseClass::EdgeNode,
    }
}

/// Kind of bend formed by three consecutive path vertices, named by the
/// interior angle at the middle vertex.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BendKind {
    /// No direction change.
    Straight,
    /// 120-degree bend whose three vertices are all inner vertices of the core.
    Inner120,
    /// 120-degree bend with at least one non-inner vertex.
    Boundary120,
    /// 60-degree bend; on the fine grid never part of a feather path, on the
    /// coarse grid legal at indirect boundary junctions.
    Boundary60,
    /// Full reversal of direction.
    Reversal,
}

/// Error for bend classification of a non-path triple.
#[derive(Clone, Copy, PartialEq, Eq, Debug, thiserror::Error)]
#[error("bend vertices are not consecutive lattice neighbors")]
pub struct NotAdjacent;

/// True when `v` and all six of its neighbors belong to `core`.
pub fn is_inner_vertex(v: NodeCoord, core: &impl Fn(NodeCoord) -> bool) -> bool {
    core(v) && v.neighbors().iter().all(|&n| core(n))
}

/// Classify a bend from the turn amount and the inner-vertex bits of the
/// three vertices.
pub fn classify_turn(turn: u8, inner: [bool; 3]) -> BendKind {
    match turn {
        0 => BendKind::Straight,
        3 => BendKind::Reversal,
        1 | 5 => {
            if inner[0] && inner[1] && inner[2] {
                BendKind::Inner120
            } else {
                BendKind::Boundary120
            }
        }
        2 | 4 => BendKind::Boundary60,
        _ => unreachable!(),
    }
}

/// Classify the bend formed by the consecutive vertices `v0 - v1 - v2`.
pub fn classify_bend(
    v0: NodeCoord,
    v1: NodeCoord,
    v2: NodeCoord,
    core: &impl Fn(NodeCoord) -> bool,
) -> Result<BendKind, NotAdjacent> {
    let a = Dir::between(v0, v1).ok_or(NotAdjacent)?;
    let b = Dir::between(v1, v2).ok_or(NotAdjacent)?;
    let turn = a.turn_to(b);
    let inner = [
        is_inner_vertex(v0, core),
        is_inner_vertex(v1, core),
        is_inner_vertex(v2, core),
    ];
    Ok(classify_turn(turn, inner))
}

/// A set of directions, one bit per direction index.
#[derive(Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct DirSet(u8);

impl DirSet {
    pub const EMPTY: DirSet = DirSet(0);

    pub fn singleton(d: Dir) -> DirSet {
        DirSet(1 << d.index())
    }

    pub fn insert(&mut self, d: Dir) {
        self.0 |= 1 << d.index();
    }

    pub fn remove(&mut self, d: Dir) {
        self.0 &= !(1 << d.index());
    }

    pub fn contains(self, d: Dir) -> bool {
        self.0 & (1 << d.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Dir> {
        (0..6).filter_map(move |i| {
            if self.0 & (1 << i) != 0 {
                Some(Dir(i))
            } else {
                None
            }
        })
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn from_bits(bits: u8) -> DirSet {
        DirSet(bits & 0x3f)
    }

    /// Apply a direction-to-direction map to every member.
    pub fn map(self, f: impl Fn(Dir) -> Dir) -> DirSet {
        let mut out = DirSet::EMPTY;
        for d in self.iter() {
            out.insert(f(d));
        }
        out
    }
}

impl fmt::Debug for DirSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for d in self.iter() {
            write!(f, "{}", d.index())?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeSet, HashMap, VecDeque};

    #[test]
    fn direction_vectors_sum_to_zero() {
        let sum = DIRS.iter().fold(node(0, 0), |a, &d| a + d);
        assert_eq!(sum, node(0, 0));
    }

    #[test]
    fn opposite_directions() {
        for d in Dir::all() {
            assert_eq!(d.opposite().index(), (d.index() + 3) % 6);
            assert_eq!(d.delta() + d.opposite().delta(), node(0, 0));
        }
    }

    #[test]
    fn neighbors_of_origin() {
        assert_eq!(
            node(0, 0).neighbors().to_vec(),
            vec![
                node(1, 0),
                node(0, 1),
                node(-1, 1),
                node(-1, 0),
                node(0, -1),
                node(1, -1)
            ]
        );
    }

    #[test]
    fn neighbors_are_at_unit_distance() {
        for n in node(2, -1).neighbors() {
            assert_eq!(dist(node(2, -1), n), 1);
        }
    }

    #[test]
    fn neighborhood_is_symmetric() {
        // every node has exactly six nodes that list it as a neighbor
        for &n in &[node(0, 0), node(3, -2), node(-5, 1)] {
            let mut count = 0;
            for m in n.neighbors() {
                if m.neighbors().contains(&n) {
                    count += 1;
                }
            }
            assert_eq!(count, 6);
        }
    }

    /// Breadth-first hop count on the unobstructed lattice, the independent
    /// oracle for `dist`.
    fn bfs_dist(a: NodeCoord, b: NodeCoord) -> u32 {
        let mut seen: HashMap<NodeCoord, u32> = HashMap::new();
        let mut queue = VecDeque::new();
        seen.insert(a, 0);
        queue.push_back(a);
        while let Some(cur) = queue.pop_front() {
            let d = seen[&cur];
            if cur == b {
                return d;
            }
            for m in cur.neighbors() {
                if dist(a, m) <= 9 && !seen.contains_key(&m) {
                    seen.insert(m, d + 1);
                    queue.push_back(m);
                }
            }
        }
        unreachable!("bfs never reached target")
    }

    #[test]
    fn dist_basics() {
        assert_eq!(dist(node(3, -1), node(3, -1)), 0);
        assert_eq!(dist(node(0, 0), node(1, 0)), 1);
        assert_eq!(dist(node(0, 0), node(2, -1)), 2);
    }

    #[test]
    fn dist_matches_bfs_within_radius() {
        for q in -4..=4 {
            for r in -4..=4 {
                let b = node(q, r);
                if dist(node(0, 0), b) <= 8 {
                    assert_eq!(dist(node(0, 0), b), bfs_dist(node(0, 0), b), "at {b:?}");
                }
            }
        }
    }

    #[test]
    fn dist_triangle_inequality() {
        let pts = [node(0, 0), node(3, -2), node(-1, 4), node(2, 2), node(-3, 0)];
        for &a in &pts {
            for &b in &pts {
                assert_eq!(dist(a, b), dist(b, a));
                for &c in &pts {
                    assert!(dist(a, c) <= dist(a, b) + dist(b, c));
                }
            }
        }
    }

    #[test]
    fn coarse_class_anchor_is_grid_node() {
        assert_eq!(coarse_class(node(7, -2), node(7, -2)), CoarseClass::GridNode);
    }

    #[test]
    fn coarse_class_edge_and_neither_offsets() {
        // (1,2) == (1,-1) mod 3, one step along direction (1,-1) from a grid node
        assert_eq!(coarse_class(node(1, 2), node(0, 0)), CoarseClass::EdgeNode);
        assert_eq!(coarse_class(node(1, 1), node(0, 0)), CoarseClass::Neither);
        // exhaustive: the edge residues are exactly k*d mod 3 for k in {1,2}
        let mut edge_residues = BTreeSet::new();
        for d in Dir::all() {
            for k in 1..=2 {
                let v = node(d.delta().q * k, d.delta().r * k);
                edge_residues.insert((v.q.rem_euclid(3), v.r.rem_euclid(3)));
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                let got = coarse_class(node(a, b), node(0, 0));
                let expect = if (a, b) == (0, 0) {
                    CoarseClass::GridNode
                } else if edge_residues.contains(&(a, b)) {
                    CoarseClass::EdgeNode
                } else {
                    CoarseClass::Neither
                };
                assert_eq!(got, expect, "residue ({a},{b})");
            }
        }
    }

    #[test]
    fn coarse_cell_partition_counts() {
        let anchor = node(0, 0);
        let mut counts = HashMap::new();
        for a in 0..3 {
            for b in 0..3 {
                *counts.entry(coarse_class(node(a, b), anchor)).or_insert(0) += 1;
            }
        }
        assert_eq!(counts[&CoarseClass::GridNode], 1);
        assert_eq!(counts[&CoarseClass::EdgeNode], 6);
        assert_eq!(counts[&CoarseClass::Neither], 2);
    }

    #[test]
    fn every_neither_node_touches_an_edge_node() {
        let anchor = node(0, 0);
        for q in -6..=6 {
            for r in -6..=6 {
                let n = node(q, r);
                if coarse_class(n, anchor) == CoarseClass::Neither {
                    assert!(n
                        .neighbors()
                        .iter()
                        .any(|&m| coarse_class(m, anchor) == CoarseClass::EdgeNode));
                }
            }
        }
    }

    #[test]
    fn adjacent_grid_nodes_have_two_edge_nodes_between() {
        let anchor = node(1, -1);
        let g = node(1, -1);
        for d in Dir::all() {
            let far = node(g.q + 3 * d.delta().q, g.r + 3 * d.delta().r);
            assert_eq!(coarse_class(far, anchor), CoarseClass::GridNode);
            let e1 = g.neighbor(d);
            let e2 = e1.neighbor(d);
            assert_eq!(coarse_class(e1, anchor), CoarseClass::EdgeNode);
            assert_eq!(coarse_class(e2, anchor), CoarseClass::EdgeNode);
            assert_eq!(dist(e2, far), 1);
        }
    }

    fn patch_core() -> BTreeSet<NodeCoord> {
        // filled hexagon of radius 3 around origin
        let mut s = BTreeSet::new();
        for q in -4..=4 {
            for r in -4..=4 {
                if dist(node(0, 0), node(q, r)) <= 3 {
                    s.insert(node(q, r));
                }
            }
        }
        s
    }

    #[test]
    fn collinear_triple_is_straight() {
        let core = patch_core();
        let f = |n: NodeCoord| core.contains(&n);
        assert_eq!(
            classify_bend(node(-1, 0), node(0, 0), node(1, 0), &f).unwrap(),
            BendKind::Straight
        );
    }

    #[test]
    fn deep_bend_is_inner() {
        let core = patch_core();
        let f = |n: NodeCoord| core.contains(&n);
        // 120-degree bend entirely inside the filled patch
        assert_eq!(
            classify_bend(node(-1, 0), node(0, 0), node(0, 1), &f).unwrap(),
            BendKind::Inner120
        );
    }

    #[test]
    fn bend_near_boundary_is_boundary() {
        let core = patch_core();
        let f = |n: NodeCoord| core.contains(&n);
        // v1 at radius 3 has empty neighbors outside the patch
        assert_eq!(
            classify_bend(node(3, -1), node(3, 0), node(2, 1), &f).unwrap(),
            BendKind::Boundary120
        );
    }

    #[test]
    fn sixty_degree_and_reversal_kinds() {
        let core = patch_core();
        let f = |n: NodeCoord| core.contains(&n);
        assert_eq!(
            classify_bend(node(-1, 0), node(0, 0), node(-1, 1), &f).unwrap(),
            BendKind::Boundary60
        );
        assert_eq!(
            classify_bend(node(-1, 0), node(0, 0), node(-1, 0), &f).unwrap(),
            BendKind::Reversal
        );
    }

    #[test]
    fn classify_bend_rejects_non_adjacent() {
        let core = patch_core();
        let f = |n: NodeCoord| core.contains(&n);
        assert!(classify_bend(node(0, 0), node(2, 0), node(3, 0), &f).is_err());
    }

    #[test]
    fn classify_bend_rotation_and_reflection_invariant() {
        let core = patch_core();
        let f = |n: NodeCoord| core.contains(&n);
        let triples = [
            (node(-1, 0), node(0, 0), node(0, 1)),
            (node(-2, 0), node(-1, 0), node(0, 0)),
            (node(3, -1), node(3, 0), node(2, 1)),
            (node(-1, 0), node(0, 0), node(-1, 1)),
        ];
        for &(v0, v1, v2) in &triples {
            let base = classify_bend(v0, v1, v2, &f).unwrap();
            for by in 1..6 {
                // rotate the whole patch and triple together around origin
                let rot_core: BTreeSet<NodeCoord> = core.iter().map(|n| n.rotated(by)).collect();
                let g = |n: NodeCoord| rot_core.contains(&n);
                let got =
                    classify_bend(v0.rotated(by), v1.rotated(by), v2.rotated(by), &g).unwrap();
                assert_eq!(got, base, "rotation {by}");
            }
            // reflected triple over reflected core
            let ref_core: BTreeSet<NodeCoord> = core.iter().map(|n| n.reflected()).collect();
            let g = |n: NodeCoord| ref_core.contains(&n);
            let got = classify_bend(v0.reflected(), v1.reflected(), v2.reflected(), &g).unwrap();
            assert_eq!(got, base, "reflection");
            // reversal of the triple
            let got = classify_bend(v2, v1, v0, &f).unwrap();
            assert_eq!(got, base, "triple reversal");
        }
    }

    #[test]
    fn rotation_maps_direction_indices() {
        for d in Dir::all() {
            assert_eq!(d.delta().rotated(1), d.rotate(1).delta());
            assert_eq!(d.delta().reflected(), Dir::from_index(-(d.index() as i32)).delta());
        }
    }

    #[test]
    fn dirset_ops() {
        let mut s = DirSet::EMPTY;
        s.insert(Dir::from_index(0));
        s.insert(Dir::from_index(4));
        assert!(s.contains(Dir::from_index(4)));
        assert_eq!(s.len(), 2);
        let rotated = s.map(|d| d.rotate(1));
        assert!(rotated.contains(Dir::from_index(1)));
        assert!(rotated.contains(Dir::from_index(5)));
        s.remove(Dir::from_index(0));
        assert_eq!(s.len(), 1);
    }
}
