//! Growth cones: contiguous intervals of directions that bound where a tree
//! member may adopt children.

use crate::grid::{Dir, DirSet};

/// A contiguous interval of directions, stored as `[lo, lo+len)` modulo six.
///
/// The root of a tree carries the full 6-cone; children receive narrower
/// cones. Plain growth produces sizes 2 and 3, the reflex extension widens a
/// 2-cone to a 180-degree 4-cone, and feather trees use 1- and 3-cones.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Cone {
    lo: Dir,
    len: u8,
}

impl Cone {
    pub fn full() -> Cone {
        Cone { lo: Dir::from_index(0), len: 6 }
    }

    pub fn new(lo: Dir, len: u8) -> Cone {
        assert!((1..=6).contains(&len), "cone length out of range");
        Cone { lo, len }
    }

    /// The interval `[center-1, center+1]`.
    pub fn three(center: Dir) -> Cone {
        Cone { lo: center.rotate(-1), len: 3 }
    }

    /// The single direction `[d]`.
    pub fn one(d: Dir) -> Cone {
        Cone { lo: d, len: 1 }
    }

    pub fn len(self) -> u8 {
        self.len
    }

    pub fn lo(self) -> Dir {
        self.lo
    }

    pub fn hi(self) -> Dir {
        self.lo.rotate(self.len as i32 - 1)
    }

    pub fn contains(self, d: Dir) -> bool {
        self.lo.turn_to(d) < self.len
    }

    pub fn dirs(self) -> impl Iterator<Item = Dir> {
        let lo = self.lo;
        (0..self.len as i32).map(move |k| lo.rotate(k))
    }

    pub fn as_dirset(self) -> DirSet {
        let mut s = DirSet::EMPTY;
        for d in self.dirs() {
            s.insert(d);
        }
        s
    }

    /// Intersect with the 120-degree cone `[i-1, i+1]` around `i`.
    ///
    /// Returns `None` when the intersection is empty (cannot happen for
    /// `i` inside `self`, which adoption guarantees).
    pub fn intersect_around(self, i: Dir) -> Option<Cone> {
        let window = Cone::three(i);
        // both are contiguous intervals of length <= 6; intersect as sets and
        // re-pack (the result of intersecting two arcs that overlap in one run
        // is again an arc)
        let set: Vec<Dir> = window.dirs().filter(|&d| self.contains(d)).collect();
        if set.is_empty() {
            return None;
        }
        // find the arc start: the member whose predecessor is not a member
        let in_set = |d: Dir| set.contains(&d);
        let lo = set
            .iter()
            .copied()
            .find(|&d| !in_set(d.rotate(-1)))
            .unwrap_or(set[0]);
        Some(Cone { lo, len: set.len() as u8 })
    }

    /// Re-express the cone through a direction map (frame translation).
    pub fn map(self, f: impl Fn(Dir) -> Dir) -> Cone {
        // the map is either a rotation or a rotation+reflection; a reflection
        // reverses the interval so the new low end is the image of the old
        // high end
        let a = f(self.lo);
        let b = f(self.hi());
        if self.len == 6 {
            return Cone::full();
        }
        // rotation preserves orientation: f(lo)+len-1 == f(hi)
        if a.rotate(self.len as i32 - 1) == b {
            Cone { lo: a, len: self.len }
        } else {
            Cone { lo: b, len: self.len }
        }
    }
}

/// Role of a feather-tree member.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FeatherRole {
    Root,
    /// Member with a 3-cone; inner bends happen here.
    Shaft,
    /// Member with a 1-cone; extends straight, spawns shafts at reflex corners.
    Branch,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn dirs_of(c: Cone) -> BTreeSet<usize> {
        c.dirs().map(|d| d.index()).collect()
    }

    #[test]
    fn full_cone_intersects_to_three() {
        for i in Dir::all() {
            let c = Cone::full().intersect_around(i).unwrap();
            assert_eq!(c.len(), 3);
            assert!(c.contains(i.rotate(-1)) && c.contains(i) && c.contains(i.rotate(1)));
        }
    }

    #[test]
    fn three_cone_straight_child_keeps_three() {
        for i in Dir::all() {
            let c = Cone::three(i).intersect_around(i).unwrap();
            assert_eq!(dirs_of(c), dirs_of(Cone::three(i)));
        }
    }

    #[test]
    fn intersection_table_matches_set_intersection() {
        // exhaustive over all (cone, port) pairs for every cone length and
        // position, checked against direct set intersection
        for lo in Dir::all() {
            for len in 1..=6u8 {
                let cone = Cone::new(lo, len);
                for i in cone.dirs() {
                    let got = cone.intersect_around(i).unwrap();
                    let expect: BTreeSet<usize> = Cone::three(i)
                        .dirs()
                        .filter(|&d| cone.contains(d))
                        .map(|d| d.index())
                        .collect();
                    assert_eq!(dirs_of(got), expect, "cone {cone:?} port {i:?}");
                }
            }
        }
    }

    #[test]
    fn diagonal_child_of_three_cone_gets_two() {
        let j = Dir::from_index(2);
        let cone = Cone::three(j);
        let c = cone.intersect_around(j.rotate(1)).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.contains(j) && c.contains(j.rotate(1)));
    }

    #[test]
    fn map_under_reflection_keeps_membership() {
        let cone = Cone::new(Dir::from_index(4), 3);
        // reflection: d -> -d
        let f = |d: Dir| Dir::from_index(-(d.index() as i32));
        let mapped = cone.map(f);
        let expect: BTreeSet<usize> = cone.dirs().map(|d| f(d).index()).collect();
        assert_eq!(dirs_of(mapped), expect);
    }
}
