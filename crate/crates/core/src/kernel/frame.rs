//! Local frames: every particle has a private rotation offset and chirality,
//! so direction-valued state must be translated whenever it crosses an edge.

use crate::grid::{Dir, NodeCoord};
use rand::Rng;

/// A particle's private orientation: `global = rot + chir * local (mod 6)`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct LocalFrame {
    pub rot: u8,
    pub chir: i8,
}

impl LocalFrame {
    pub fn identity() -> LocalFrame {
        LocalFrame { rot: 0, chir: 1 }
    }

    pub fn random(rng: &mut impl Rng) -> LocalFrame {
        LocalFrame {
            rot: rng.gen_range(0..6u8),
            chir: if rng.gen::<bool>() { 1 } else { -1 },
        }
    }

    pub fn to_global(self, local: Dir) -> Dir {
        Dir::from_index(self.rot as i32 + self.chir as i32 * local.index() as i32)
    }

    pub fn to_local(self, global: Dir) -> Dir {
        Dir::from_index(self.chir as i32 * (global.index() as i32 - self.rot as i32))
    }
}

/// An affine direction map `d -> add + mul * d` with `mul` in `{+1, -1}`.
///
/// Used both for edge translations between two local frames and for the
/// compass a particle learns during the coarse-grid flood (its local frame
/// expressed in the leader's axes).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct DirXform {
    pub mul: i8,
    pub add: u8,
}

impl DirXform {
    pub fn identity() -> DirXform {
        DirXform { mul: 1, add: 0 }
    }

    pub fn apply(self, d: Dir) -> Dir {
        Dir::from_index(self.add as i32 + self.mul as i32 * d.index() as i32)
    }

    /// The linear map on lattice vectors consistent with `apply` on the unit
    /// directions.
    pub fn apply_vec(self, v: NodeCoord) -> NodeCoord {
        let w = if self.mul < 0 { v.reflected() } else { v };
        w.rotated(self.add as i32)
    }

    /// First `self`, then `then`.
    pub fn then(self, then: DirXform) -> DirXform {
        DirXform {
            mul: self.mul * then.mul,
            add: ((then.add as i32 + then.mul as i32 * self.add as i32).rem_euclid(6)) as u8,
        }
    }

    pub fn inverse(self) -> DirXform {
        DirXform {
            mul: self.mul,
            add: ((-(self.mul as i32) * self.add as i32).rem_euclid(6)) as u8,
        }
    }

    /// Map from the sender's local directions to the receiver's local
    /// directions for the same global direction.
    pub fn between(sender: LocalFrame, receiver: LocalFrame) -> DirXform {
        let mul = receiver.chir * sender.chir;
        let add = (receiver.chir as i32 * (sender.rot as i32 - receiver.rot as i32)).rem_euclid(6);
        DirXform { mul, add: add as u8 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames() -> Vec<LocalFrame> {
        let mut v = Vec::new();
        for rot in 0..6 {
            for &chir in &[1i8, -1] {
                v.push(LocalFrame { rot, chir });
            }
        }
        v
    }

    #[test]
    fn port_map_is_bijective() {
        for f in frames() {
            let mut seen = [false; 6];
            for d in Dir::all() {
                let g = f.to_global(d);
                assert_eq!(f.to_local(g), d);
                seen[g.index()] = true;
            }
            assert!(seen.iter().all(|&b| b));
        }
    }

    #[test]
    fn between_translates_global_meaning() {
        for s in frames() {
            for r in frames() {
                let x = DirXform::between(s, r);
                for d in Dir::all() {
                    // the same global direction expressed in both frames
                    assert_eq!(x.apply(d), r.to_local(s.to_global(d)));
                }
                // round trip through the inverse
                let xi = x.inverse();
                for d in Dir::all() {
                    assert_eq!(xi.apply(x.apply(d)), d);
                }
            }
        }
    }

    #[test]
    fn vec_map_matches_dir_map() {
        for s in frames() {
            for r in frames() {
                let x = DirXform::between(s, r);
                for d in Dir::all() {
                    assert_eq!(x.apply_vec(d.delta()), x.apply(d).delta());
                }
            }
        }
    }

    #[test]
    fn composition_associates_with_application() {
        let a = DirXform { mul: -1, add: 2 };
        let b = DirXform { mul: 1, add: 5 };
        for d in Dir::all() {
            assert_eq!(a.then(b).apply(d), b.apply(a.apply(d)));
        }
    }
}
