//! Shape utilities on node sets: connectivity, holes, breadth-first
//! distances, components. Centralized plumbing used by oracles, the
//! preprocessing step and the checker.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::grid::{dist, node, NodeCoord};

/// Breadth-first distances from `start` within `shape`.
pub fn bfs_distances(shape: &BTreeSet<NodeCoord>, start: NodeCoord) -> BTreeMap<NodeCoord, u32> {
    let mut out = BTreeMap::new();
    if !shape.contains(&start) {
        return out;
    }
    let mut queue = VecDeque::new();
    out.insert(start, 0);
    queue.push_back(start);
    while let Some(cur) = queue.pop_front() {
        let d = out[&cur];
        for m in cur.neighbors() {
            if shape.contains(&m) && !out.contains_key(&m) {
                out.insert(m, d + 1);
                queue.push_back(m);
            }
        }
    }
    out
}

pub fn is_connected(shape: &BTreeSet<NodeCoord>) -> bool {
    match shape.iter().next() {
        None => true,
        Some(&start) => bfs_distances(shape, start).len() == shape.len(),
    }
}

/// Connected components, each sorted, in order of their smallest node.
pub fn components(shape: &BTreeSet<NodeCoord>) -> Vec<BTreeSet<NodeCoord>> {
    let mut remaining = shape.clone();
    let mut out = Vec::new();
    while let Some(&start) = remaining.iter().next() {
        let comp: BTreeSet<NodeCoord> =
            bfs_distances(&remaining, start).keys().copied().collect();
        for n in &comp {
            remaining.remove(n);
        }
        out.push(comp);
    }
    out
}

/// True when the shape is connected and encloses no empty pocket.
pub fn is_simply_connected(shape: &BTreeSet<NodeCoord>) -> bool {
    if shape.is_empty() {
        return true;
    }
    if !is_connected(shape) {
        return false;
    }
    holes(shape).is_empty()
}

/// Empty nodes fully enclosed by the shape, grouped into pockets.
pub fn holes(shape: &BTreeSet<NodeCoord>) -> Vec<BTreeSet<NodeCoord>> {
    if shape.is_empty() {
        return Vec::new();
    }
    let min_q = shape.iter().map(|n| n.q).min().unwrap() - 1;
    let max_q = shape.iter().map(|n| n.q).max().unwrap() + 1;
    let min_r = shape.iter().map(|n| n.r).min().unwrap() - 1;
    let max_r = shape.iter().map(|n| n.r).max().unwrap() + 1;
    let inside_box = |n: NodeCoord| n.q >= min_q && n.q <= max_q && n.r >= min_r && n.r <= max_r;

    // flood the outside from a box corner
    let mut outside = BTreeSet::new();
    let start = node(min_q, min_r);
    let mut queue = VecDeque::new();
    outside.insert(start);
    queue.push_back(start);
    while let Some(cur) = queue.pop_front() {
        for m in cur.neighbors() {
            if inside_box(m) && !shape.contains(&m) && !outside.contains(&m) {
                outside.insert(m);
                queue.push_back(m);
            }
        }
    }

    // every empty in-box node not reached from outside belongs to a pocket
    let mut pocket_nodes = BTreeSet::new();
    for q in min_q..=max_q {
        for r in min_r..=max_r {
            let n = node(q, r);
            if !shape.contains(&n) && !outside.contains(&n) {
                pocket_nodes.insert(n);
            }
        }
    }
    components(&pocket_nodes)
}

/// Add enclosed pockets to the shape until it is simply connected.
pub fn fill_holes(shape: &mut BTreeSet<NodeCoord>) {
    loop {
        let hs = holes(shape);
        if hs.is_empty() {
            return;
        }
        for h in hs {
            shape.extend(h);
        }
    }
}

/// Graph diameter (longest shortest path) of a connected shape.
pub fn diameter(shape: &BTreeSet<NodeCoord>) -> u32 {
    let mut best = 0;
    // double sweep would do, but shapes here are small; scan all sources
    for &s in shape.iter() {
        let d = bfs_distances(shape, s);
        best = best.max(d.values().copied().max().unwrap_or(0));
    }
    best
}

/// A filled hexagon of the given radius.
pub fn hexagon(center: NodeCoord, radius: u32) -> BTreeSet<NodeCoord> {
    let mut s = BTreeSet::new();
    let r = radius as i32;
    for q in -r..=r {
        for rr in -r..=r {
            let n = node(center.q + q, center.r + rr);
            if dist(center, n) <= radius {
                s.insert(n);
            }
        }
    }
    s
}

/// Deterministic seeded random simply connected shape with roughly `target`
/// nodes (holes are filled, so the final count may be a little larger).
pub fn random_blob(seed: u64, target: usize) -> BTreeSet<NodeCoord> {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut shape = BTreeSet::new();
    shape.insert(node(0, 0));
    let mut frontier: Vec<NodeCoord> = node(0, 0).neighbors().to_vec();
    while shape.len() < target && !frontier.is_empty() {
        let i = rng.gen_range(0..frontier.len());
        let n = frontier.swap_remove(i);
        if shape.contains(&n) {
            continue;
        }
        shape.insert(n);
        for m in n.neighbors() {
            if !shape.contains(&m) {
                frontier.push(m);
            }
        }
    }
    fill_holes(&mut shape);
    shape
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hexagon_counts() {
        assert_eq!(hexagon(node(0, 0), 0).len(), 1);
        assert_eq!(hexagon(node(0, 0), 1).len(), 7);
        assert_eq!(hexagon(node(0, 0), 2).len(), 19);
    }

    #[test]
    fn ring_has_a_hole() {
        let mut ring = hexagon(node(0, 0), 2);
        ring.remove(&node(0, 0));
        assert!(is_connected(&ring));
        assert!(!is_simply_connected(&ring));
        let hs = holes(&ring);
        assert_eq!(hs.len(), 1);
        assert_eq!(hs[0].len(), 1);
        let mut filled = ring.clone();
        fill_holes(&mut filled);
        assert!(is_simply_connected(&filled));
    }

    #[test]
    fn random_blobs_are_simply_connected() {
        for seed in 0..20 {
            let b = random_blob(seed, 60);
            assert!(is_simply_connected(&b), "seed {seed}");
            assert!(b.len() >= 60);
        }
    }

    #[test]
    fn components_split() {
        let mut s = BTreeSet::new();
        s.insert(node(0, 0));
        s.insert(node(1, 0));
        s.insert(node(5, 5));
        let comps = components(&s);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].len(), 2);
    }
}
