//! Centralized shortest-path-map oracle on the grid.
//!
//! The visibility region of a root is the set of nodes whose in-shape
//! distance from the root equals their unobstructed grid distance. Each
//! connected component of the remainder is reached through a window, a
//! maximal straight chain of visible nodes adjacent to the component; the
//! window node closest to the root becomes the root of the child region.
//! This is a verification oracle only; the distributed algorithms never
//! consult it.

use std::collections::BTreeSet;

use crate::grid::{dist, Dir, NodeCoord};
use crate::shape::{bfs_distances, components, is_simply_connected};

#[derive(Clone, Debug)]
pub struct SpmRegion {
    pub root: NodeCoord,
    /// Nodes visible from the root within the region's domain.
    pub members: BTreeSet<NodeCoord>,
    /// The window chain this region was entered through (empty for the top
    /// region), sorted along its line.
    pub window: Vec<NodeCoord>,
    /// Index of the parent region.
    pub parent: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct SpmDecomposition {
    pub regions: Vec<SpmRegion>,
}

impl SpmDecomposition {
    /// Roots of all regions except the top one: exactly the particles at
    /// which cone extensions fire during SP-tree growth.
    pub fn region_roots(&self) -> BTreeSet<NodeCoord> {
        self.regions.iter().skip(1).map(|r| r.root).collect()
    }

    /// Maximum nesting depth, with the top region at depth 0.
    pub fn depth(&self) -> usize {
        let mut best = 0;
        for (i, _) in self.regions.iter().enumerate() {
            let mut d = 0;
            let mut cur = i;
            while let Some(p) = self.regions[cur].parent {
                d += 1;
                cur = p;
            }
            best = best.max(d);
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SpmError {
    #[error("shape is not simply connected")]
    NotSimplyConnected,
    #[error("root is not part of the shape")]
    RootOutsideShape,
    #[error("window of a component is not a straight chain")]
    MalformedWindow,
}

/// Compute the shortest-path map of `shape` from `root`.
pub fn spm_oracle(
    root: NodeCoord,
    shape: &BTreeSet<NodeCoord>,
) -> Result<SpmDecomposition, SpmError> {
    if !shape.contains(&root) {
        return Err(SpmError::RootOutsideShape);
    }
    if !is_simply_connected(shape) {
        return Err(SpmError::NotSimplyConnected);
    }
    let mut regions = Vec::new();
    // work queue: (root, domain, window-that-entered, parent index)
    let mut work: Vec<(NodeCoord, BTreeSet<NodeCoord>, Vec<NodeCoord>, Option<usize>)> =
        vec![(root, shape.clone(), Vec::new(), None)];

    while let Some((r, domain, window, parent)) = work.pop() {
        let d_in = bfs_distances(&domain, r);
        let visible: BTreeSet<NodeCoord> = domain
            .iter()
            .copied()
            .filter(|&p| d_in.get(&p).copied() == Some(dist(r, p)))
            .collect();
        let idx = regions.len();
        regions.push(SpmRegion { root: r, members: visible.clone(), window, parent });

        let rest: BTreeSet<NodeCoord> =
            domain.iter().copied().filter(|p| !visible.contains(p)).collect();
        for comp in components(&rest) {
            let w = window_of(&visible, &comp)?;
            // closest window node to the current region root, in-domain
            let wr = w
                .iter()
                .copied()
                .min_by_key(|n| (d_in.get(n).copied().unwrap_or(u32::MAX), *n))
                .expect("window is nonempty");
            let mut sub: BTreeSet<NodeCoord> = comp.clone();
            sub.extend(w.iter().copied());
            work.push((wr, sub, w, Some(idx)));
        }
    }
    Ok(SpmDecomposition { regions })
}

/// The window of `comp`: visible nodes adjacent to the component, which must
/// form one straight contiguous chain.
fn window_of(
    visible: &BTreeSet<NodeCoord>,
    comp: &BTreeSet<NodeCoord>,
) -> Result<Vec<NodeCoord>, SpmError> {
    let adj: BTreeSet<NodeCoord> = visible
        .iter()
        .copied()
        .filter(|v| v.neighbors().iter().any(|n| comp.contains(n)))
        .collect();
    if adj.is_empty() {
        return Err(SpmError::MalformedWindow);
    }
    if adj.len() == 1 {
        return Ok(adj.into_iter().collect());
    }
    let mut nodes: Vec<NodeCoord> = adj.into_iter().collect();
    nodes.sort();
    let step = Dir::between(nodes[0], nodes[1]).ok_or(SpmError::MalformedWindow)?;
    for k in 1..nodes.len() {
        if nodes[k - 1].neighbor(step) != nodes[k] {
            return Err(SpmError::MalformedWindow);
        }
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::node;
    use crate::shape::{hexagon, random_blob};

    #[test]
    fn convex_blob_is_one_region() {
        let shape = hexagon(node(0, 0), 3);
        let spm = spm_oracle(node(3, 0), &shape).unwrap();
        assert_eq!(spm.regions.len(), 1);
        assert_eq!(spm.regions[0].members.len(), shape.len());
        assert!(spm.region_roots().is_empty());
    }

    /// An L of two bars joined at a corner.
    fn l_shape() -> BTreeSet<NodeCoord> {
        let mut s = BTreeSet::new();
        for q in 0..8 {
            for r in 0..3 {
                s.insert(node(q, r));
            }
        }
        for r in 3..8 {
            for q in 0..3 {
                s.insert(node(q, r));
            }
        }
        s
    }

    #[test]
    fn l_shape_two_regions_and_paths_pass_window_root() {
        let shape = l_shape();
        let root = node(7, 0);
        let spm = spm_oracle(root, &shape).unwrap();
        assert_eq!(spm.regions.len(), 2, "{:?}", spm.regions);
        let wr = spm.regions[1].root;
        // every shortest path to a node deep in the far arm passes the
        // window root: removing it must lengthen the distance
        let far = node(0, 7);
        let d_all = bfs_distances(&shape, root);
        let mut cut = shape.clone();
        cut.remove(&wr);
        let d_cut = bfs_distances(&cut, root);
        assert!(
            d_cut.get(&far).copied().unwrap_or(u32::MAX) > d_all[&far],
            "window root {wr:?} not on all shortest paths"
        );
    }

    fn bar(s: &mut BTreeSet<NodeCoord>, q0: i32, q1: i32, r0: i32, r1: i32) {
        for q in q0..q1 {
            for r in r0..r1 {
                s.insert(node(q, r));
            }
        }
    }

    /// A spiral corridor: visibility on the triangular grid is wide (60-degree
    /// monotone paths), so nesting beyond depth 1 needs geodesics that keep
    /// turning the same way.
    fn spiral() -> BTreeSet<NodeCoord> {
        let mut s = BTreeSet::new();
        bar(&mut s, 0, 12, 0, 2);
        bar(&mut s, 10, 12, 0, 10);
        bar(&mut s, 0, 12, 8, 10);
        bar(&mut s, 0, 2, 4, 10);
        bar(&mut s, 2, 8, 4, 6);
        s
    }

    #[test]
    fn spiral_recurses_to_depth_two_and_beyond() {
        let shape = spiral();
        let spm = spm_oracle(node(0, 0), &shape).unwrap();
        assert!(spm.regions.len() >= 3, "regions: {}", spm.regions.len());
        assert!(spm.depth() >= 2, "depth: {}", spm.depth());
    }

    #[test]
    fn oracle_rejects_holes() {
        let mut shape = hexagon(node(0, 0), 2);
        shape.remove(&node(0, 0));
        assert_eq!(spm_oracle(node(2, 0), &shape).unwrap_err(), SpmError::NotSimplyConnected);
    }

    #[test]
    fn members_cover_shape_and_windows_shared() {
        for seed in 0..15u64 {
            let shape = random_blob(seed, 70);
            let root = *shape.iter().next().unwrap();
            let spm = spm_oracle(root, &shape).unwrap();
            let mut covered = BTreeSet::new();
            for reg in &spm.regions {
                covered.extend(reg.members.iter().copied());
            }
            assert_eq!(covered, shape, "seed {seed}");
            // window nodes belong to both the parent and the child region
            for (i, reg) in spm.regions.iter().enumerate().skip(1) {
                if let Some(p) = reg.parent {
                    for w in &reg.window {
                        assert!(spm.regions[p].members.contains(w), "seed {seed} region {i}");
                        assert!(reg.members.contains(w), "seed {seed} region {i}");
                    }
                }
            }
        }
    }
}
