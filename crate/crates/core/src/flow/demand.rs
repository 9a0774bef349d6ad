//! Demand plans: the spanning tree of a demand component, stored at the
//! demand root and carved into per-node slices as construction proceeds.
//!
//! A slice lists the nodes of the not-yet-built subtree hanging below the
//! holder's node, as offsets relative to that node in the holder's local
//! frame. Splitting happens when the holder expands into a child: the child's
//! subtree moves to the child node's state, the rest stays behind.

use crate::grid::{node, Dir, NodeCoord};

const NO_PARENT: u16 = u16::MAX;

/// One unbuilt node of a demand component.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PlanEntry {
    /// Offset from the slice holder's node, in the holder's local frame.
    pub offset: NodeCoord,
    /// Index of the parent entry, or `u16::MAX` when the parent is the
    /// holder's own node.
    pub parent: u16,
}

#[derive(Clone, Default, Debug)]
pub struct PlanSlice {
    pub entries: Vec<PlanEntry>,
}

impl PlanSlice {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Build a slice from (offset, parent-offset) pairs where `None` parents
    /// attach to the holder node. Offsets are relative to the holder.
    pub fn from_tree(nodes: &[(NodeCoord, Option<NodeCoord>)]) -> PlanSlice {
        let index_of = |c: NodeCoord| {
            nodes
                .iter()
                .position(|&(o, _)| o == c)
                .map(|i| i as u16)
                .unwrap_or(NO_PARENT)
        };
        let entries = nodes
            .iter()
            .map(|&(offset, parent)| PlanEntry {
                offset,
                parent: parent.map(index_of).unwrap_or(NO_PARENT),
            })
            .collect();
        PlanSlice { entries }
    }

    /// The next direct child of the holder to build, as a local direction.
    /// Deterministic: the smallest direction index wins.
    pub fn next_child(&self) -> Option<Dir> {
        self.entries
            .iter()
            .filter(|e| e.parent == NO_PARENT)
            .filter_map(|e| Dir::between(node(0, 0), e.offset))
            .min_by_key(|d| d.index())
    }

    /// Remove the child across `d` and its whole subtree, returning the
    /// subtree as a new slice rebased onto the child node. The remainder
    /// keeps the other subtrees.
    pub fn split_child(&mut self, d: Dir) -> PlanSlice {
        let child_off = d.delta();
        let child_idx = self
            .entries
            .iter()
            .position(|e| e.parent == NO_PARENT && e.offset == child_off);
        let Some(child_idx) = child_idx else {
            return PlanSlice::default();
        };
        // mark the subtree below (and including) the child
        let n = self.entries.len();
        let mut in_subtree = vec![false; n];
        in_subtree[child_idx] = true;
        // entries are in no particular order; iterate to fixpoint
        let mut changed = true;
        while changed {
            changed = false;
            for i in 0..n {
                if !in_subtree[i] && self.entries[i].parent != NO_PARENT {
                    let p = self.entries[i].parent as usize;
                    if in_subtree[p] {
                        in_subtree[i] = true;
                        changed = true;
                    }
                }
            }
        }
        // extract: the child itself is consumed (it is being built now);
        // its children rebase to the child node
        let mut sub = PlanSlice::default();
        let mut sub_index = vec![NO_PARENT; n];
        for i in 0..n {
            if in_subtree[i] && i != child_idx {
                sub_index[i] = sub.entries.len() as u16;
                sub.entries.push(PlanEntry {
                    offset: self.entries[i].offset - child_off,
                    parent: NO_PARENT, // fixed up below
                });
            }
        }
        let mut k = 0;
        for i in 0..n {
            if in_subtree[i] && i != child_idx {
                let p = self.entries[i].parent as usize;
                sub.entries[k].parent =
                    if p == child_idx { NO_PARENT } else { sub_index[p] };
                k += 1;
            }
        }
        // drop the subtree from the remainder, remapping parent indices
        let mut keep_index = vec![NO_PARENT; n];
        let mut kept = Vec::new();
        for i in 0..n {
            if !in_subtree[i] {
                keep_index[i] = kept.len() as u16;
                kept.push(self.entries[i]);
            }
        }
        for e in kept.iter_mut() {
            if e.parent != NO_PARENT {
                e.parent = keep_index[e.parent as usize];
            }
        }
        self.entries = kept;
        sub
    }

    /// Append another slice rooted at the same holder (index-shifted).
    pub fn merge(&mut self, other: PlanSlice) {
        let base = self.entries.len() as u16;
        for e in other.entries {
            self.entries.push(PlanEntry {
                offset: e.offset,
                parent: if e.parent == NO_PARENT { NO_PARENT } else { e.parent + base },
            });
        }
    }

    /// Re-express all offsets through a frame map.
    pub fn translate(&self, f: impl Fn(NodeCoord) -> NodeCoord) -> PlanSlice {
        PlanSlice {
            entries: self
                .entries
                .iter()
                .map(|e| PlanEntry { offset: f(e.offset), parent: e.parent })
                .collect(),
        }
    }
}
