//! Index arithmetic for the complete binary tree the surrogate lives on.
//!
//! Nodes use breadth-first ids: branches are `0..2^D-1`, leaves are
//! `2^D-1..2^(D+1)-1`, and the children of branch `t` are `2t+1` and
//! `2t+2`. Leaf classes alternate by id parity — odd ids vote -1, even
//! ids vote +1 — which pins down the class layout without any extra
//! decision variables.

use std::ops::Range;

/// The complete binary tree of a given depth, as index sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeTopology {
    pub depth: usize,
}

impl TreeTopology {
    /// Panics if `depth` is zero: a tree with no branch cannot split.
    pub fn new(depth: usize) -> Self {
        assert!(depth >= 1, "depth must be at least 1");
        Self { depth }
    }

    /// All branch (internal) node ids.
    pub fn branches(&self) -> Range<usize> {
        0..self.n_branches()
    }

    pub fn n_branches(&self) -> usize {
        (1 << self.depth) - 1
    }

    /// All leaf ids, continuing the breadth-first numbering.
    pub fn leaves(&self) -> Range<usize> {
        self.n_branches()..self.n_branches() + self.n_leaves()
    }

    pub fn n_leaves(&self) -> usize {
        1 << self.depth
    }

    /// Level (root = 0) of any node id.
    pub fn level_of(&self, id: usize) -> usize {
        (usize::BITS - 1 - (id + 1).leading_zeros()) as usize
    }

    /// Branch ids at one level.
    pub fn branches_at(&self, level: usize) -> Range<usize> {
        assert!(level < self.depth, "level {level} has no branches");
        ((1 << level) - 1)..((1 << (level + 1)) - 1)
    }

    /// Branches strictly above the deepest branch level (levels
    /// `0..depth-1`); empty when the tree is a stump.
    pub fn upper_branches(&self) -> Range<usize> {
        0..(1usize << (self.depth - 1)) - 1
    }

    /// Branches on the deepest branch level, whose children are leaves.
    pub fn deepest_branches(&self) -> Range<usize> {
        ((1 << (self.depth - 1)) - 1)..self.n_branches()
    }

    pub fn left_child(&self, t: usize) -> usize {
        2 * t + 1
    }

    pub fn right_child(&self, t: usize) -> usize {
        2 * t + 2
    }

    /// Leaves of the subtree rooted at `node` (which may itself be a
    /// leaf). Contiguous because leaves are numbered left to right.
    fn subtree_leaves(&self, node: usize) -> Range<usize> {
        let mut first = node;
        while first < self.n_branches() {
            first = self.left_child(first);
        }
        let span = 1 << (self.depth - self.level_of(node));
        first..first + span
    }

    /// Leaves reachable through the left child of branch `t`.
    pub fn left_leaves(&self, t: usize) -> Range<usize> {
        debug_assert!(t < self.n_branches());
        self.subtree_leaves(self.left_child(t))
    }

    /// Leaves reachable through the right child of branch `t`.
    pub fn right_leaves(&self, t: usize) -> Range<usize> {
        debug_assert!(t < self.n_branches());
        self.subtree_leaves(self.right_child(t))
    }

    /// Fixed class of a leaf: -1 for odd ids, +1 for even ids.
    pub fn leaf_class(&self, leaf: usize) -> i8 {
        debug_assert!(self.leaves().contains(&leaf));
        if leaf % 2 == 1 {
            -1
        } else {
            1
        }
    }
}
