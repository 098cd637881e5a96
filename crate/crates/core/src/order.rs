//! Horton-Strahler orders, branch decomposition and side-branch counts.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::tree::{Tree, TreeError, VertexId};

/// A tree together with the Horton-Strahler order of every vertex.
///
/// The order of a vertex is the order of its descendant subtree, which is
/// also the order of its parental edge. The root carries the order of the
/// whole tree (the order of the stem), and 0 for the empty tree.
#[derive(Clone, Debug)]
pub struct OrderedTree<'t> {
    tree: &'t Tree,
    orders: Vec<u32>,
}

/// A maximal chain of same-order vertices, listed from the root side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Branch {
    pub order: u32,
    pub vertices: Vec<VertexId>,
    /// Orders of the side branches merging into this branch, root side
    /// first. Every entry is strictly below `order`.
    pub side_orders: Vec<u32>,
}

impl Branch {
    /// Number of edges in the branch (one parental edge per vertex).
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Branch counts `N_j` and side-branch counts `N_ij`, `i < j`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BranchStatistics {
    pub counts: BTreeMap<u32, u64>,
    pub side_counts: BTreeMap<(u32, u32), u64>,
}

impl BranchStatistics {
    pub fn n(&self, order: u32) -> u64 {
        self.counts.get(&order).copied().unwrap_or(0)
    }

    pub fn n_side(&self, side: u32, order: u32) -> u64 {
        self.side_counts.get(&(side, order)).copied().unwrap_or(0)
    }

    pub fn max_order(&self) -> u32 {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }
}

/// Annotates every vertex with its Horton-Strahler order.
///
/// Leaves get 1; an internal vertex gets the larger child order, plus one
/// when both children have the same order.
pub fn compute_orders(tree: &Tree) -> OrderedTree<'_> {
    let mut orders = vec![0u32; tree.len()];
    for v in tree.postorder() {
        let kids = tree.children(v);
        orders[v.index()] = match kids {
            [] if v == tree.root() => 0,
            [] => 1,
            [c] => orders[c.index()],
            [a, b] => {
                let (x, y) = (orders[a.index()], orders[b.index()]);
                if x == y {
                    x + 1
                } else {
                    x.max(y)
                }
            }
            _ => unreachable!("arity is bounded by the arena"),
        };
    }
    OrderedTree { tree, orders }
}

impl<'t> OrderedTree<'t> {
    pub fn tree(&self) -> &'t Tree {
        self.tree
    }

    /// Order of the tree: 0 for the empty tree.
    pub fn tree_order(&self) -> u32 {
        self.orders[self.tree.root().index()]
    }

    pub fn order_of(&self, v: VertexId) -> u32 {
        self.orders[v.index()]
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    /// True when `v` starts a branch: its parent is the root or has a
    /// different order.
    pub fn is_branch_top(&self, v: VertexId) -> bool {
        match self.tree.parent(v) {
            None => false,
            Some(p) => p == self.tree.root() || self.orders[p.index()] != self.orders[v.index()],
        }
    }

    /// True when `v` heads a side branch: its parent has a higher order and
    /// continues through `v`'s sibling.
    pub fn is_side_branch(&self, v: VertexId) -> bool {
        let (Some(p), Some(s)) = (self.tree.parent(v), self.tree.sibling(v)) else {
            return false;
        };
        let po = self.orders[p.index()];
        po > self.orders[v.index()] && self.orders[s.index()] == po
    }

    /// Branch decomposition, branches listed in preorder of their tops.
    pub fn branches(&self) -> Vec<Branch> {
        let t = self.tree;
        let mut out = Vec::new();
        for top in t.preorder() {
            if !self.is_branch_top(top) {
                continue;
            }
            let order = self.order_of(top);
            let mut vertices = vec![top];
            let mut side_orders = Vec::new();
            let mut cur = top;
            while let [a, b] = *t.children(cur) {
                let (oa, ob) = (self.order_of(a), self.order_of(b));
                let (next, side) = if oa == order {
                    (a, ob)
                } else if ob == order {
                    (b, oa)
                } else {
                    break;
                };
                side_orders.push(side);
                vertices.push(next);
                cur = next;
            }
            out.push(Branch {
                order,
                vertices,
                side_orders,
            });
        }
        out
    }
}

/// Counts branches per order and side branches per `(i, j)` pair.
///
/// Two branches of equal order merging into a higher-order branch are not
/// side branches.
pub fn branch_statistics(ot: &OrderedTree<'_>) -> BranchStatistics {
    let mut stats = BranchStatistics::default();
    for v in ot.tree().vertex_ids() {
        if ot.is_branch_top(v) {
            *stats.counts.entry(ot.order_of(v)).or_default() += 1;
        }
        if ot.is_side_branch(v) {
            let p = ot.tree().parent(v).expect("side branches have parents");
            *stats.side_counts.entry((ot.order_of(v), ot.order_of(p))).or_default() += 1;
        }
    }
    stats
}

/// Planted subtree whose progenitor is `v`.
pub fn descendant_subtree(ot: &OrderedTree<'_>, v: VertexId) -> Result<Tree, TreeError> {
    ot.tree().subtree(v)
}

/// The two subtrees below the internal vertex nearest the root, returned in
/// uniformly random order.
pub fn principal_subtrees<R: Rng + ?Sized>(tree: &Tree, rng: &mut R) -> Result<(Tree, Tree), TreeError> {
    let [a, b] = principal_children(tree)?;
    let (a, b) = if rng.random::<bool>() { (b, a) } else { (a, b) };
    Ok((tree.subtree(a)?, tree.subtree(b)?))
}

/// Children of the progenitor, in arena order.
pub(crate) fn principal_children(tree: &Tree) -> Result<[VertexId; 2], TreeError> {
    match tree.progenitor().map(|p| tree.children(p)) {
        Some(&[a, b]) => Ok([a, b]),
        Some(_) => Err(TreeError::NoPrincipalSplit(1)),
        None => Err(TreeError::NoPrincipalSplit(0)),
    }
}
