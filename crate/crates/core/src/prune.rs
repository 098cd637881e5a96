//! Horton pruning: remove every leaf with its parental edge, then suppress
//! the vertices left with a single child.

use crate::tree::{Tree, TreeBuilder};

/// One pruning step. The empty tree maps to itself.
///
/// Series reduction happens in the same pass as leaf removal. The root is
/// never reduced.
pub fn prune(tree: &Tree) -> Tree {
    let Some(progenitor) = tree.progenitor() else {
        return Tree::empty();
    };
    // Surviving structure, rebuilt bottom-up in a scratch arena whose
    // children lists refer to scratch indices.
    let mut scratch: Vec<Vec<usize>> = Vec::new();
    let mut image: Vec<Option<usize>> = vec![None; tree.len()];
    for v in tree.postorder() {
        if v == tree.root() || tree.is_leaf(v) {
            continue;
        }
        let kept: Vec<usize> = tree.children(v).iter().filter_map(|c| image[c.index()]).collect();
        image[v.index()] = match kept.len() {
            0 => {
                scratch.push(Vec::new());
                Some(scratch.len() - 1)
            }
            1 => Some(kept[0]),
            _ => {
                scratch.push(kept);
                Some(scratch.len() - 1)
            }
        };
    }
    let Some(top) = image[progenitor.index()] else {
        return Tree::empty();
    };
    let mut b = TreeBuilder::with_capacity(scratch.len() + 1);
    let mut stack = vec![(top, b.root())];
    while let Some((s, parent)) = stack.pop() {
        let id = b.add_child(parent);
        for &c in &scratch[s] {
            stack.push((c, id));
        }
    }
    b.finish().expect("pruning preserves the tree invariants")
}

/// `tree, prune(tree), prune(prune(tree)), …` up to and including the
/// empty tree. Its length is the tree order plus one.
pub fn prune_trajectory(tree: &Tree) -> Vec<Tree> {
    let mut out = vec![tree.clone()];
    while !out.last().expect("non-empty").is_empty() {
        let next = prune(out.last().expect("non-empty"));
        out.push(next);
    }
    out
}

/// Order computed as the number of prunings that erase the tree.
pub fn order_by_pruning(tree: &Tree) -> u32 {
    (prune_trajectory(tree).len() - 1) as u32
}
