//! Planted, reduced, unlabeled binary trees stored in a vertex arena.
//!
//! A [`Tree`] always has a distinguished root. The root has either no
//! children (the empty tree) or exactly one child, the *progenitor*, joined
//! to it by the stem edge. Every other vertex is a leaf or has exactly two
//! children. Trees are immutable once built; annotations such as
//! Horton-Strahler orders live in separate records.

use std::fmt;

use arrayvec::ArrayVec;
use serde::Serialize;
use thiserror::Error;

/// Index of a vertex inside a [`Tree`] arena.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct VertexId(u32);

impl VertexId {
    pub(crate) fn new(index: usize) -> Self {
        VertexId(u32::try_from(index).expect("vertex arena exceeds u32 range"))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("vertex {0} referenced but not present in the arena")]
    DanglingVertex(usize),
    #[error("root vertex {0} has {1} children; a planted tree allows 0 or 1")]
    RootArity(usize, usize),
    #[error("vertex {0} has {1} children; non-root vertices need 0 or 2")]
    NonBinary(usize, usize),
    #[error("vertex {0} has more than one parent")]
    MultipleParents(usize),
    #[error("vertex {0} is not reachable from the root")]
    Disconnected(usize),
    #[error("the root appears as a child of vertex {0}")]
    RootHasParent(usize),
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("tree of order {0} has no internal vertex below the stem")]
    NoPrincipalSplit(u32),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Vertex {
    parent: Option<VertexId>,
    children: ArrayVec<VertexId, 2>,
}

/// A finite planted binary tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    vertices: Vec<Vertex>,
    root: VertexId,
}

impl Tree {
    /// The empty tree: a lone root with no edges.
    pub fn empty() -> Tree {
        Tree {
            vertices: vec![Vertex::default()],
            root: VertexId(0),
        }
    }

    /// Root plus one leaf.
    pub fn single_edge() -> Tree {
        let mut b = TreeBuilder::new();
        b.add_child(b.root());
        b.finish().expect("single edge is valid")
    }

    /// Stem vertex with two leaf children.
    pub fn cherry() -> Tree {
        Tree::skeleton(2)
    }

    /// Complete binary tree hanging from a stem, with every leaf at `depth`.
    /// `skeleton(0)` is the empty tree.
    pub fn skeleton(depth: u32) -> Tree {
        let mut b = TreeBuilder::new();
        if depth == 0 {
            return b.finish().expect("empty tree is valid");
        }
        let progenitor = b.add_child(b.root());
        let mut level = vec![progenitor];
        for _ in 1..depth {
            let mut next = Vec::with_capacity(level.len() * 2);
            for v in level {
                next.push(b.add_child(v));
                next.push(b.add_child(v));
            }
            level = next;
        }
        b.finish().expect("skeleton is valid")
    }

    /// Builds a tree from explicit child lists, checking every structural
    /// invariant (planted root, binary internal vertices, single parents,
    /// connectivity).
    pub fn from_children(children: &[Vec<usize>], root: usize) -> Result<Tree, TreeError> {
        let n = children.len();
        if root >= n {
            return Err(TreeError::DanglingVertex(root));
        }
        let mut vertices = vec![Vertex::default(); n];
        for (v, kids) in children.iter().enumerate() {
            if v == root {
                if kids.len() > 1 {
                    return Err(TreeError::RootArity(v, kids.len()));
                }
            } else if !kids.is_empty() && kids.len() != 2 {
                return Err(TreeError::NonBinary(v, kids.len()));
            }
            for &c in kids {
                if c >= n {
                    return Err(TreeError::DanglingVertex(c));
                }
                if c == root {
                    return Err(TreeError::RootHasParent(v));
                }
                if vertices[c].parent.is_some() {
                    return Err(TreeError::MultipleParents(c));
                }
                vertices[c].parent = Some(VertexId::new(v));
                vertices[v].children.push(VertexId::new(c));
            }
        }
        let tree = Tree {
            vertices,
            root: VertexId::new(root),
        };
        let mut seen = vec![false; n];
        for v in tree.preorder() {
            seen[v.index()] = true;
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(TreeError::Disconnected(v));
        }
        Ok(tree)
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    /// The child of the root, if the tree is not empty.
    pub fn progenitor(&self) -> Option<VertexId> {
        self.children(self.root).first().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.progenitor().is_none()
    }

    /// Number of vertices, root included.
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.index() < self.vertices.len()
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.vertices[v.index()].children
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.vertices[v.index()].parent
    }

    pub fn is_leaf(&self, v: VertexId) -> bool {
        v != self.root && self.vertices[v.index()].children.is_empty()
    }

    pub fn leaf_count(&self) -> usize {
        self.vertex_ids().filter(|&v| self.is_leaf(v)).count()
    }

    /// All vertex ids in arena order.
    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertices.len()).map(VertexId::new)
    }

    /// The other child of `v`'s parent, if any.
    pub fn sibling(&self, v: VertexId) -> Option<VertexId> {
        let p = self.parent(v)?;
        self.children(p).iter().copied().find(|&c| c != v)
    }

    /// Parents before children, starting at the root.
    pub fn preorder(&self) -> Vec<VertexId> {
        let mut out = Vec::with_capacity(self.vertices.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.children(v).iter().rev().copied());
        }
        out
    }

    /// Children before parents, ending at the root.
    pub fn postorder(&self) -> Vec<VertexId> {
        let mut out = self.preorder();
        out.reverse();
        out
    }

    /// Edge count from the root to every vertex, indexed by vertex.
    pub fn depths(&self) -> Vec<u32> {
        let mut depth = vec![0u32; self.vertices.len()];
        for v in self.preorder() {
            for &c in self.children(v) {
                depth[c.index()] = depth[v.index()] + 1;
            }
        }
        depth
    }

    /// Planted copy of the subtree hanging from `v`: `v`, its descendants,
    /// and `v`'s parental edge re-attached to a fresh root.
    pub fn subtree(&self, v: VertexId) -> Result<Tree, TreeError> {
        if !self.contains(v) {
            return Err(TreeError::UnknownVertex(v));
        }
        if v == self.root {
            return Ok(self.clone());
        }
        let mut b = TreeBuilder::new();
        let root = b.root();
        b.graft(root, self, v);
        Ok(b.finish().expect("subtree of a valid tree is valid"))
    }

    /// Copy of the tree with the two children of `v` listed in the opposite
    /// order. The shape is unchanged.
    pub fn with_children_swapped(&self, v: VertexId) -> Result<Tree, TreeError> {
        if !self.contains(v) {
            return Err(TreeError::UnknownVertex(v));
        }
        let mut out = self.clone();
        out.vertices[v.index()].children.reverse();
        Ok(out)
    }
}

/// Incremental construction of a [`Tree`]. Vertices are appended to the
/// arena; arity is checked by [`TreeBuilder::finish`].
#[derive(Debug)]
pub struct TreeBuilder {
    vertices: Vec<Vertex>,
}

impl Default for TreeBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl TreeBuilder {
    pub fn new() -> Self {
        TreeBuilder {
            vertices: vec![Vertex::default()],
        }
    }

    pub fn with_capacity(n: usize) -> Self {
        let mut vertices = Vec::with_capacity(n.max(1));
        vertices.push(Vertex::default());
        TreeBuilder { vertices }
    }

    pub fn root(&self) -> VertexId {
        VertexId(0)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Appends a new vertex below `parent`.
    ///
    /// Panics if `parent` already has two children.
    pub fn add_child(&mut self, parent: VertexId) -> VertexId {
        let id = VertexId::new(self.vertices.len());
        self.vertices.push(Vertex {
            parent: Some(parent),
            children: ArrayVec::new(),
        });
        self.vertices[parent.index()].children.push(id);
        id
    }

    /// Copies the subtree of `source` rooted at `top` below `parent`.
    /// Returns the id of the copy of `top`.
    pub fn graft(&mut self, parent: VertexId, source: &Tree, top: VertexId) -> VertexId {
        let new_top = self.add_child(parent);
        let mut stack = vec![(top, new_top)];
        while let Some((src, dst)) = stack.pop() {
            for &c in source.children(src) {
                let copy = self.add_child(dst);
                stack.push((c, copy));
            }
        }
        new_top
    }

    /// Grafts the whole planted tree `source` (its progenitor subtree) below
    /// `parent`. Returns `None` when `source` is empty.
    pub fn graft_planted(&mut self, parent: VertexId, source: &Tree) -> Option<VertexId> {
        source.progenitor().map(|p| self.graft(parent, source, p))
    }

    pub fn finish(self) -> Result<Tree, TreeError> {
        for (i, v) in self.vertices.iter().enumerate() {
            let k = v.children.len();
            if i == 0 {
                if k > 1 {
                    return Err(TreeError::RootArity(i, k));
                }
            } else if k == 1 {
                return Err(TreeError::NonBinary(i, k));
            }
        }
        Ok(Tree {
            vertices: self.vertices,
            root: VertexId(0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_tree_is_a_lone_root() {
        let t = Tree::empty();
        assert!(t.is_empty());
        assert_eq!(t.len(), 1);
        assert_eq!(t.leaf_count(), 0);
    }

    #[test]
    fn skeleton_has_two_vertices_per_leaf() {
        for depth in 1..7 {
            let t = Tree::skeleton(depth);
            let leaves = 1usize << (depth - 1);
            assert_eq!(t.leaf_count(), leaves);
            assert_eq!(t.len(), 2 * leaves);
            let depths = t.depths();
            for v in t.vertex_ids().filter(|&v| t.is_leaf(v)) {
                assert_eq!(depths[v.index()], depth);
            }
        }
    }

    #[test]
    fn from_children_rejects_malformed_arenas() {
        assert_eq!(
            Tree::from_children(&[vec![1, 2], vec![], vec![]], 0),
            Err(TreeError::RootArity(0, 2))
        );
        assert_eq!(
            Tree::from_children(&[vec![1], vec![2], vec![]], 0),
            Err(TreeError::NonBinary(1, 1))
        );
        assert_eq!(
            Tree::from_children(&[vec![1], vec![5, 2], vec![]], 0),
            Err(TreeError::DanglingVertex(5))
        );
        assert_eq!(
            Tree::from_children(&[vec![1], vec![2, 2], vec![]], 0),
            Err(TreeError::MultipleParents(2))
        );
        assert_eq!(
            Tree::from_children(&[vec![1], vec![], vec![3, 4], vec![], vec![]], 0),
            Err(TreeError::Disconnected(2))
        );
        assert_eq!(
            Tree::from_children(&[vec![1], vec![0, 2], vec![]], 0),
            Err(TreeError::RootHasParent(1))
        );
    }

    #[test]
    fn from_children_accepts_a_cherry() {
        let t = Tree::from_children(&[vec![1], vec![2, 3], vec![], vec![]], 0).unwrap();
        assert_eq!(t.leaf_count(), 2);
        assert_eq!(t.parent(VertexId::new(3)), Some(VertexId::new(1)));
        assert_eq!(t.sibling(VertexId::new(2)), Some(VertexId::new(3)));
    }

    #[test]
    fn builder_rejects_unary_vertices() {
        let mut b = TreeBuilder::new();
        let p = b.add_child(b.root());
        b.add_child(p);
        assert_eq!(b.finish(), Err(TreeError::NonBinary(1, 1)));
    }

    #[test]
    fn subtree_of_leaf_is_single_edge() {
        let t = Tree::skeleton(3);
        let leaf = t.vertex_ids().find(|&v| t.is_leaf(v)).unwrap();
        let s = t.subtree(leaf).unwrap();
        assert_eq!(s.len(), 2);
        assert!(t.subtree(VertexId::new(99)).is_err());
    }
}
