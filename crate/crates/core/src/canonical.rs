//! Isomorphism-invariant string codes for unlabeled, non-plane trees.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::tree::{Tree, VertexId};

/// Canonical code of a tree shape: `"L"` for a leaf, `"(a,b)"` for an
/// internal vertex with child codes `a <= b`, and `""` for the empty tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct ShapeCode(String);

impl ShapeCode {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }

    pub fn empty() -> ShapeCode {
        ShapeCode(String::new())
    }

    pub(crate) fn from_string(s: String) -> ShapeCode {
        ShapeCode(s)
    }

    /// Number of leaves encoded.
    pub fn leaves(&self) -> usize {
        self.0.bytes().filter(|&b| b == b'L').count()
    }

    /// A tree with this shape.
    pub fn to_tree(&self) -> Tree {
        if self.0.is_empty() {
            return Tree::empty();
        }
        let text = format!("{};", self.0.replace('L', "x"));
        crate::newick::parse_newick(&text).expect("shape codes are valid Newick")
    }

    /// Code of a vertex whose children have codes `a` and `b`.
    pub(crate) fn join(a: &str, b: &str) -> String {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        format!("({lo},{hi})")
    }
}

impl fmt::Display for ShapeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Code of the whole tree (the progenitor's subtree).
pub fn canonical_code(tree: &Tree) -> ShapeCode {
    match tree.progenitor() {
        None => ShapeCode::empty(),
        Some(p) => {
            let ids = ShapeIds::new(tree);
            let mut s = String::with_capacity(tree.len() * 2);
            ids.write(tree, p, "L", &mut s);
            ShapeCode(s)
        }
    }
}

/// Shape identifiers of every descendant subtree: two vertices share an id
/// exactly when their subtrees are isomorphic. Ids compare in the order of
/// the corresponding codes without building the code strings, which would
/// take memory proportional to size times height.
#[derive(Clone, Debug)]
pub(crate) struct ShapeIds {
    ids: Vec<u32>,
    /// Children of each shape, lower code first; `None` for the leaf.
    shapes: Vec<Option<(u32, u32)>>,
}

const LEAF: u32 = 0;
const NO_SHAPE: u32 = u32::MAX;

impl ShapeIds {
    pub(crate) fn new(tree: &Tree) -> Self {
        let mut out = ShapeIds {
            ids: vec![NO_SHAPE; tree.len()],
            shapes: vec![None],
        };
        let mut known: HashMap<(u32, u32), u32> = HashMap::new();
        for v in tree.postorder() {
            out.ids[v.index()] = match *tree.children(v) {
                [] if v == tree.root() => NO_SHAPE,
                [] => LEAF,
                [c] => out.ids[c.index()],
                [a, b] => {
                    let (x, y) = (out.ids[a.index()], out.ids[b.index()]);
                    let key = if out.cmp(x, y) == Ordering::Greater {
                        (y, x)
                    } else {
                        (x, y)
                    };
                    let next = out.shapes.len() as u32;
                    let id = *known.entry(key).or_insert(next);
                    if id == next {
                        out.shapes.push(Some(key));
                    }
                    id
                }
                _ => unreachable!(),
            };
        }
        out
    }

    /// Shape of the subtree of `v`; the root shares the progenitor's.
    pub(crate) fn of(&self, v: VertexId) -> u32 {
        self.ids[v.index()]
    }

    /// Order of the codes of two shapes. `"L"` sorts after every `"(..."`,
    /// and codes are prefix-free, so `(a,b)` compares as the pair `(a, b)`.
    pub(crate) fn cmp(&self, a: u32, b: u32) -> Ordering {
        let mut pending = vec![(a, b)];
        while let Some((x, y)) = pending.pop() {
            if x == y {
                continue;
            }
            match (self.shapes[x as usize], self.shapes[y as usize]) {
                (None, _) => return Ordering::Greater,
                (_, None) => return Ordering::Less,
                (Some((xl, xh)), Some((yl, yh))) => {
                    pending.push((xh, yh));
                    pending.push((xl, yl));
                }
            }
        }
        Ordering::Equal
    }

    /// Children of `v` with the lower code first.
    pub(crate) fn ordered(&self, a: VertexId, b: VertexId) -> (VertexId, VertexId) {
        if self.cmp(self.of(a), self.of(b)) == Ordering::Greater {
            (b, a)
        } else {
            (a, b)
        }
    }

    /// Appends the code of the subtree of `top`, spelling leaves as `leaf`.
    pub(crate) fn write(&self, tree: &Tree, top: VertexId, leaf: &str, out: &mut String) {
        enum Tok {
            Open(VertexId),
            Text(&'static str),
        }
        let mut stack = vec![Tok::Open(top)];
        while let Some(tok) = stack.pop() {
            match tok {
                Tok::Text(s) => out.push_str(s),
                Tok::Open(v) => match *tree.children(v) {
                    [] => out.push_str(leaf),
                    [a, b] => {
                        let (lo, hi) = self.ordered(a, b);
                        out.push('(');
                        stack.push(Tok::Text(")"));
                        stack.push(Tok::Open(hi));
                        stack.push(Tok::Text(","));
                        stack.push(Tok::Open(lo));
                    }
                    _ => unreachable!("non-root vertices are leaves or binary"),
                },
            }
        }
    }
}

/// Code of the descendant subtree of `top`, or `None` when that subtree
/// has more than `max_leaves` leaves. Cost is linear in the number of
/// vertices visited before giving up, plus the size of the code.
pub fn bounded_code(tree: &Tree, top: VertexId, max_leaves: usize) -> Option<ShapeCode> {
    if top == tree.root() {
        return match tree.progenitor() {
            None => Some(ShapeCode::empty()),
            Some(p) => bounded_code(tree, p, max_leaves),
        };
    }
    let mut order = Vec::new();
    let mut stack = vec![top];
    let mut leaves = 0;
    while let Some(v) = stack.pop() {
        order.push(v);
        let kids = tree.children(v);
        if kids.is_empty() {
            leaves += 1;
            if leaves > max_leaves {
                return None;
            }
        }
        stack.extend_from_slice(kids);
    }
    let mut codes: HashMap<VertexId, String> = HashMap::with_capacity(order.len());
    for &v in order.iter().rev() {
        let code = match *tree.children(v) {
            [] => "L".to_owned(),
            [a, b] => {
                let x = codes.remove(&a).expect("children precede parents");
                let y = codes.remove(&b).expect("children precede parents");
                let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
                format!("({lo},{hi})")
            }
            _ => unreachable!(),
        };
        codes.insert(v, code);
    }
    codes.remove(&top).map(ShapeCode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::TreeBuilder;

    #[test]
    fn codes_of_small_trees() {
        assert_eq!(canonical_code(&Tree::empty()).as_str(), "");
        assert_eq!(canonical_code(&Tree::single_edge()).as_str(), "L");
        assert_eq!(canonical_code(&Tree::cherry()).as_str(), "(L,L)");
    }

    #[test]
    fn mirror_images_share_a_code() {
        let build = |leaf_first: bool| {
            let mut b = TreeBuilder::new();
            let p = b.add_child(b.root());
            if leaf_first {
                b.add_child(p);
            }
            let c = b.add_child(p);
            if !leaf_first {
                b.add_child(p);
            }
            b.add_child(c);
            b.add_child(c);
            b.finish().unwrap()
        };
        let (x, y) = (build(true), build(false));
        assert_eq!(canonical_code(&x), canonical_code(&y));
        assert_eq!(canonical_code(&x).as_str(), "((L,L),L)");
        assert_eq!(canonical_code(&x).leaves(), 3);
    }

    /// Codes built directly from strings, for comparison.
    fn string_code(tree: &Tree, v: VertexId) -> String {
        match *tree.children(v) {
            [] => "L".to_owned(),
            [c] => string_code(tree, c),
            [a, b] => {
                let (x, y) = (string_code(tree, a), string_code(tree, b));
                let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
                format!("({lo},{hi})")
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn shape_ids_order_like_codes() {
        use rand::SeedableRng;
        let params = crate::params::CriticalTokunaga::new(3.0).unwrap().params();
        let limits = crate::sampler::GenerationLimits::with_max_vertices(5_000);
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 300 {
            let Ok(t) = crate::sampler::generate_recursive(&params, &limits, &mut r) else {
                continue;
            };
            if t.progenitor().is_some() {
                assert_eq!(canonical_code(&t).as_str(), string_code(&t, t.root()));
                checked += 1;
            }
        }
    }

    #[test]
    fn deep_trees_have_compact_ids() {
        let n = 100_000;
        let text = format!("{}x{};", "(".repeat(n), ",x)".repeat(n));
        let t = crate::newick::parse_newick(&text).unwrap();
        let ids = ShapeIds::new(&t);
        assert_eq!(ids.shapes.len(), 100_001);
        assert_eq!(canonical_code(&t).leaves(), 100_001);
    }

    #[test]
    fn bounded_codes_agree_with_full_codes() {
        let t = Tree::skeleton(4);
        assert_eq!(bounded_code(&t, t.root(), 8), Some(canonical_code(&t)));
        assert_eq!(bounded_code(&t, t.root(), 7), None);
        let v = t.children(t.progenitor().unwrap())[0];
        assert_eq!(bounded_code(&t, v, 4).unwrap(), canonical_code(&Tree::skeleton(3)));
        assert_eq!(
            bounded_code(&Tree::empty(), VertexId::new(0), 1),
            Some(ShapeCode::empty())
        );
    }
}
