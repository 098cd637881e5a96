use std::collections::BTreeMap;

use serde::Serialize;

use crate::canonical::{bounded_code, ShapeCode};
use crate::tree::Tree;

/// Trees with more leaves than this are counted as unresolved rather than
/// encoded; they are far outside any top-k shape list.
pub const DEFAULT_MAX_SHAPE_LEAVES: usize = 64;

/// Mass per canonical shape code, plus mass that was not resolved into a
/// shape (large trees, aborted draws, truncated enumerations).
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ShapeDistribution {
    pub mass: BTreeMap<ShapeCode, f64>,
    pub unresolved: f64,
}

impl ShapeDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, code: ShapeCode, weight: f64) {
        *self.mass.entry(code).or_default() += weight;
    }

    pub fn add_unresolved(&mut self, weight: f64) {
        self.unresolved += weight;
    }

    /// Adds one tree with unit weight.
    pub fn add_tree(&mut self, tree: &Tree, max_leaves: usize) {
        match bounded_code(tree, tree.root(), max_leaves) {
            Some(code) => self.add(code, 1.0),
            None => self.add_unresolved(1.0),
        }
    }

    pub fn from_trees<'a>(trees: impl IntoIterator<Item = &'a Tree>) -> Self {
        let mut d = Self::new();
        for t in trees {
            d.add_tree(t, DEFAULT_MAX_SHAPE_LEAVES);
        }
        d
    }

    pub fn merge(&mut self, other: ShapeDistribution) {
        for (code, w) in other.mass {
            self.add(code, w);
        }
        self.unresolved += other.unresolved;
    }

    pub fn mass_of(&self, code: &ShapeCode) -> f64 {
        self.mass.get(code).copied().unwrap_or(0.0)
    }

    /// Resolved plus unresolved mass.
    pub fn total(&self) -> f64 {
        self.mass.values().sum::<f64>() + self.unresolved
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0.0
    }

    /// The `k` heaviest shapes, heaviest first; ties broken by code.
    pub fn top_k(&self, k: usize) -> Vec<(&ShapeCode, f64)> {
        let mut v: Vec<_> = self.mass.iter().map(|(c, &w)| (c, w)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v.truncate(k);
        v
    }
}

/// Total-variation distance between the normalized distributions,
/// restricted to the union of both top-`top_k` lists. All remaining mass,
/// unresolved mass included, forms a single "other" cell.
pub fn shape_tv_distance(p1: &ShapeDistribution, p2: &ShapeDistribution, top_k: usize) -> f64 {
    let (t1, t2) = (p1.total(), p2.total());
    if t1 <= 0.0 || t2 <= 0.0 {
        return if t1 == t2 { 0.0 } else { 1.0 };
    }
    let mut cells: Vec<&ShapeCode> = p1
        .top_k(top_k)
        .into_iter()
        .chain(p2.top_k(top_k))
        .map(|(c, _)| c)
        .collect();
    cells.sort();
    cells.dedup();
    let (mut in1, mut in2, mut diff) = (0.0, 0.0, 0.0);
    for c in cells {
        let (a, b) = (p1.mass_of(c) / t1, p2.mass_of(c) / t2);
        in1 += a;
        in2 += b;
        diff += (a - b).abs();
    }
    let other = ((1.0 - in1) - (1.0 - in2)).abs();
    0.5 * (diff + other)
}
