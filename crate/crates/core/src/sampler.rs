//! Random geometric trees, built either branch by branch or by running
//! the discrete-time branching process, plus a critical binary
//! Galton-Watson reference sampler.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;
use thiserror::Error;

use crate::params::{ParamError, TokunagaParams};
use crate::tree::{Tree, TreeBuilder, VertexId};

/// Default cap on the number of arena vertices in one generated tree.
pub const DEFAULT_MAX_VERTICES: usize = 10_000_000;

/// Resource limits for a single generated tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GenerationLimits {
    pub max_vertices: usize,
    /// Trees whose sampled order exceeds this are rejected before any
    /// vertex is built.
    pub max_order: Option<u32>,
}

impl Default for GenerationLimits {
    fn default() -> Self {
        GenerationLimits {
            max_vertices: DEFAULT_MAX_VERTICES,
            max_order: None,
        }
    }
}

impl GenerationLimits {
    pub fn with_max_vertices(max_vertices: usize) -> Self {
        GenerationLimits {
            max_vertices,
            ..Self::default()
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerationError {
    /// The vertex budget ran out. `order` is the sampled tree order and
    /// `top_split` the orders of the two subtrees below the progenitor, as
    /// drawn by the generator before it gave up.
    #[error("generation aborted: order-{order} tree exceeded {limit} vertices")]
    BudgetExceeded {
        order: u32,
        top_split: Option<(u32, u32)>,
        limit: usize,
    },
    #[error("sampled order {order} exceeds the cap {cap}")]
    OrderCapExceeded { order: u32, cap: u32 },
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// `Geom(r)` with support `0, 1, 2, …`: `P(X = k) = r (1 - r)^k`.
pub fn geom_sample<R: Rng + ?Sized>(r: f64, rng: &mut R) -> Result<u64, ParamError> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(ParamError::Geometric(r));
    }
    Ok(geometric(r, rng))
}

/// Inverse transform `floor(ln u / ln(1 - r))` with `u` in `(0, 1]`.
fn geometric<R: Rng + ?Sized>(r: f64, rng: &mut R) -> u64 {
    if r >= 1.0 {
        return 0;
    }
    let u = 1.0 - rng.random::<f64>();
    // `as` saturates, which only matters for astronomically small r.
    (u.ln() / (-r).ln_1p()).floor() as u64
}

/// Draws a side-branch order for an order-`order` branch.
fn side_order<R: Rng + ?Sized>(params: &TokunagaParams, order: u32, rng: &mut R) -> u32 {
    let cdf = params.side_cdf(order);
    let u = rng.random::<f64>();
    // First index whose cumulative probability exceeds u; zero-mass
    // orders have flat steps and are never selected.
    cdf.partition_point(|&c| c <= u) as u32 + 1
}

/// `1 + Geom(p)`, checked against the parameter tables and the cap.
pub fn sample_order<R: Rng + ?Sized>(
    params: &TokunagaParams,
    limits: &GenerationLimits,
    rng: &mut R,
) -> Result<u32, GenerationError> {
    let k = geometric(params.p(), rng).saturating_add(1);
    let order = u32::try_from(k).unwrap_or(u32::MAX);
    if let Some(cap) = limits.max_order {
        if order > cap {
            return Err(GenerationError::OrderCapExceeded { order, cap });
        }
    }
    params.check_order(order)?;
    Ok(order)
}

/// A geometric tree built by the recursive branch construction.
pub fn generate_recursive<R: Rng + ?Sized>(
    params: &TokunagaParams,
    limits: &GenerationLimits,
    rng: &mut R,
) -> Result<Tree, GenerationError> {
    let order = sample_order(params, limits, rng)?;
    generate_with_order(params, order, limits, rng)
}

/// A geometric tree conditioned on its order: the skeleton depth is forced
/// to `order` and everything below is drawn as usual.
pub fn generate_with_order<R: Rng + ?Sized>(
    params: &TokunagaParams,
    order: u32,
    limits: &GenerationLimits,
    rng: &mut R,
) -> Result<Tree, GenerationError> {
    params.check_order(order)?;
    let mut b = TreeBuilder::new();
    // Branches waiting to be grown: (attachment vertex, order).
    let mut pending: Vec<(VertexId, u32)> = vec![(b.root(), order)];
    let mut top_split = None;
    let mut first = true;
    while let Some((parent, k)) = pending.pop() {
        let m = geometric(params.termination_prob(k), rng);
        let mut first_side = None;
        if first {
            top_split = if m > 0 {
                let i = side_order(params, k, rng);
                first_side = Some(i);
                Some((k, i))
            } else if k >= 2 {
                Some((k - 1, k - 1))
            } else {
                None
            };
            first = false;
        }
        if b.len() as u128 + m as u128 + 1 > limits.max_vertices as u128 {
            return Err(GenerationError::BudgetExceeded {
                order,
                top_split,
                limit: limits.max_vertices,
            });
        }
        let mut v = b.add_child(parent);
        for j in 0..m {
            let i = match first_side.take() {
                Some(i) if j == 0 => i,
                _ => side_order(params, k, rng),
            };
            let next = b.add_child(v);
            pending.push((v, i));
            v = next;
        }
        if k >= 2 {
            pending.push((v, k - 1));
            pending.push((v, k - 1));
        }
    }
    Ok(b.finish().expect("the branch construction yields a reduced tree"))
}

/// What happened to a population member at one time step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// An order-1 member terminated without offspring.
    Leaf,
    /// The member terminated and left two members of the next lower order.
    Split,
    /// The member survived and produced a side member of order `side_order`.
    SideBranch { side_order: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ProcessEvent {
    pub time: u32,
    pub order: u32,
    pub kind: EventKind,
    /// Vertex created by the event; its depth equals `time`.
    pub vertex: VertexId,
}

/// Every event of one run of the branching process, in time order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ProcessTimeline {
    pub events: Vec<ProcessEvent>,
}

impl ProcessTimeline {
    /// Time of the last event: the height of the produced tree.
    pub fn duration(&self) -> u32 {
        self.events.last().map_or(0, |e| e.time)
    }
}

/// A geometric tree obtained by simulating the branching process in
/// discrete time. Each member of order `K` terminates with probability
/// `1 / S_{K-1}`, splitting into two order-`K-1` members (or vanishing when
/// `K = 1`); otherwise it survives and spawns a side member.
pub fn generate_process<R: Rng + ?Sized>(
    params: &TokunagaParams,
    limits: &GenerationLimits,
    rng: &mut R,
) -> Result<(Tree, ProcessTimeline), GenerationError> {
    let order = sample_order(params, limits, rng)?;
    let mut b = TreeBuilder::new();
    let mut timeline = ProcessTimeline::default();
    let mut members: Vec<(VertexId, u32)> = vec![(b.root(), order)];
    let mut next = Vec::new();
    let mut top_split = None;
    let mut time = 0u32;
    while !members.is_empty() {
        time += 1;
        for &(parent, k) in &members {
            if b.len() + 2 >= limits.max_vertices {
                return Err(GenerationError::BudgetExceeded {
                    order,
                    top_split,
                    limit: limits.max_vertices,
                });
            }
            let v = b.add_child(parent);
            let kind = if rng.random::<f64>() < params.termination_prob(k) {
                if k == 1 {
                    EventKind::Leaf
                } else {
                    next.push((v, k - 1));
                    next.push((v, k - 1));
                    EventKind::Split
                }
            } else {
                let i = side_order(params, k, rng);
                next.push((v, k));
                next.push((v, i));
                EventKind::SideBranch { side_order: i }
            };
            if time == 1 {
                top_split = match kind {
                    EventKind::Leaf => None,
                    EventKind::Split => Some((k - 1, k - 1)),
                    EventKind::SideBranch { side_order } => Some((k, side_order)),
                };
            }
            timeline.events.push(ProcessEvent {
                time,
                order: k,
                kind,
                vertex: v,
            });
        }
        std::mem::swap(&mut members, &mut next);
        next.clear();
    }
    let tree = b.finish().expect("the process yields a reduced tree");
    Ok((tree, timeline))
}

/// Orders of the members alive after `time` steps of the branching process
/// started from one member of order `order`. These are the root orders of
/// the forest left by `time` unit time shifts of the generated tree.
pub fn process_population<R: Rng + ?Sized>(
    params: &TokunagaParams,
    order: u32,
    time: u32,
    rng: &mut R,
) -> Result<Vec<u32>, ParamError> {
    params.check_order(order)?;
    let mut members = vec![order];
    let mut next = Vec::new();
    for _ in 0..time {
        for &k in &members {
            if rng.random::<f64>() < params.termination_prob(k) {
                if k > 1 {
                    next.push(k - 1);
                    next.push(k - 1);
                }
            } else {
                next.push(k);
                next.push(side_order(params, k, rng));
            }
        }
        std::mem::swap(&mut members, &mut next);
        next.clear();
    }
    Ok(members)
}

/// A planted critical binary Galton-Watson tree: every member has zero or
/// two offspring with probability 1/2 each.
pub fn generate_gw_planted<R: Rng + ?Sized>(limits: &GenerationLimits, rng: &mut R) -> Result<Tree, GenerationError> {
    let mut b = TreeBuilder::new();
    let mut pending = vec![b.root()];
    while let Some(parent) = pending.pop() {
        if b.len() + 2 >= limits.max_vertices {
            return Err(GenerationError::BudgetExceeded {
                order: 0,
                top_split: None,
                limit: limits.max_vertices,
            });
        }
        let v = b.add_child(parent);
        if rng.random::<bool>() {
            pending.push(v);
            pending.push(v);
        }
    }
    Ok(b.finish().expect("binary offspring yield a reduced tree"))
}

/// Parameter of `Geom(r)` after Bernoulli thinning that keeps each unit
/// with probability `q`: `r / (q (1 - r) + r)`.
pub fn thinned_geometric_param(r: f64, q: f64) -> Result<f64, ParamError> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(ParamError::Geometric(r));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(ParamError::KeepProbability(q));
    }
    Ok(r / (q * (1.0 - r) + r))
}

/// Edge lengths indexed by the child vertex of each edge. The root entry
/// is zero since the root has no parental edge.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeLengths(Vec<f64>);

impl EdgeLengths {
    /// Lengths for every vertex of a tree, root entry included.
    pub fn new(lengths: Vec<f64>) -> Self {
        EdgeLengths(lengths)
    }

    /// Length of the parental edge of `v`.
    pub fn get(&self, v: VertexId) -> f64 {
        self.0[v.index()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Independent unit-mean exponential lengths on every edge.
pub fn decorate_edge_lengths<R: Rng + ?Sized>(tree: &Tree, rng: &mut R) -> EdgeLengths {
    let lengths = tree
        .vertex_ids()
        .map(|v| if v == tree.root() { 0.0 } else { Exp1.sample(rng) })
        .collect();
    EdgeLengths(lengths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::canonical_code;
    use crate::order::{branch_statistics, compute_orders};
    use crate::params::CriticalTokunaga;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn geometric_draws() {
        let mut r = rng(1);
        assert!((0..100).all(|_| geom_sample(1.0, &mut r).unwrap() == 0));
        assert!(geom_sample(0.0, &mut r).is_err());
        assert!(geom_sample(1.5, &mut r).is_err());
        let n = 200_000;
        let zeros = (0..n).filter(|_| geom_sample(0.25, &mut r).unwrap() == 0).count();
        let f = zeros as f64 / n as f64;
        // Standard error is about 0.001.
        assert!((f - 0.25).abs() < 0.005, "P(X=0) estimate {f}");
    }

    #[test]
    fn skeleton_population_halves_in_order() {
        let params = CriticalTokunaga::new(1.0).unwrap().params();
        let mut r = rng(5);
        assert_eq!(process_population(&params, 5, 0, &mut r).unwrap(), vec![5]);
        assert_eq!(process_population(&params, 5, 3, &mut r).unwrap(), vec![2; 8]);
        assert!(process_population(&params, 2, 2, &mut r).unwrap().is_empty());
    }

    #[test]
    fn skeletons_when_coefficients_vanish() {
        let params = CriticalTokunaga::new(1.0).unwrap().params();
        let mut r = rng(2);
        for _ in 0..200 {
            let t = generate_recursive(&params, &GenerationLimits::default(), &mut r).unwrap();
            let k = compute_orders(&t).tree_order();
            assert_eq!(canonical_code(&t), canonical_code(&Tree::skeleton(k)));
        }
    }

    #[test]
    fn process_under_unit_coefficients_is_a_skeleton_with_level_leaves() {
        let params = CriticalTokunaga::new(1.0).unwrap().params();
        let mut r = rng(3);
        for _ in 0..100 {
            let (t, tl) = generate_process(&params, &GenerationLimits::default(), &mut r).unwrap();
            let k = compute_orders(&t).tree_order();
            let depths = t.depths();
            for v in t.vertex_ids().filter(|&v| t.is_leaf(v) && v != t.root()) {
                assert_eq!(depths[v.index()], k);
            }
            assert_eq!(tl.duration(), k);
        }
    }

    #[test]
    fn timeline_matches_the_tree() {
        let params = CriticalTokunaga::new(2.0).unwrap().params();
        let mut r = rng(4);
        for _ in 0..300 {
            let (t, tl) = generate_process(&params, &GenerationLimits::default(), &mut r).unwrap();
            let ot = compute_orders(&t);
            let depths = t.depths();
            assert_eq!(tl.events.len(), t.len() - 1);
            for e in &tl.events {
                assert_eq!(depths[e.vertex.index()], e.time);
                assert_eq!(ot.order_of(e.vertex), e.order);
                match e.kind {
                    EventKind::Leaf => assert!(t.is_leaf(e.vertex) && e.order == 1),
                    EventKind::Split => assert_eq!(t.children(e.vertex).len(), 2),
                    EventKind::SideBranch { side_order } => assert!(side_order < e.order),
                }
            }
        }
    }

    #[test]
    fn budget_breaches_report_the_top_split() {
        let params = CriticalTokunaga::new(3.0).unwrap().params();
        let mut r = rng(5);
        let limits = GenerationLimits::with_max_vertices(50);
        let err = generate_with_order(&params, 6, &limits, &mut r).unwrap_err();
        match err {
            GenerationError::BudgetExceeded { order, top_split, .. } => {
                assert_eq!(order, 6);
                let (a, b) = top_split.unwrap();
                assert!(a == 6 && b < 6 || a == 5 && b == 5);
            }
            other => panic!("unexpected {other:?}"),
        }
        let capped = GenerationLimits {
            max_order: Some(0),
            ..GenerationLimits::default()
        };
        assert!(matches!(
            generate_recursive(&params, &capped, &mut r),
            Err(GenerationError::OrderCapExceeded { .. })
        ));
    }

    #[test]
    fn recorded_top_split_matches_materialized_trees() {
        let params = CriticalTokunaga::new(2.0).unwrap().params();
        let mut r = rng(6);
        for _ in 0..300 {
            let k = 1 + geometric(0.5, &mut r) as u32;
            let mut probe = r.clone();
            let t = generate_with_order(&params, k, &GenerationLimits::default(), &mut r).unwrap();
            let limits = GenerationLimits::with_max_vertices(1);
            let Err(GenerationError::BudgetExceeded { top_split, .. }) =
                generate_with_order(&params, k, &limits, &mut probe)
            else {
                panic!("a one-vertex budget must abort");
            };
            let ot = compute_orders(&t);
            let got = crate::order::principal_children(&t)
                .ok()
                .map(|[a, b]| (ot.order_of(a), ot.order_of(b)));
            let norm = |p: Option<(u32, u32)>| p.map(|(a, b)| (a.max(b), a.min(b)));
            assert_eq!(norm(got), norm(top_split));
        }
    }

    #[test]
    fn gw_small_shapes() {
        let mut r = rng(7);
        let n = 100_000;
        let mut edge = 0;
        let mut cherry = 0;
        // Critical trees are occasionally huge; those count as other shapes.
        let limits = GenerationLimits::with_max_vertices(10_000);
        for _ in 0..n {
            let Ok(t) = generate_gw_planted(&limits, &mut r) else {
                continue;
            };
            match canonical_code(&t).as_str() {
                "L" => edge += 1,
                "(L,L)" => cherry += 1,
                _ => {}
            }
        }
        assert!((edge as f64 / n as f64 - 0.5).abs() < 0.006);
        assert!((cherry as f64 / n as f64 - 0.125).abs() < 0.004);
    }

    #[test]
    fn thinning() {
        assert_eq!(thinned_geometric_param(0.3, 1.0).unwrap(), 0.3);
        assert_eq!(thinned_geometric_param(0.3, 0.0).unwrap(), 1.0);
        assert!((thinned_geometric_param(0.25, 0.5).unwrap() - 0.4).abs() < 1e-15);
        assert!(thinned_geometric_param(0.0, 0.5).is_err());
        assert!(thinned_geometric_param(0.5, 1.5).is_err());
    }

    #[test]
    fn edge_lengths_have_unit_mean() {
        let mut r = rng(8);
        let t = Tree::skeleton(14);
        let l = decorate_edge_lengths(&t, &mut r);
        assert_eq!(l.get(t.root()), 0.0);
        let mean = l.as_slice().iter().sum::<f64>() / (t.len() - 1) as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn side_orders_stay_below_the_branch_order() {
        let params = TokunagaParams::explicit(0.3, &[1.0, 0.0, 5.0]).unwrap();
        let mut r = rng(9);
        for _ in 0..2000 {
            let i = side_order(&params, 4, &mut r);
            assert!(i == 1 || i == 3, "order {i} has zero probability");
        }
        let t = generate_with_order(&params, 4, &GenerationLimits::default(), &mut r).unwrap();
        let s = branch_statistics(&compute_orders(&t));
        assert_eq!(s.n_side(2, 4), 0);
    }
}
