//! Exact probabilities of small tree shapes under the geometric measure.
//!
//! A geometric tree is a product of independent choices, one per vertex:
//! the bottom vertex of an order-`k` branch (where it splits into two
//! order-`k-1` branches) has weight `1 / S_{k-1}`, and a vertex where an
//! order-`i` side branch joins has weight `T_{k-i} / S_{k-1}`. A shape
//! collects one outcome per embedding, so a split into two non-isomorphic
//! subtrees counts twice.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Sub};

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::canonical::{canonical_code, ShapeCode, ShapeIds};
use crate::order::compute_orders;
use crate::params::{ParamError, TokunagaParams};
use crate::stats::ShapeDistribution;
use crate::tree::Tree;

/// Shapes produced by [`enumerate_trees`] before it gives up.
pub const DEFAULT_MAX_SHAPES: usize = 1_000_000;

/// Terms summed per branch by [`exact_pruned_mass`] before it gives up.
const MAX_SERIES_TERMS: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("the empty tree has no mass under a geometric measure")]
    EmptyTree,
    #[error("enumeration needs more than {0} shapes")]
    Budget(usize),
    #[error(
        "series for an order-{order} branch with {sides} side branches did not reach the tolerance in {terms} terms"
    )]
    TailNotCertified { order: u32, sides: usize, terms: usize },
    #[error("tolerance {0} must be positive")]
    Tolerance(f64),
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Number types the measure can be evaluated in.
pub trait Weight:
    Clone + PartialEq + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    /// Exact value of a finite float.
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
}

impl Weight for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Weight for BigRational {
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("parameters are finite")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

fn pow<W: Weight>(x: &W, n: u32) -> W {
    (0..n).fold(W::one(), |acc, _| acc * x.clone())
}

/// `μ(t)` evaluated in `W`. With `W = BigRational` every parameter is read
/// as the exact value of its float, and the result is exact.
pub fn exact_measure_in<W: Weight>(tree: &Tree, params: &TokunagaParams) -> Result<W, OracleError> {
    let ot = compute_orders(tree);
    let order = ot.tree_order();
    if order == 0 {
        return Err(OracleError::EmptyTree);
    }
    params.check_order(order)?;
    let p = W::from_f64(params.p());
    let mut mu = p.clone() * pow(&(W::one() - p), order - 1);
    let shapes = ShapeIds::new(tree);
    let two = W::one() + W::one();
    for v in tree.vertex_ids() {
        if let [a, b] = *tree.children(v) {
            let (oa, ob) = (ot.order_of(a), ot.order_of(b));
            if oa == ob {
                mu = mu / W::from_f64(params.s(oa));
                if shapes.of(a) != shapes.of(b) {
                    mu = mu * two.clone();
                }
            } else {
                let (k, i) = (oa.max(ob), oa.min(ob));
                mu = mu * W::from_f64(params.t(k - i)) / W::from_f64(params.s(k - 1));
            }
            if mu.is_zero() {
                return Ok(mu);
            }
        }
    }
    Ok(mu)
}

/// `μ(t)` in double precision.
pub fn exact_measure(tree: &Tree, params: &TokunagaParams) -> Result<f64, OracleError> {
    exact_measure_in(tree, params)
}

/// Probability of the shape of `tree` under a planted critical binary
/// Galton-Watson tree: `2^-(2n-1)` per embedding for `n` leaves, times
/// `2^a` embeddings where `a` counts vertices with non-isomorphic subtrees.
pub fn planted_gw_measure_in<W: Weight>(tree: &Tree) -> Result<W, OracleError> {
    if tree.is_empty() {
        return Err(OracleError::EmptyTree);
    }
    let shapes = ShapeIds::new(tree);
    let asymmetric = tree
        .vertex_ids()
        .filter(|&v| matches!(*tree.children(v), [a, b] if shapes.of(a) != shapes.of(b)))
        .count() as u32;
    let half = W::from_f64(0.5);
    let n = tree.leaf_count() as u32;
    Ok(pow(&half, 2 * n - 1) * pow(&(W::one() + W::one()), asymmetric))
}

pub fn planted_gw_measure(tree: &Tree) -> Result<f64, OracleError> {
    planted_gw_measure_in(tree)
}

/// `μ` with a per-shape cache.
#[derive(Clone, Debug)]
pub struct ExactMeasure {
    params: TokunagaParams,
    cache: HashMap<ShapeCode, f64>,
}

impl ExactMeasure {
    pub fn new(params: TokunagaParams) -> Self {
        ExactMeasure {
            params,
            cache: HashMap::new(),
        }
    }

    pub fn params(&self) -> &TokunagaParams {
        &self.params
    }

    pub fn measure(&mut self, tree: &Tree) -> Result<f64, OracleError> {
        let code = canonical_code(tree);
        if let Some(&m) = self.cache.get(&code) {
            return Ok(m);
        }
        let m = exact_measure(tree, &self.params)?;
        self.cache.insert(code, m);
        Ok(m)
    }

    pub fn measure_code(&mut self, code: &ShapeCode) -> Result<f64, OracleError> {
        if let Some(&m) = self.cache.get(code) {
            return Ok(m);
        }
        self.measure(&code.to_tree())
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }
}

/// Every shape of order at most `max_order` whose branches carry at most
/// `max_side` side branches, with its mass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Enumeration {
    pub max_order: u32,
    pub max_side: usize,
    pub distribution: ShapeDistribution,
    /// Mass of all other shapes, computed independently of the listed ones.
    pub tail: f64,
}

impl Enumeration {
    pub fn enumerated_mass(&self) -> f64 {
        self.distribution.mass.values().sum()
    }
}

pub fn enumerate_trees(max_order: u32, max_side: usize, params: &TokunagaParams) -> Result<Enumeration, OracleError> {
    enumerate_trees_with_budget(max_order, max_side, params, DEFAULT_MAX_SHAPES)
}

/// As [`enumerate_trees`], failing once more than `max_shapes` shapes
/// would be listed. Zero-mass shapes are skipped.
pub fn enumerate_trees_with_budget(
    max_order: u32,
    max_side: usize,
    params: &TokunagaParams,
    max_shapes: usize,
) -> Result<Enumeration, OracleError> {
    if max_order >= 1 {
        params.check_order(max_order)?;
    }
    // by_order[k - 1]: shapes of order k with their weight given order k.
    let mut by_order: Vec<Vec<(String, f64)>> = Vec::new();
    let mut total = 0usize;
    for k in 1..=max_order {
        let shapes = if k == 1 {
            vec![("L".to_owned(), 1.0)]
        } else {
            let s = params.s(k - 1);
            let below = &by_order[k as usize - 2];
            let mut level = Vec::new();
            for (x, (a, wa)) in below.iter().enumerate() {
                for (b, wb) in &below[x..] {
                    let sym = if a == b { 1.0 } else { 2.0 };
                    level.push((ShapeCode::join(a, b), wa * wb * sym / s));
                }
            }
            let mut sides = Vec::new();
            for i in 1..k {
                let q = params.t(k - i) / s;
                if q > 0.0 {
                    sides.extend(by_order[i as usize - 1].iter().map(|(c, w)| (c.as_str(), q * w)));
                }
            }
            let mut all = level.clone();
            for _ in 0..max_side {
                if sides.is_empty() {
                    break;
                }
                if total + all.len() + level.len() * sides.len() > max_shapes {
                    return Err(OracleError::Budget(max_shapes));
                }
                // One more side branch joins above the current top vertex.
                let mut next = Vec::with_capacity(level.len() * sides.len());
                for (side, ws) in &sides {
                    for (rest, wr) in &level {
                        next.push((ShapeCode::join(side, rest), ws * wr));
                    }
                }
                all.extend(next.iter().cloned());
                level = next;
            }
            all
        };
        total += shapes.len();
        if total > max_shapes {
            return Err(OracleError::Budget(max_shapes));
        }
        by_order.push(shapes);
    }

    let mut distribution = ShapeDistribution::new();
    for (k, shapes) in by_order.into_iter().enumerate() {
        let pk = params.order_pmf(k as u32 + 1);
        for (code, w) in shapes {
            distribution.add(ShapeCode::from_string(code), pk * w);
        }
    }
    Ok(Enumeration {
        max_order,
        max_side,
        distribution,
        tail: enumeration_tail(max_order, max_side, params),
    })
}

/// `P(K > max_order) + Σ_K P(K) (1 - Q_K)` where `Q_K`, the conditional
/// mass of the listed order-`K` shapes, obeys
/// `Q_K = Σ_{m <= M} (1/S_{K-1}) (Σ_i q_{K,i} Q_i)^m Q_{K-1}^2`.
fn enumeration_tail(max_order: u32, max_side: usize, params: &TokunagaParams) -> f64 {
    let mut q: Vec<f64> = Vec::new();
    let mut tail = (1.0 - params.p()).powi(max_order as i32);
    for k in 1..=max_order {
        let qk = if k == 1 {
            1.0
        } else {
            let s = params.s(k - 1);
            let side: f64 = (1..k).map(|i| params.t(k - i) / s * q[i as usize - 1]).sum();
            let geometric: f64 = (0..=max_side).map(|m| side.powi(m as i32)).sum();
            geometric * q[k as usize - 2].powi(2) / s
        };
        tail += params.order_pmf(k) * (1.0 - qk);
        q.push(qk);
    }
    tail
}

/// Certified enclosure of the mass `ν(t)` that pruning sends to `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrunedMass {
    pub lower: f64,
    pub upper: f64,
    /// Series terms summed over all branches.
    pub terms: usize,
}

impl PrunedMass {
    pub fn value(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    /// Width of the enclosure.
    pub fn certificate(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `ν(t) = Σ μ(t')` over all `t'` that prune to `t`.
///
/// A preimage raises every branch of `t` by one order and may insert any
/// number `n` of leaves along each branch, in any of `C(m+n, n)` positions
/// among its `m` side branches. Leaves of `t` become cherries with inserted
/// leaves. The sum over `n` is carried out branch by branch until the
/// geometric tail bound is below the share of `tol` allotted to the branch.
pub fn exact_pruned_mass(tree: &Tree, params: &TokunagaParams, tol: f64) -> Result<PrunedMass, OracleError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(OracleError::Tolerance(tol));
    }
    let ot = compute_orders(tree);
    let order = ot.tree_order();
    if order == 0 {
        // Exactly the order-1 trees prune to the empty tree.
        let p = params.p();
        return Ok(PrunedMass {
            lower: p,
            upper: p,
            terms: 0,
        });
    }
    params.check_order(order + 1)?;
    let shapes = ShapeIds::new(tree);
    let mut fixed = params.order_pmf(order + 1);
    for v in tree.vertex_ids() {
        if let [a, b] = *tree.children(v) {
            let (oa, ob) = (ot.order_of(a), ot.order_of(b));
            if oa == ob {
                if shapes.of(a) != shapes.of(b) {
                    fixed *= 2.0;
                }
            } else {
                let (k, i) = (oa.max(ob), oa.min(ob));
                fixed *= params.t(k - i) / params.s(k);
            }
        }
    }
    let branches = ot.branches();
    // Relative slack per branch so that the product stays within tol.
    let eps = tol / (2.0 * branches.len() as f64);
    let mut series: HashMap<(u32, usize), (f64, f64, usize)> = HashMap::new();
    let (mut lower, mut upper, mut terms) = (fixed, fixed, 0);
    for br in &branches {
        let key = (br.order, br.side_orders.len());
        let (lo, hi, _) = match series.get(&key) {
            Some(&v) => v,
            None => {
                let v = branch_series(params, br.order, br.side_orders.len(), eps)?;
                terms += v.2;
                series.insert(key, v);
                v
            }
        };
        let w = 1.0 / params.s(br.order);
        lower *= w * lo;
        upper *= w * hi;
    }
    Ok(PrunedMass { lower, upper, terms })
}

/// Bounds on `Σ_n C(m+n, n) ρ^n` with `ρ = T_k / S_k`, relative width
/// at most `eps`.
fn branch_series(params: &TokunagaParams, k: u32, m: usize, eps: f64) -> Result<(f64, f64, usize), OracleError> {
    let rho = params.t(k) / params.s(k);
    if rho == 0.0 {
        return Ok((1.0, 1.0, 1));
    }
    let (mut sum, mut term) = (1.0, 1.0);
    let mut n = 0usize;
    loop {
        // term = C(m+n, n) ρ^n; the next term and the ratio bound after it.
        let next = term * rho * (m + n + 1) as f64 / (n + 1) as f64;
        let theta = rho * (m + n + 2) as f64 / (n + 2) as f64;
        if theta < 1.0 {
            let tail = next / (1.0 - theta);
            if tail <= eps * sum {
                return Ok((sum, sum + tail, n + 1));
            }
        }
        sum += next;
        term = next;
        n += 1;
        if n >= MAX_SERIES_TERMS {
            return Err(OracleError::TailNotCertified {
                order: k,
                sides: m,
                terms: n,
            });
        }
    }
}

/// Comparison of `ν(t) / (1 - ν(φ))` with `μ(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PruneCheck {
    pub mu: f64,
    pub conditional_lower: f64,
    pub conditional_upper: f64,
    /// `|midpoint - μ|`.
    pub deviation: f64,
    pub certificate: f64,
}

impl PruneCheck {
    pub fn passes(&self, abs_tol: f64) -> bool {
        self.deviation <= abs_tol + self.certificate
    }
}

pub fn check_prune_invariance(tree: &Tree, params: &TokunagaParams, tol: f64) -> Result<PruneCheck, OracleError> {
    let mu = exact_measure(tree, params)?;
    let nu = exact_pruned_mass(tree, params, tol)?;
    let keep = 1.0 - exact_pruned_mass(&Tree::empty(), params, tol)?.value();
    let (lo, hi) = (nu.lower / keep, nu.upper / keep);
    Ok(PruneCheck {
        mu,
        conditional_lower: lo,
        conditional_upper: hi,
        deviation: (0.5 * (lo + hi) - mu).abs(),
        certificate: hi - lo,
    })
}
