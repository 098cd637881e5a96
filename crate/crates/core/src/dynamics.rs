//! Expected vertex counts per order as a function of process time.
//!
//! The state vector `x(s)` evolves by `x(s+1) = x(s) + G S^{-1} x(s)`,
//! truncated at a maximal order. Every truncated quantity comes with an
//! a-priori bound on what the truncation dropped.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::ensemble::fold_draws;
use crate::order::{compute_orders, principal_children};
use crate::params::{ParamError, TokunagaParams};
use crate::sampler::{process_population, sample_order, GenerationLimits};
use crate::tree::Tree;

/// Time shifts simulated by [`empirical_state_vector`] are capped so the
/// population (at most `2^s` members) stays small.
pub const MAX_SHIFTS: u32 = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("state vector has {found} entries, operator expects {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("truncation order {kmax} outside 1..={max}")]
    Kmax { kmax: u32, max: u32 },
    #[error("index {index} outside {range}")]
    Index { index: u32, range: String },
    #[error("sequence of length {have} is too short, need {need}")]
    SequenceTooShort { need: usize, have: usize },
    #[error("{0} time shifts exceed the supported {MAX_SHIFTS}")]
    TooManyShifts(u32),
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// `x_1, …, x_Kmax`; entry `K - 1` is the expected number of order-`K`
/// members.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateVector {
    pub x: Vec<f64>,
    /// Mass known to lie beyond `Kmax`, when the vector is a truncated
    /// distribution.
    pub tail_mass: f64,
}

impl StateVector {
    pub fn new(x: Vec<f64>) -> Self {
        StateVector { x, tail_mass: 0.0 }
    }

    /// Unit mass on order `k`.
    pub fn unit(k: u32, kmax: u32) -> Self {
        let mut x = vec![0.0; kmax as usize];
        x[k as usize - 1] = 1.0;
        Self::new(x)
    }

    pub fn kmax(&self) -> u32 {
        self.x.len() as u32
    }

    /// `x_k`, zero beyond the truncation.
    pub fn get(&self, k: u32) -> f64 {
        self.x.get(k as usize - 1).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.x.iter().sum()
    }

    pub fn l1_distance(&self, other: &StateVector) -> f64 {
        let n = self.x.len().max(other.x.len()) as u32;
        (1..=n).map(|k| (self.get(k) - other.get(k)).abs()).sum()
    }
}

/// `π_K = p (1 - p)^(K-1)` for `K <= Kmax`; the tail mass is `(1 - p)^Kmax`.
pub fn initial_state(p: f64, kmax: u32) -> Result<StateVector, DynamicsError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(ParamError::RootOrder(p).into());
    }
    if kmax == 0 {
        return Err(DynamicsError::Kmax { kmax, max: u32::MAX });
    }
    let x = (0..kmax).map(|i| p * (1.0 - p).powi(i as i32)).collect();
    Ok(StateVector {
        x,
        tail_mass: (1.0 - p).powi(kmax as i32),
    })
}

/// Probability that a member splits into orders `(a, b)`, `a >= b`. The
/// parent has order `a + 1` when `a = b` and order `a` otherwise.
pub fn split_kernel(params: &TokunagaParams, a: u32, b: u32) -> Result<f64, DynamicsError> {
    if b == 0 || b > a || a > params.max_order() {
        return Err(DynamicsError::Index {
            index: b,
            range: format!("1..={a} with a <= {}", params.max_order()),
        });
    }
    Ok(if a == b {
        1.0 / params.s(a)
    } else {
        params.t(a - b) / params.s(a - 1)
    })
}

/// Truncated `G` and `S^{-1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvolutionOperator {
    kmax: u32,
    /// Row-major upper-triangular `G`.
    g: Vec<Vec<f64>>,
    s_inv: Vec<f64>,
}

impl EvolutionOperator {
    pub fn new(params: &TokunagaParams, kmax: u32) -> Result<Self, DynamicsError> {
        if kmax == 0 || kmax > params.max_order() {
            return Err(DynamicsError::Kmax {
                kmax,
                max: params.max_order(),
            });
        }
        let n = kmax as usize;
        let mut g = vec![vec![0.0; n]; n];
        for (r, row) in g.iter_mut().enumerate() {
            row[r] = -1.0;
            for (col, entry) in row.iter_mut().enumerate().skip(r + 1) {
                let gap = (col - r) as u32;
                *entry = if gap == 1 { params.t(1) + 2.0 } else { params.t(gap) };
            }
        }
        let s_inv = (0..kmax).map(|k| 1.0 / params.s(k)).collect();
        Ok(EvolutionOperator { kmax, g, s_inv })
    }

    pub fn kmax(&self) -> u32 {
        self.kmax
    }

    /// `G[i][j]` with 1-based orders.
    pub fn g(&self, i: u32, j: u32) -> f64 {
        self.g[i as usize - 1][j as usize - 1]
    }

    /// `G S^{-1} x`.
    pub fn apply(&self, x: &StateVector) -> Result<StateVector, DynamicsError> {
        if x.x.len() != self.kmax as usize {
            return Err(DynamicsError::Dimension {
                expected: self.kmax as usize,
                found: x.x.len(),
            });
        }
        let scaled: Vec<f64> = x.x.iter().zip(&self.s_inv).map(|(a, b)| a * b).collect();
        let y = self
            .g
            .iter()
            .enumerate()
            .map(|(r, row)| row[r..].iter().zip(&scaled[r..]).map(|(g, v)| g * v).sum())
            .collect();
        Ok(StateVector::new(y))
    }
}

/// One unit of time: `x + G S^{-1} x`.
pub fn step(op: &EvolutionOperator, x: &StateVector) -> Result<StateVector, DynamicsError> {
    let d = op.apply(x)?;
    Ok(StateVector::new(x.x.iter().zip(&d.x).map(|(a, b)| a + b).collect()))
}

/// The same step written member by member with [`split_kernel`]:
/// `x_K' = 2 x_{K+1} q_{K,K} + x_K (1 - q_{K-1,K-1}) + Σ_{i>K} x_i q_{i,K}`.
pub fn step_components(params: &TokunagaParams, x: &StateVector) -> Result<StateVector, DynamicsError> {
    let n = x.kmax();
    if n == 0 || n > params.max_order() {
        return Err(DynamicsError::Kmax {
            kmax: n,
            max: params.max_order(),
        });
    }
    let mut y = Vec::with_capacity(n as usize);
    for k in 1..=n {
        let mut v = x.get(k) * (1.0 - 1.0 / params.s(k - 1));
        if k < n {
            v += 2.0 * x.get(k + 1) * split_kernel(params, k, k)?;
        }
        for i in k + 1..=n {
            v += x.get(i) * split_kernel(params, i, k)?;
        }
        y.push(v);
    }
    Ok(StateVector::new(y))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub kmax: u32,
    /// L1 norm of the truncated `G S^{-1} π`.
    pub residual: f64,
    /// Bound on the L1 norm of everything the truncation dropped.
    pub tail_bound: f64,
    /// Offspring per member after one step, `2 (1 - p)`.
    pub progeny_ratio: f64,
    /// The same ratio from the truncated step.
    pub progeny_ratio_numeric: f64,
    pub progeny_conserved: bool,
}

impl InvarianceReport {
    /// Time invariant up to `tol` plus the certified truncation error.
    pub fn is_invariant(&self, tol: f64) -> bool {
        self.progeny_conserved && self.residual <= tol + self.tail_bound
    }
}

/// Residual of `G S^{-1} π = 0` at truncation `Kmax`.
///
/// Entries of `G S^{-1}` are at most 3 in absolute value and `π` has tail
/// `(1 - p)^K` beyond order `K`, so the dropped columns cost at most
/// `3 Kmax (1-p)^Kmax` in the kept rows and the dropped rows at most
/// `(1-p)^Kmax + 3 (1-p)^(Kmax+1) / p`.
pub fn time_invariance_residual(params: &TokunagaParams, kmax: u32) -> Result<InvarianceReport, DynamicsError> {
    let op = EvolutionOperator::new(params, kmax)?;
    let p = params.p();
    let pi = initial_state(p, kmax)?;
    let r = op.apply(&pi)?;
    let residual = r.x.iter().map(|v| v.abs()).sum();
    let q = (1.0 - p).powi(kmax as i32);
    let tail_bound = 3.0 * kmax as f64 * q + q + 3.0 * (1.0 - p) * q / p;
    let stepped = step(&op, &pi)?;
    let progeny_ratio = 2.0 * (1.0 - p);
    Ok(InvarianceReport {
        kmax,
        residual,
        tail_bound,
        progeny_ratio,
        progeny_ratio_numeric: stepped.total() / pi.total(),
        progeny_conserved: (progeny_ratio - 1.0).abs() <= 1e-12,
    })
}

/// A collection of planted trees.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    pub fn new(trees: Vec<Tree>) -> Self {
        Forest { trees }
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Number of trees of each order; entry `k - 1` counts order `k`.
    pub fn order_counts(&self) -> Vec<u64> {
        let mut counts = Vec::new();
        for t in &self.trees {
            let k = compute_orders(t).tree_order() as usize;
            if k == 0 {
                continue;
            }
            if counts.len() < k {
                counts.resize(k, 0);
            }
            counts[k - 1] += 1;
        }
        counts
    }
}

/// Removes every root edge: order-1 trees vanish and every other tree is
/// replaced by its two principal subtrees.
pub fn time_shift(forest: &Forest) -> Forest {
    let mut out = Vec::with_capacity(2 * forest.len());
    for t in &forest.trees {
        if let Ok(children) = principal_children(t) {
            for v in children {
                out.push(t.subtree(v).expect("child of the progenitor"));
            }
        }
    }
    Forest::new(out)
}

/// Monte Carlo state vector after `s` time shifts, with standard errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalState {
    pub s: u32,
    pub samples: usize,
    pub mean: StateVector,
    pub std_error: Vec<f64>,
}

impl EmpiricalState {
    /// Largest `|mean_K - x_K| / se_K` over `K <= kmax`. Coordinates with a
    /// zero standard error count only if they disagree.
    pub fn max_z_score(&self, reference: &StateVector, kmax: u32) -> f64 {
        (1..=kmax)
            .map(|k| {
                let d = (self.mean.get(k) - reference.get(k)).abs();
                let se = self.std_error.get(k as usize - 1).copied().unwrap_or(0.0);
                if se > 0.0 {
                    d / se
                } else if d == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Default)]
struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl Moments {
    fn add(&mut self, counts: &[u64]) {
        if self.sum.len() < counts.len() {
            self.sum.resize(counts.len(), 0.0);
            self.sum_sq.resize(counts.len(), 0.0);
        }
        for (k, &c) in counts.iter().enumerate() {
            self.sum[k] += c as f64;
            self.sum_sq[k] += (c * c) as f64;
        }
    }

    fn merge(&mut self, other: Moments) {
        if self.sum.len() < other.sum.len() {
            self.sum.resize(other.sum.len(), 0.0);
            self.sum_sq.resize(other.sum.len(), 0.0);
        }
        for (k, (a, b)) in other.sum.into_iter().zip(other.sum_sq).enumerate() {
            self.sum[k] += a;
            self.sum_sq[k] += b;
        }
    }
}

/// Draws `n_samples` geometric trees, shifts each `s` times and averages the
/// number of surviving trees of every order.
///
/// Only the top `s` levels of a tree matter here, so each draw runs the
/// branching process for `s` steps instead of building the whole tree;
/// [`time_shift`] on complete trees yields the same root orders.
pub fn empirical_state_vector<R: Rng + ?Sized>(
    params: &TokunagaParams,
    s: u32,
    n_samples: usize,
    rng: &mut R,
) -> Result<EmpiricalState, DynamicsError> {
    if s > MAX_SHIFTS {
        return Err(DynamicsError::TooManyShifts(s));
    }
    let seed = rng.random::<u64>();
    let limits = GenerationLimits::default();
    let moments = fold_draws(
        seed,
        n_samples,
        Moments::default,
        |m, r| {
            // Orders beyond the parameter tables have probability below
            // (1-p)^160 and are redrawn.
            let order = loop {
                if let Ok(k) = sample_order(params, &limits, r) {
                    break k;
                }
            };
            let members = process_population(params, order, s, r).expect("order was checked");
            let mut counts = vec![0u64; order as usize];
            for k in members {
                counts[k as usize - 1] += 1;
            }
            m.add(&counts);
        },
        Moments::merge,
    );
    let n = n_samples as f64;
    let mean: Vec<f64> = moments.sum.iter().map(|v| v / n).collect();
    let std_error = moments
        .sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| {
            let var = if n > 1.0 { (sq - n * m * m) / (n - 1.0) } else { 0.0 };
            (var.max(0.0) / n).sqrt()
        })
        .collect();
    Ok(EmpiricalState {
        s,
        samples: n_samples,
        mean: StateVector::new(mean),
        std_error,
    })
}

/// Residual of one equation of a nonlinear system, truncated, with the
/// bound on the dropped tail and an allowance for rounding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SystemCheck {
    pub residual: f64,
    pub tail_bound: f64,
    pub rounding_bound: f64,
}

impl SystemCheck {
    pub fn satisfied(&self) -> bool {
        self.residual <= self.tail_bound + self.rounding_bound
    }
}

/// `S_0 / S_k = Σ_{i>=1} 2^{-i} S_i / S_{k+i}` with the sum cut at
/// `i = Kmax - k`. Since `S` is non-decreasing each dropped term is below
/// `2^{-i}`, so the tail is at most `2^{-(Kmax-k)}`.
#[allow(non_snake_case)]
pub fn check_system_S(params: &TokunagaParams, kmax: u32, k: u32) -> Result<SystemCheck, DynamicsError> {
    if kmax > params.max_order() {
        return Err(DynamicsError::Kmax {
            kmax,
            max: params.max_order(),
        });
    }
    if k == 0 || 2 * k > kmax {
        return Err(DynamicsError::Index {
            index: k,
            range: format!("1..={}", kmax / 2),
        });
    }
    let lhs = params.s(0) / params.s(k);
    let terms = kmax - k;
    let rhs: f64 = (1..=terms)
        .map(|i| 0.5f64.powi(i as i32) * params.s(i) / params.s(k + i))
        .sum();
    Ok(SystemCheck {
        residual: (lhs - rhs).abs(),
        tail_bound: 0.5f64.powi(terms as i32),
        rounding_bound: (terms as f64 + 2.0) * f64::EPSILON * (lhs + rhs),
    })
}

/// `Σ_{j>=1} 2^{-j} Π_{k=j}^{n+j-1} a_k = Π_{k=0}^{n-1} a_k` for
/// `n = 1..=n_max`, with the sum cut at `j = j_max`. For `a_k` in `(0, 1]`
/// the dropped tail is at most `2^{-j_max}`.
pub fn check_system_a(a: &[f64], n_max: usize, j_max: usize) -> Result<Vec<SystemCheck>, DynamicsError> {
    let need = n_max + j_max;
    if a.len() < need {
        return Err(DynamicsError::SequenceTooShort { need, have: a.len() });
    }
    let out = (1..=n_max)
        .map(|n| {
            let rhs: f64 = a[..n].iter().product();
            let lhs: f64 = (1..=j_max)
                .map(|j| 0.5f64.powi(j as i32) * a[j..n + j].iter().product::<f64>())
                .sum();
            SystemCheck {
                residual: (lhs - rhs).abs(),
                tail_bound: 0.5f64.powi(j_max as i32),
                rounding_bound: (n + j_max + 2) as f64 * f64::EPSILON * (lhs + rhs),
            }
        })
        .collect();
    Ok(out)
}
