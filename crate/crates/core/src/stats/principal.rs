use rand::Rng;
use serde::Serialize;

use super::hypothesis::{chi_square_gof, chi_square_independence, ChiSquareTest};
use super::shapes::{shape_tv_distance, ShapeDistribution, DEFAULT_MAX_SHAPE_LEAVES};
use super::StatsError;
use crate::ensemble::{fold_draws, Stream};
use crate::order::{compute_orders, principal_subtrees};
use crate::params::{CriticalTokunaga, TokunagaParams};
use crate::sampler::{generate_recursive, generate_with_order, sample_order, GenerationError, GenerationLimits};

/// Vertex budget per tree in the principal-subtree tests. Larger trees
/// keep their top split (which the generator draws first) but lose their
/// shape.
pub const PRINCIPAL_MAX_VERTICES: usize = 200_000;

/// Orders at or above this share one row and column of the joint table.
const JOINT_CAP: u32 = 10;

const SHAPE_TOP_K: usize = 20;

/// Probability that the principal subtrees of a critical Tokunaga tree,
/// conditioned on order above one and listed in uniformly random order,
/// have orders `(a, b)`.
pub fn principal_joint_law(c: f64, a: u32, b: u32) -> f64 {
    if a == 0 || b == 0 {
        return 0.0;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == lo {
        (2.0 * c).powi(-(hi as i32))
    } else {
        0.5f64.powi(hi as i32) * (c - 1.0) * c.powi(-(lo as i32))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrincipalReport {
    pub c: f64,
    pub samples: usize,
    /// Draws whose tree exceeded the vertex budget; their orders come from
    /// the generator's top split and their shapes count as unresolved.
    pub censored: usize,
    /// `ord(T_a)` against `1 + Geom(1/2)`.
    pub order_gof: ChiSquareTest,
    /// TV over the top 20 shapes between `T_a` and fresh trees.
    pub shape_tv: f64,
    /// Independence of `(ord T_a, ord T_b)`.
    pub independence: ChiSquareTest,
    /// TV between the empirical joint order law and the exact one, with
    /// orders from `JOINT_CAP` up pooled.
    pub joint_tv: f64,
    /// Whether the exact law factorizes, which holds only at `c = 2`.
    pub independent_in_theory: bool,
}

#[derive(Default)]
struct Acc {
    orders: Vec<(u32, u32)>,
    censored: usize,
    shapes_a: ShapeDistribution,
    shapes_fresh: ShapeDistribution,
}

pub fn principal_subtree_tests<R: Rng + ?Sized>(
    params: &CriticalTokunaga,
    n_samples: usize,
    rng: &mut R,
) -> Result<PrincipalReport, StatsError> {
    principal_subtree_tests_with(
        params,
        n_samples,
        &GenerationLimits::with_max_vertices(PRINCIPAL_MAX_VERTICES),
        rng,
    )
}

pub fn principal_subtree_tests_with<R: Rng + ?Sized>(
    params: &CriticalTokunaga,
    n_samples: usize,
    limits: &GenerationLimits,
    rng: &mut R,
) -> Result<PrincipalReport, StatsError> {
    if n_samples == 0 {
        return Err(StatsError::EmptyEnsemble);
    }
    let c = params.c;
    let tp = params.params();
    let seed = rng.random::<u64>();
    let acc = fold_draws(
        seed,
        n_samples,
        Acc::default,
        |acc, r| draw(&tp, limits, acc, r),
        |acc, part| {
            acc.orders.extend(part.orders);
            acc.censored += part.censored;
            acc.shapes_a.merge(part.shapes_a);
            acc.shapes_fresh.merge(part.shapes_fresh);
        },
    );

    let n = acc.orders.len() as f64;
    let top = acc.orders.iter().map(|o| o.0).max().unwrap_or(1) as usize;
    let mut observed = vec![0.0; top];
    for &(a, _) in &acc.orders {
        observed[a as usize - 1] += 1.0;
    }
    let mut expected: Vec<f64> = (1..=top).map(|k| n * 0.5f64.powi(k as i32)).collect();
    expected[top - 1] += n * 0.5f64.powi(top as i32);
    let order_gof = chi_square_gof(&observed, &expected)?;

    let cap = JOINT_CAP as usize;
    let mut table = vec![vec![0.0; cap]; cap];
    for &(a, b) in &acc.orders {
        table[a.min(JOINT_CAP) as usize - 1][b.min(JOINT_CAP) as usize - 1] += 1.0;
    }
    let independence = chi_square_independence(&table)?;

    let (mut diff, mut inside_emp, mut inside_exact) = (0.0, 0.0, 0.0);
    for a in 1..JOINT_CAP {
        for b in 1..JOINT_CAP {
            let emp = table[a as usize - 1][b as usize - 1] / n;
            let exact = principal_joint_law(c, a, b);
            diff += (emp - exact).abs();
            inside_emp += emp;
            inside_exact += exact;
        }
    }
    let joint_tv = 0.5 * (diff + ((1.0 - inside_emp) - (1.0 - inside_exact)).abs());

    Ok(PrincipalReport {
        c,
        samples: n_samples,
        censored: acc.censored,
        order_gof,
        shape_tv: shape_tv_distance(&acc.shapes_a, &acc.shapes_fresh, SHAPE_TOP_K),
        independence,
        joint_tv,
        independent_in_theory: c == 2.0,
    })
}

/// One conditioned tree split into its principal subtrees, plus one fresh
/// tree for the shape comparison.
fn draw(tp: &TokunagaParams, limits: &GenerationLimits, acc: &mut Acc, rng: &mut Stream) {
    let order = loop {
        match sample_order(tp, limits, rng) {
            Ok(k) if k > 1 => break k,
            _ => {}
        }
    };
    match generate_with_order(tp, order, limits, rng) {
        Ok(tree) => {
            let (ta, tb) = principal_subtrees(&tree, rng).expect("order above one");
            let ka = compute_orders(&ta).tree_order();
            let kb = compute_orders(&tb).tree_order();
            acc.orders.push((ka, kb));
            acc.shapes_a.add_tree(&ta, DEFAULT_MAX_SHAPE_LEAVES);
        }
        Err(GenerationError::BudgetExceeded {
            top_split: Some((x, y)),
            ..
        }) => {
            let pair = if rng.random::<bool>() { (y, x) } else { (x, y) };
            acc.orders.push(pair);
            acc.censored += 1;
            acc.shapes_a.add_unresolved(1.0);
        }
        Err(e) => unreachable!("orders were checked before generation: {e}"),
    }
    match generate_recursive(tp, limits, rng) {
        Ok(tree) => acc.shapes_fresh.add_tree(&tree, DEFAULT_MAX_SHAPE_LEAVES),
        Err(_) => acc.shapes_fresh.add_unresolved(1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn joint_law_sums_to_one_with_geometric_marginals() {
        for c in [1.0, 1.5, 2.0, 3.0] {
            let mut total = 0.0;
            for a in 1..80 {
                let marginal: f64 = (1..200).map(|b| principal_joint_law(c, a, b)).sum();
                assert!((marginal - 0.5f64.powi(a as i32)).abs() < 1e-12, "c={c} a={a}");
                total += marginal;
            }
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn joint_law_factorizes_only_at_two() {
        let prod = |a: u32, b: u32| 0.5f64.powi((a + b) as i32);
        for a in 1..6 {
            for b in 1..6 {
                assert!((principal_joint_law(2.0, a, b) - prod(a, b)).abs() < 1e-15);
            }
        }
        assert!((principal_joint_law(3.0, 1, 1) - prod(1, 1)).abs() > 0.05);
    }

    #[test]
    fn small_run_at_two() {
        let mut rng = Stream::seed_from_u64(3);
        let r = principal_subtree_tests(&CriticalTokunaga::new(2.0).unwrap(), 4_000, &mut rng).unwrap();
        assert!(!r.order_gof.rejects(0.001), "{r:?}");
        assert!(!r.independence.rejects(0.001), "{r:?}");
        assert!(r.joint_tv < 0.05 && r.shape_tv < 0.05, "{r:?}");
        assert!(r.independent_in_theory);
    }
}
