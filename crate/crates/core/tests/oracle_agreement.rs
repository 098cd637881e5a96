//! Monte Carlo checks of the samplers against exact laws and against each
//! other.

use rand::Rng;

use tokunaga::ensemble::{fold_draws, map_draws};
use tokunaga::oracle::{enumerate_trees, exact_measure};
use tokunaga::stats::{
    geometric_order_gof, shape_tv_distance, ShapeDistribution, DEFAULT_MAX_SHAPE_LEAVES, DEFAULT_SIGNIFICANCE,
};
use tokunaga::{
    compute_orders, descendant_subtree, generate_process, generate_recursive, generate_with_order, prune,
    CriticalTokunaga, GenerationError, GenerationLimits, TokunagaParams,
};

fn generic() -> TokunagaParams {
    TokunagaParams::explicit(0.3, &[1.0, 0.5, 2.0]).unwrap()
}

fn limits() -> GenerationLimits {
    GenerationLimits::with_max_vertices(100_000)
}

fn shapes<F>(seed: u64, n: usize, draw: F) -> ShapeDistribution
where
    F: Fn(&mut tokunaga::Stream) -> Option<tokunaga::Tree> + Sync,
{
    fold_draws(
        seed,
        n,
        ShapeDistribution::new,
        |d, r| match draw(r) {
            Some(t) => d.add_tree(&t, DEFAULT_MAX_SHAPE_LEAVES),
            None => d.add_unresolved(1.0),
        },
        |d, part| d.merge(part),
    )
}

#[test]
fn root_orders_are_geometric() {
    for (params, seed) in [(CriticalTokunaga::new(2.0).unwrap().params(), 100), (generic(), 2)] {
        let orders = map_draws(seed, 100_000, |r| match generate_recursive(&params, &limits(), r) {
            Ok(t) => compute_orders(&t).tree_order(),
            Err(GenerationError::BudgetExceeded { order, .. }) => order,
            Err(e) => panic!("{e}"),
        });
        let test = geometric_order_gof(&orders, params.p()).unwrap();
        assert!(!test.rejects(DEFAULT_SIGNIFICANCE), "{test:?}");
    }
}

#[test]
fn side_branch_counts_are_geometric_with_mean_tokunaga() {
    for c in [1.5, 2.0, 3.0] {
        let params = CriticalTokunaga::new(c).unwrap().params();
        for k in 2..=4u32 {
            // Per order-k branch: number of side branches, and how many of
            // them have order k - 1.
            let draws = map_draws(10 * k as u64, 20_000, |r| {
                let t = generate_with_order(&params, k, &limits(), r).unwrap();
                let top = compute_orders(&t)
                    .branches()
                    .into_iter()
                    .find(|b| b.order == k)
                    .unwrap();
                let next = top.side_orders.iter().filter(|&&o| o == k - 1).count();
                (top.side_orders.len() as u32 + 1, next as f64)
            });
            let counts: Vec<u32> = draws.iter().map(|d| d.0).collect();
            let test = geometric_order_gof(&counts, 1.0 / params.s(k - 1)).unwrap();
            assert!(!test.rejects(DEFAULT_SIGNIFICANCE), "c={c} k={k} {test:?}");

            let n = draws.len() as f64;
            let mean = draws.iter().map(|d| d.1).sum::<f64>() / n;
            let var = draws.iter().map(|d| (d.1 - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let z = (mean - params.t(1)).abs() / (var / n).sqrt();
            assert!(z < 3.0, "c={c} k={k}: mean {mean}, z {z}");
        }
    }
}

#[test]
fn process_and_recursive_generators_agree() {
    for params in [CriticalTokunaga::new(2.0).unwrap().params(), generic()] {
        let a = shapes(5, 100_000, |r| generate_recursive(&params, &limits(), r).ok());
        let b = shapes(6, 100_000, |r| {
            generate_process(&params, &limits(), r).ok().map(|(t, _)| t)
        });
        let tv = shape_tv_distance(&a, &b, 20);
        assert!(tv < 0.01, "TV {tv}");
    }
}

#[test]
fn pruning_preserves_the_shape_law() {
    for params in [generic(), TokunagaParams::explicit(0.7, &[0.2, 0.2, 0.2]).unwrap()] {
        let pruned = shapes(7, 100_000, |r| {
            // Redraw until the pruned tree is not empty.
            loop {
                match generate_recursive(&params, &limits(), r) {
                    Ok(t) => {
                        let p = prune(&t);
                        if p.progenitor().is_some() {
                            return Some(p);
                        }
                    }
                    Err(_) => return None,
                }
            }
        });
        let fresh = shapes(8, 100_000, |r| generate_recursive(&params, &limits(), r).ok());
        let tv = shape_tv_distance(&pruned, &fresh, 20);
        assert!(tv < 0.01, "TV {tv}");
    }
}

#[test]
fn descendant_subtrees_are_conditioned_copies() {
    let params = CriticalTokunaga::new(3.0).unwrap().params();
    let kappa = 2;
    let picked = shapes(9, 50_000, |r| {
        let t = generate_with_order(&params, 5, &limits(), r).ok()?;
        let ot = compute_orders(&t);
        let tops: Vec<_> = ot
            .branches()
            .into_iter()
            .filter(|b| b.order == kappa)
            .map(|b| b.vertices[0])
            .collect();
        let v = tops[r.random_range(0..tops.len())];
        Some(descendant_subtree(&ot, v).unwrap())
    });
    let fresh = shapes(10, 50_000, |r| generate_with_order(&params, kappa, &limits(), r).ok());
    let tv = shape_tv_distance(&picked, &fresh, 20);
    assert!(tv < 0.015, "TV {tv}");
}

#[test]
fn generic_frequencies_match_exact_masses() {
    let params = generic();
    let n = 200_000;
    let observed = shapes(11, n, |r| generate_recursive(&params, &limits(), r).ok());
    let e = enumerate_trees(3, 3, &params).unwrap();
    let mut checked = 0;
    for code in e.distribution.mass.keys() {
        let mu = exact_measure(&code.to_tree(), &params).unwrap();
        if mu < 5e-3 {
            continue;
        }
        let freq = observed.mass_of(code) / n as f64;
        let z = (freq - mu).abs() / (mu * (1.0 - mu) / n as f64).sqrt();
        assert!(z < 4.0, "{code}: {freq} vs {mu}");
        checked += 1;
    }
    assert!(checked >= 5);
}
