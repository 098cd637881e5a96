//! Structural and numerical invariants checked on random inputs.

use proptest::prelude::*;

use tokunaga::dynamics::{
    initial_state, step, step_components, time_invariance_residual, EvolutionOperator, StateVector,
};
use tokunaga::ensemble::map_draws;
use tokunaga::oracle::{check_prune_invariance, enumerate_trees, exact_measure, planted_gw_measure};
use tokunaga::stats::{fractal_dimension, horton_ratio_to_c, principal_joint_law, TokunagaMatrix};
use tokunaga::{
    branch_statistics, canonical_code, compute_orders, emit_newick, generate_recursive, parse_newick, prune,
    prune_trajectory, CriticalTokunaga, GenerationLimits, TokunagaParams, Tree, VertexId,
};

/// A plane binary tree; `swap` flips the drawing order of the children.
#[derive(Clone, Debug)]
enum Shape {
    Leaf,
    Node(Box<Shape>, Box<Shape>, bool),
}

impl Shape {
    fn newick(&self, honor_swaps: bool) -> String {
        let mut out = String::new();
        self.write(honor_swaps, &mut out);
        out.push(';');
        out
    }

    fn write(&self, honor_swaps: bool, out: &mut String) {
        match self {
            Shape::Leaf => out.push('x'),
            Shape::Node(a, b, swap) => {
                let (a, b) = if honor_swaps && *swap { (b, a) } else { (a, b) };
                out.push('(');
                a.write(honor_swaps, out);
                out.push(',');
                b.write(honor_swaps, out);
                out.push(')');
            }
        }
    }

    fn tree(&self) -> Tree {
        parse_newick(&self.newick(false)).unwrap()
    }
}

fn shapes(depth: u32, size: u32) -> impl Strategy<Value = Shape> {
    Just(Shape::Leaf).prop_recursive(depth, size, 2, |inner| {
        (inner.clone(), inner, any::<bool>()).prop_map(|(a, b, s)| Shape::Node(Box::new(a), Box::new(b), s))
    })
}

/// Order by the local rule, straight from the definition.
fn local_order(t: &Tree, v: VertexId) -> u32 {
    match *t.children(v) {
        [] => 1,
        [c] => local_order(t, c),
        [a, b] => {
            let (x, y) = (local_order(t, a), local_order(t, b));
            if x == y {
                x + 1
            } else {
                x.max(y)
            }
        }
        _ => unreachable!(),
    }
}

fn explicit_params() -> impl Strategy<Value = TokunagaParams> {
    (0.05f64..0.95, prop::collection::vec(0.0f64..3.0, 1..5))
        .prop_map(|(p, t)| TokunagaParams::explicit(p, &t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn order_equals_number_of_prunings(s in shapes(8, 80)) {
        let t = s.tree();
        prop_assert_eq!(compute_orders(&t).tree_order() as usize, prune_trajectory(&t).len() - 1);
    }

    #[test]
    fn orders_follow_the_local_rule(s in shapes(8, 80)) {
        let t = s.tree();
        let ot = compute_orders(&t);
        for v in t.vertex_ids().filter(|&v| v != t.root()) {
            prop_assert_eq!(ot.order_of(v), local_order(&t, v));
        }
    }

    #[test]
    fn pruning_shifts_branch_counts(s in shapes(8, 80)) {
        let t = s.tree();
        let before = branch_statistics(&compute_orders(&t));
        let pruned = prune(&t);
        let after = branch_statistics(&compute_orders(&pruned));
        for j in 1..=before.max_order() + 1 {
            prop_assert_eq!(after.n(j), before.n(j + 1));
        }
    }

    #[test]
    fn codes_ignore_child_order(s in shapes(8, 80)) {
        let a = parse_newick(&s.newick(false)).unwrap();
        let b = parse_newick(&s.newick(true)).unwrap();
        prop_assert_eq!(canonical_code(&a), canonical_code(&b));
    }

    #[test]
    fn two_vertices_per_leaf(s in shapes(8, 80)) {
        let t = s.tree();
        prop_assert_eq!(t.len(), 2 * t.leaf_count());
    }

    #[test]
    fn newick_round_trip(s in shapes(8, 80)) {
        let t = s.tree();
        let back = parse_newick(&emit_newick(&t).unwrap()).unwrap();
        prop_assert_eq!(canonical_code(&back), canonical_code(&t));
    }

    #[test]
    fn branches_are_consistent(s in shapes(8, 80)) {
        let t = s.tree();
        let ot = compute_orders(&t);
        let stats = branch_statistics(&ot);
        let branches = ot.branches();
        for br in &branches {
            prop_assert!(br.vertices.iter().all(|&v| ot.order_of(v) == br.order));
            prop_assert!(br.side_orders.iter().all(|&i| i < br.order));
        }
        for j in 1..=stats.max_order() {
            let count = branches.iter().filter(|b| b.order == j).count() as u64;
            prop_assert_eq!(stats.n(j), count);
            for i in 1..j {
                let sides: u64 = branches
                    .iter()
                    .filter(|b| b.order == j)
                    .map(|b| b.side_orders.iter().filter(|&&o| o == i).count() as u64)
                    .sum();
                prop_assert_eq!(stats.n_side(i, j), sides);
            }
        }
    }

    #[test]
    fn partial_sums_are_monotone(params in explicit_params()) {
        prop_assert_eq!(params.s(0), 1.0);
        for k in 1..20 {
            prop_assert!(params.t(k) >= 0.0);
            prop_assert!(params.s(k) >= params.s(k - 1));
        }
    }

    #[test]
    fn matrix_and_component_steps_agree(params in explicit_params(), seed in any::<u64>()) {
        let kmax = 12;
        let op = EvolutionOperator::new(&params, kmax).unwrap();
        let x = StateVector::new(map_draws(seed, kmax as usize, rand::Rng::random::<f64>));
        let a = step(&op, &x).unwrap();
        let b = step_components(&params, &x).unwrap();
        for k in 1..=kmax {
            prop_assert!((a.get(k) - b.get(k)).abs() <= 1e-13 * (1.0 + a.get(k).abs()), "k={}", k);
        }
    }

    #[test]
    fn critical_families_are_stationary(c in 1.0f64..4.0) {
        let params = CriticalTokunaga::new(c).unwrap().params();
        let r = time_invariance_residual(&params, 40).unwrap();
        prop_assert!(r.is_invariant(1e-8), "{:?}", r);
        prop_assert!(r.progeny_conserved);
        let pi = initial_state(0.5, 40).unwrap();
        let next = step(&EvolutionOperator::new(&params, 40).unwrap(), &pi).unwrap();
        prop_assert!((next.total() - pi.total()).abs() < 1e-9);
    }

    #[test]
    fn exact_prune_invariance(params in explicit_params()) {
        for code in enumerate_trees(2, 6, &params).unwrap().distribution.mass.keys() {
            let check = check_prune_invariance(&code.to_tree(), &params, 1e-12).unwrap();
            prop_assert!(check.passes(1e-9), "{} {:?}", code, check);
        }
    }

    #[test]
    fn measures_are_probabilities(s in shapes(6, 40), params in explicit_params()) {
        let t = s.tree();
        if compute_orders(&t).tree_order() <= params.max_order() {
            let m = exact_measure(&t, &params).unwrap();
            prop_assert!((0.0..=1.0).contains(&m));
        }
    }

    #[test]
    fn shreve_measure_is_the_gw_measure(s in shapes(6, 40)) {
        let t = s.tree();
        let params = CriticalTokunaga::new(2.0).unwrap().params();
        let (a, b) = (exact_measure(&t, &params).unwrap(), planted_gw_measure(&t).unwrap());
        prop_assert!((a - b).abs() <= 1e-15 * b);
    }

    #[test]
    fn dimension_and_horton_ratio_agree(c in 1.01f64..10.0) {
        let h = horton_ratio_to_c(2.0 * c).unwrap();
        prop_assert!((h.c - c).abs() <= 4.0 * f64::EPSILON * c);
        prop_assert_eq!(h.dimension, fractal_dimension(h.c).unwrap());
        prop_assert!(h.consistency < 1e-12);
    }

    #[test]
    fn principal_joint_law_is_a_distribution(c in 1.0f64..5.0) {
        let mut total = 0.0;
        for a in 1..200 {
            for b in 1..200 {
                let w = principal_joint_law(c, a, b);
                prop_assert!(w >= 0.0);
                total += w;
            }
        }
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn seeded_ensembles_are_reproducible(seed in any::<u64>(), params in explicit_params()) {
        let limits = GenerationLimits::with_max_vertices(20_000);
        let draw = |r: &mut tokunaga::Stream| {
            generate_recursive(&params, &limits, r).ok().map(|t| canonical_code(&t))
        };
        prop_assert_eq!(map_draws(seed, 300, draw), map_draws(seed, 300, draw));
    }

    #[test]
    fn tokunaga_estimates_are_nonnegative(seed in any::<u64>(), params in explicit_params()) {
        let limits = GenerationLimits::with_max_vertices(20_000);
        let trees: Vec<Tree> = map_draws(seed, 300, |r| generate_recursive(&params, &limits, r).ok())
            .into_iter()
            .flatten()
            .collect();
        let mut tm = TokunagaMatrix::new();
        for t in &trees {
            tm.add_tree(t);
        }
        for j in 2..=tm.max_order() {
            for i in 1..j {
                match tm.estimate(i, j) {
                    Some(v) => prop_assert!(v >= 0.0),
                    None => prop_assert_eq!(tm.branch_total(j), 0.0),
                }
            }
        }
    }
}
