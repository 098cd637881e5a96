//! Exact shape probabilities, the mass pruning sends to each shape, and
//! the Galton-Watson cross-check.

use tokunaga::oracle::{check_prune_invariance, enumerate_trees, exact_measure, planted_gw_measure};
use tokunaga::{CriticalTokunaga, TokunagaParams};

fn main() {
    let params = TokunagaParams::explicit(0.3, &[1.0, 0.5, 2.0]).unwrap();
    let e = enumerate_trees(2, 4, &params).unwrap();
    println!(
        "{} shapes, listed mass {:.6}, rest {:.6}",
        e.distribution.mass.len(),
        e.enumerated_mass(),
        e.tail
    );
    for (code, &mass) in &e.distribution.mass {
        let check = check_prune_invariance(&code.to_tree(), &params, 1e-12).unwrap();
        println!(
            "{code:24} mu = {mass:.8}  after pruning = {:.8}  certified within {:.1e}",
            0.5 * (check.conditional_lower + check.conditional_upper),
            check.certificate
        );
    }

    let shreve = CriticalTokunaga::new(2.0).unwrap().params();
    for code in enumerate_trees(3, 1, &shreve).unwrap().distribution.mass.keys().take(6) {
        let t = code.to_tree();
        println!(
            "{code:24} mu = {:.6}  GW = {:.6}",
            exact_measure(&t, &shreve).unwrap(),
            planted_gw_measure(&t).unwrap()
        );
    }
}
