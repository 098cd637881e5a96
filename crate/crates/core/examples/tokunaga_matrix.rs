//! Estimates the Tokunaga matrix of a simulated ensemble and fits
//! `T_k = a c^(k-1)` to it.

use tokunaga::ensemble::fold_draws;
use tokunaga::stats::{fit_tokunaga_ac, tokunaga_depends_only_on_gap, TokunagaMatrix};
use tokunaga::{generate_recursive, CriticalTokunaga, GenerationLimits};

fn main() {
    let params = CriticalTokunaga::new(2.0).unwrap().params();
    let limits = GenerationLimits::with_max_vertices(1_000_000);
    let tm = fold_draws(
        1,
        20_000,
        TokunagaMatrix::new,
        |tm, r| {
            if let Ok(t) = generate_recursive(&params, &limits, r) {
                tm.add_tree(&t);
            }
        },
        |tm, part| tm.merge(part),
    );
    println!("T(i, j) from {} trees:", tm.trees);
    for i in 1..6 {
        let row: Vec<String> = (2..=7)
            .map(|j| {
                tm.estimate(i, j)
                    .filter(|_| i < j)
                    .map_or("      ".into(), |v| format!("{v:6.3}"))
            })
            .collect();
        println!("  i={i} {}", row.join(" "));
    }
    let gap = tokunaga_depends_only_on_gap(&tm, 0.1);
    println!("depends only on j - i: {}", gap.holds);
    let fit = fit_tokunaga_ac(&tm).unwrap();
    println!("fit: a = {:.3}, c = {:.3} (critical when a = c - 1)", fit.a, fit.c);
}
