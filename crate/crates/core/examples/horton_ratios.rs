//! Horton ratios, branch lengths and fractal dimension for trees of a
//! fixed order.

use tokunaga::ensemble::fold_draws;
use tokunaga::stats::{fractal_dimension, horton_ratio_to_c, HortonAccumulator};
use tokunaga::{decorate_edge_lengths, generate_with_order, CriticalTokunaga, GenerationLimits};

fn main() {
    let c = 2.0;
    let order = 7;
    let params = CriticalTokunaga::new(c).unwrap().params();
    let limits = GenerationLimits::default();
    let acc = fold_draws(
        5,
        500,
        || HortonAccumulator::new(order).unwrap(),
        |acc, r| {
            let t = generate_with_order(&params, order, &limits, r).unwrap();
            let lengths = decorate_edge_lengths(&t, r);
            acc.add(&t, Some(&lengths)).unwrap();
        },
        |acc, part| acc.merge(part).unwrap(),
    );
    let report = acc.report().unwrap();
    for (i, r) in report.mean_tree_ratios.iter().enumerate() {
        println!("N_{} / N_{}: {r:.3}", i + 1, i + 2);
    }
    println!("R_b = {:.3} over orders {:?}", report.rb_estimate, report.window);
    println!("R_r = {:.3}", report.rr_estimate.unwrap());
    println!(
        "d   = {:.3} (exact {})",
        report.d_estimate.unwrap(),
        fractal_dimension(c).unwrap()
    );
    let back = horton_ratio_to_c(report.rb_estimate).unwrap();
    println!("c implied by R_b = 2c: {:.3}", back.c);
}
