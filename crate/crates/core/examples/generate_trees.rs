//! Draws a few geometric trees three ways and prints them as Newick.

use tokunaga::sampler::generate_process;
use tokunaga::{compute_orders, emit_newick, generate_gw_planted, generate_recursive, stream};
use tokunaga::{CriticalTokunaga, GenerationLimits, TokunagaParams};

fn main() {
    let params = CriticalTokunaga::new(3.0).unwrap().params();
    let limits = GenerationLimits::with_max_vertices(200);
    let mut rng = stream(2024, 0);

    println!("recursive construction, c = 3:");
    for _ in 0..5 {
        match generate_recursive(&params, &limits, &mut rng) {
            Ok(t) => println!(
                "  order {}  {}",
                compute_orders(&t).tree_order(),
                emit_newick(&t).unwrap()
            ),
            Err(e) => println!("  skipped: {e}"),
        }
    }

    println!("branching process, p = 0.3, T = (1, 0.5, 2):");
    let generic = TokunagaParams::explicit(0.3, &[1.0, 0.5, 2.0]).unwrap();
    for _ in 0..3 {
        if let Ok((t, timeline)) = generate_process(&generic, &limits, &mut rng) {
            println!("  {} steps  {}", timeline.duration(), emit_newick(&t).unwrap());
        }
    }

    println!("critical binary Galton-Watson:");
    for _ in 0..3 {
        if let Ok(t) = generate_gw_planted(&limits, &mut rng) {
            println!("  {}", emit_newick(&t).unwrap());
        }
    }
}
