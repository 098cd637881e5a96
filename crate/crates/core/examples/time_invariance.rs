//! Evolves the order distribution in time and checks which coefficient
//! families leave it unchanged.

use tokunaga::dynamics::{empirical_state_vector, initial_state, step, time_invariance_residual, EvolutionOperator};
use tokunaga::{stream, CriticalTokunaga, TokunagaParams};

fn main() {
    for c in [1.0, 2.0, 3.0] {
        let r = time_invariance_residual(&CriticalTokunaga::new(c).unwrap().params(), 40).unwrap();
        println!(
            "critical c = {c}: residual {:.1e} (tail bound {:.1e})",
            r.residual, r.tail_bound
        );
    }
    let off = TokunagaParams::geometric(0.5, 2.0, 2.0).unwrap();
    let r = time_invariance_residual(&off, 40).unwrap();
    println!("a = 2, c = 2: residual {:.3}", r.residual);

    let unit = TokunagaParams::geometric(0.5, 1.0, 1.0).unwrap();
    let op = EvolutionOperator::new(&unit, 30).unwrap();
    let mut x = initial_state(0.5, 30).unwrap();
    println!("T_k = 1: x(s) for orders 1..4");
    for s in 0..=3 {
        let head: Vec<String> = (1..=4).map(|k| format!("{:.4}", x.get(k))).collect();
        println!("  s={s}: {}", head.join(" "));
        x = step(&op, &x).unwrap();
    }
    let e = empirical_state_vector(&unit, 3, 20_000, &mut stream(9, 0)).unwrap();
    let sim: Vec<String> = (1..=4)
        .map(|k| format!("{:.4}±{:.4}", e.mean.get(k), e.std_error[k as usize - 1]))
        .collect();
    println!("  simulated s=3: {}", sim.join(" "));
}
