//! Prunes a tree until nothing is left, printing every step.

use tokunaga::{branch_statistics, compute_orders, emit_newick, parse_newick, prune_trajectory};

fn main() {
    let tree = parse_newick("((((a,b),c),(d,e)),((f,g),(h,(i,j))));").unwrap();
    let ot = compute_orders(&tree);
    let stats = branch_statistics(&ot);
    println!("order {}", ot.tree_order());
    for j in 1..=stats.max_order() {
        let sides: Vec<String> = (1..j).map(|i| format!("N({i},{j}) = {}", stats.n_side(i, j))).collect();
        println!("  N_{j} = {}  {}", stats.n(j), sides.join("  "));
    }
    for (step, t) in prune_trajectory(&tree).iter().enumerate() {
        let text = emit_newick(t).unwrap_or_else(|_| "(empty)".into());
        println!("step {step}: {text}");
    }
}
