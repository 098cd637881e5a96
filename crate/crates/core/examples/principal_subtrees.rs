//! Orders of the two subtrees at the first split of a critical tree.

use tokunaga::stats::{principal_joint_law, principal_subtree_tests, DEFAULT_SIGNIFICANCE};
use tokunaga::{stream, CriticalTokunaga};

fn main() {
    for c in [2.0, 3.0] {
        let model = CriticalTokunaga::new(c).unwrap();
        let r = principal_subtree_tests(&model, 5_000, &mut stream(17, 0)).unwrap();
        println!("c = {c}:");
        println!(
            "  P(1,1) = {:.4}, P(1,2) = {:.4}",
            principal_joint_law(c, 1, 1),
            principal_joint_law(c, 1, 2)
        );
        println!("  order law matches 1 + Geom(1/2): p = {:.3}", r.order_gof.p_value);
        println!(
            "  orders independent: p = {:.3} ({} at the 1% level; exact law {})",
            r.independence.p_value,
            if r.independence.rejects(DEFAULT_SIGNIFICANCE) {
                "rejected"
            } else {
                "not rejected"
            },
            if r.independent_in_theory {
                "factorizes"
            } else {
                "does not factorize"
            }
        );
        println!("  shape TV to fresh trees: {:.4}", r.shape_tv);
    }
}
