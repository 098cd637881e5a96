use std::f64::consts::LN_2;

use serde::Serialize;

use super::StatsError;
use crate::order::{branch_statistics, compute_orders};
use crate::sampler::EdgeLengths;
use crate::tree::Tree;

/// Streaming accumulator for trees that share one order `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct HortonAccumulator {
    order: u32,
    trees: u64,
    /// Index `i - 1`: summed `N_i`.
    count_sums: Vec<f64>,
    /// Index `i - 1`: summed per-tree ratios `N_i / N_{i+1}`.
    ratio_sums: Vec<f64>,
    /// Index `i - 1`: summed lengths of order-`i` edges.
    length_sums: Vec<f64>,
    with_lengths: Option<bool>,
}

impl HortonAccumulator {
    pub fn new(order: u32) -> Result<Self, StatsError> {
        if order < 4 {
            return Err(StatsError::OrderTooLow(order));
        }
        let k = order as usize;
        Ok(HortonAccumulator {
            order,
            trees: 0,
            count_sums: vec![0.0; k],
            ratio_sums: vec![0.0; k - 1],
            length_sums: vec![0.0; k],
            with_lengths: None,
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn trees(&self) -> u64 {
        self.trees
    }

    /// Adds one tree. Either every tree or none carries edge lengths.
    pub fn add(&mut self, tree: &Tree, lengths: Option<&EdgeLengths>) -> Result<(), StatsError> {
        let ot = compute_orders(tree);
        let found = ot.tree_order();
        if found != self.order {
            return Err(StatsError::MixedOrders {
                expected: self.order,
                found,
            });
        }
        match self.with_lengths {
            None => self.with_lengths = Some(lengths.is_some()),
            Some(w) if w != lengths.is_some() => {
                return Err(StatsError::LengthMismatch(usize::from(w), 1));
            }
            _ => {}
        }
        let stats = branch_statistics(&ot);
        let k = self.order as usize;
        for i in 1..=k {
            self.count_sums[i - 1] += stats.n(i as u32) as f64;
        }
        for i in 1..k {
            self.ratio_sums[i - 1] += stats.n(i as u32) as f64 / stats.n(i as u32 + 1) as f64;
        }
        if let Some(l) = lengths {
            for v in tree.vertex_ids().filter(|&v| v != tree.root()) {
                self.length_sums[ot.order_of(v) as usize - 1] += l.get(v);
            }
        }
        self.trees += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: HortonAccumulator) -> Result<(), StatsError> {
        if other.order != self.order {
            return Err(StatsError::MixedOrders {
                expected: self.order,
                found: other.order,
            });
        }
        if other.trees == 0 {
            return Ok(());
        }
        match (self.with_lengths, other.with_lengths) {
            (Some(a), Some(b)) if a != b => return Err(StatsError::LengthMismatch(0, 1)),
            (None, w) => self.with_lengths = w,
            _ => {}
        }
        self.trees += other.trees;
        for (a, b) in self.count_sums.iter_mut().zip(other.count_sums) {
            *a += b;
        }
        for (a, b) in self.ratio_sums.iter_mut().zip(other.ratio_sums) {
            *a += b;
        }
        for (a, b) in self.length_sums.iter_mut().zip(other.length_sums) {
            *a += b;
        }
        Ok(())
    }

    pub fn report(&self) -> Result<HortonReport, StatsError> {
        if self.trees == 0 {
            return Err(StatsError::EmptyEnsemble);
        }
        let n = self.trees as f64;
        let k = self.order as usize;
        let mean_counts: Vec<f64> = self.count_sums.iter().map(|s| s / n).collect();
        let ratios: Vec<f64> = (0..k - 1).map(|i| mean_counts[i] / mean_counts[i + 1]).collect();
        let mean_tree_ratios: Vec<f64> = self.ratio_sums.iter().map(|s| s / n).collect();
        // Orders 1, 2 and K-2 and above are excluded as boundary orders.
        let window = if k >= 6 {
            (3, self.order - 3)
        } else {
            (1, self.order - 1)
        };
        let in_window = &mean_tree_ratios[window.0 as usize - 1..window.1 as usize];
        let rb_estimate = in_window.iter().sum::<f64>() / in_window.len() as f64;

        let (mut mean_branch_lengths, mut rr_estimate, mut d_estimate) = (None, None, None);
        if self.with_lengths == Some(true) {
            let r: Vec<f64> = (0..k).map(|i| self.length_sums[i] / self.count_sums[i]).collect();
            // Weighted log-linear fit over orders 1..K-1, weights N_i.
            let pts: Vec<(f64, f64, f64)> = (0..k - 1)
                .map(|i| ((i + 1) as f64, r[i].ln(), self.count_sums[i]))
                .collect();
            let rr = weighted_slope(&pts).exp();
            rr_estimate = Some(rr);
            d_estimate = Some(rb_estimate.ln() / rr.ln());
            mean_branch_lengths = Some(r);
        }
        Ok(HortonReport {
            order: self.order,
            trees: self.trees,
            mean_counts,
            ratios,
            mean_tree_ratios,
            window,
            rb_estimate,
            mean_branch_lengths,
            rr_estimate,
            d_estimate,
        })
    }
}

fn weighted_slope(pts: &[(f64, f64, f64)]) -> f64 {
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Branch-count and branch-length scaling of an ensemble of order-`K`
/// trees. Index `i - 1` of each vector refers to order `i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HortonReport {
    pub order: u32,
    pub trees: u64,
    /// Mean `N_i` per tree.
    pub mean_counts: Vec<f64>,
    /// Ratios of mean counts, `mean N_i / mean N_{i+1}`.
    pub ratios: Vec<f64>,
    /// Means over trees of the per-tree ratios `N_i / N_{i+1}`.
    pub mean_tree_ratios: Vec<f64>,
    /// Orders `i` (inclusive) averaged into `rb_estimate`.
    pub window: (u32, u32),
    pub rb_estimate: f64,
    /// Mean total length of an order-`i` branch.
    pub mean_branch_lengths: Option<Vec<f64>>,
    /// Length ratio from a log-linear fit of mean branch lengths.
    pub rr_estimate: Option<f64>,
    /// `ln R_b / ln R_r`.
    pub d_estimate: Option<f64>,
}

/// Horton report for a stored ensemble. `lengths`, when given, pairs one
/// edge-length record with each tree.
pub fn horton_report(ensemble: &[Tree], lengths: Option<&[EdgeLengths]>) -> Result<HortonReport, StatsError> {
    let first = ensemble.first().ok_or(StatsError::EmptyEnsemble)?;
    if let Some(l) = lengths {
        if l.len() != ensemble.len() {
            return Err(StatsError::LengthMismatch(l.len(), ensemble.len()));
        }
    }
    let mut acc = HortonAccumulator::new(compute_orders(first).tree_order())?;
    for (i, t) in ensemble.iter().enumerate() {
        acc.add(t, lengths.map(|l| &l[i]))?;
    }
    acc.report()
}

/// `d_c = ln(2c) / ln(c) = 1 + ln 2 / ln c`.
pub fn fractal_dimension(c: f64) -> Result<f64, StatsError> {
    if !(c > 1.0 && c.is_finite()) {
        return Err(StatsError::Dimension(c));
    }
    Ok(1.0 + LN_2 / c.ln())
}

/// Coefficient ratio implied by a Horton ratio through `R_b = 2c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HortonToC {
    pub c: f64,
    pub dimension: f64,
    /// `|log2 R_b - d / (d - 1)|`, zero up to rounding.
    pub consistency: f64,
}

pub fn horton_ratio_to_c(rb: f64) -> Result<HortonToC, StatsError> {
    if !(rb > 2.0 && rb.is_finite()) {
        return Err(StatsError::HortonRatio(rb));
    }
    let c = rb / 2.0;
    let d = fractal_dimension(c)?;
    Ok(HortonToC {
        c,
        dimension: d,
        consistency: (rb.log2() - d / (d - 1.0)).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::decorate_edge_lengths;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dimensions() {
        assert_eq!(fractal_dimension(2.0).unwrap(), 2.0);
        assert!((fractal_dimension(4.0).unwrap() - 1.5).abs() < 1e-15);
        for k in 1..=5 {
            let c = 2f64.powf(1.0 / k as f64);
            let d = fractal_dimension(c).unwrap();
            assert!((d - (1.0 + k as f64)).abs() < 1e-12, "k={k} d={d}");
        }
        assert!(fractal_dimension(1.0).is_err());
        assert!(fractal_dimension(0.5).is_err());
    }

    #[test]
    fn ratio_to_c() {
        assert_eq!(horton_ratio_to_c(4.0).unwrap().c, 2.0);
        let h = horton_ratio_to_c(6.0).unwrap();
        assert_eq!(h.c, 3.0);
        assert!((h.dimension - 1.6309297535714575).abs() < 1e-12);
        assert!(h.consistency < 1e-14);
        for rb in [2.8, 6.0] {
            let c = horton_ratio_to_c(rb).unwrap().c;
            assert!((1.4..=3.0).contains(&c));
        }
        assert!(horton_ratio_to_c(2.0).is_err());
    }

    #[test]
    fn skeleton_ratios_are_exactly_two() {
        let trees = vec![Tree::skeleton(10); 3];
        let r = horton_report(&trees, None).unwrap();
        assert!(r.ratios.iter().all(|&x| x == 2.0));
        assert!(r.mean_tree_ratios.iter().all(|&x| x == 2.0));
        assert_eq!(r.rb_estimate, 2.0);
        assert_eq!(r.window, (3, 7));
        assert!(r.rr_estimate.is_none());
    }

    #[test]
    fn preconditions() {
        assert_eq!(horton_report(&[], None), Err(StatsError::EmptyEnsemble));
        assert_eq!(
            horton_report(&[Tree::skeleton(3)], None),
            Err(StatsError::OrderTooLow(3))
        );
        assert!(matches!(
            horton_report(&[Tree::skeleton(5), Tree::skeleton(6)], None),
            Err(StatsError::MixedOrders { expected: 5, found: 6 })
        ));
    }

    #[test]
    fn skeleton_lengths_are_single_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trees = vec![Tree::skeleton(8); 4];
        let lengths: Vec<_> = trees.iter().map(|t| decorate_edge_lengths(t, &mut rng)).collect();
        let r = horton_report(&trees, Some(&lengths)).unwrap();
        // Every skeleton branch is one edge, so R_r is close to 1.
        let rr = r.rr_estimate.unwrap();
        assert!((rr - 1.0).abs() < 0.1, "R_r {rr}");
    }
}
