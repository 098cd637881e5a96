use std::collections::BTreeMap;

use serde::Serialize;

use super::StatsError;
use crate::order::{branch_statistics, compute_orders, BranchStatistics};
use crate::tree::Tree;

/// Pooled side-branch and branch counts over an ensemble. The estimate
/// of `T_ij` is the ratio of sums `ΣN_ij / ΣN_j`.
///
/// Counts are stored as reals so exact (fractional) reference matrices can
/// be expressed in the same type.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TokunagaMatrix {
    pub trees: u64,
    pub branch_counts: BTreeMap<u32, f64>,
    pub side_counts: BTreeMap<(u32, u32), f64>,
}

/// One defined cell of a [`TokunagaMatrix`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TokunagaCell {
    pub i: u32,
    pub j: u32,
    pub side_count: f64,
    pub branch_count: f64,
    pub estimate: f64,
}

impl TokunagaMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(branch_counts: BTreeMap<u32, f64>, side_counts: BTreeMap<(u32, u32), f64>) -> Self {
        TokunagaMatrix {
            trees: 0,
            branch_counts,
            side_counts,
        }
    }

    pub fn add_statistics(&mut self, stats: &BranchStatistics) {
        self.trees += 1;
        for (&j, &n) in &stats.counts {
            *self.branch_counts.entry(j).or_default() += n as f64;
        }
        for (&ij, &n) in &stats.side_counts {
            *self.side_counts.entry(ij).or_default() += n as f64;
        }
    }

    pub fn add_tree(&mut self, tree: &Tree) {
        self.add_statistics(&branch_statistics(&compute_orders(tree)));
    }

    pub fn merge(&mut self, other: TokunagaMatrix) {
        self.trees += other.trees;
        for (j, n) in other.branch_counts {
            *self.branch_counts.entry(j).or_default() += n;
        }
        for (ij, n) in other.side_counts {
            *self.side_counts.entry(ij).or_default() += n;
        }
    }

    pub fn branch_total(&self, j: u32) -> f64 {
        self.branch_counts.get(&j).copied().unwrap_or(0.0)
    }

    pub fn side_total(&self, i: u32, j: u32) -> f64 {
        self.side_counts.get(&(i, j)).copied().unwrap_or(0.0)
    }

    /// `T̂_ij`, or `None` when no order-`j` branch was seen.
    pub fn estimate(&self, i: u32, j: u32) -> Option<f64> {
        if i == 0 || i >= j {
            return None;
        }
        let n = self.branch_total(j);
        (n > 0.0).then(|| self.side_total(i, j) / n)
    }

    pub fn max_order(&self) -> u32 {
        self.branch_counts
            .iter()
            .rev()
            .find(|(_, &n)| n > 0.0)
            .map_or(0, |(&j, _)| j)
    }

    /// Every defined cell, ordered by `(i, j)`.
    pub fn cells(&self) -> Vec<TokunagaCell> {
        let top = self.max_order();
        let mut out = Vec::new();
        for i in 1..top {
            for j in i + 1..=top {
                if let Some(estimate) = self.estimate(i, j) {
                    out.push(TokunagaCell {
                        i,
                        j,
                        side_count: self.side_total(i, j),
                        branch_count: self.branch_total(j),
                        estimate,
                    });
                }
            }
        }
        out
    }

    /// Pooled estimate along the diagonal `j - i = k`, with the number of
    /// branches it rests on.
    pub fn diagonal(&self, k: u32) -> Option<(f64, f64)> {
        let (mut sides, mut branches) = (0.0, 0.0);
        for j in k + 1..=self.max_order() {
            let n = self.branch_total(j);
            if n > 0.0 {
                sides += self.side_total(j - k, j);
                branches += n;
            }
        }
        (branches > 0.0).then(|| (sides / branches, branches))
    }
}

impl Serialize for TokunagaMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("TokunagaMatrix", 3)?;
        st.serialize_field("trees", &self.trees)?;
        st.serialize_field("branch_counts", &self.branch_counts)?;
        st.serialize_field("cells", &self.cells())?;
        st.end()
    }
}

/// Pools branch counts over a finite ensemble.
pub fn estimate_tokunaga(ensemble: &[Tree]) -> Result<TokunagaMatrix, StatsError> {
    if ensemble.is_empty() {
        return Err(StatsError::EmptyEnsemble);
    }
    let mut m = TokunagaMatrix::new();
    for t in ensemble {
        m.add_tree(t);
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagonalSpread {
    pub gap: u32,
    /// Cells precise enough to be compared.
    pub cells: usize,
    pub pooled: f64,
    /// Largest relative deviation of a cell from the pooled value.
    pub max_relative_deviation: f64,
    pub within_tolerance: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub holds: bool,
    pub tolerance: f64,
    /// True when no diagonal had two comparable cells.
    pub insufficient: bool,
    pub diagonals: Vec<DiagonalSpread>,
}

/// Checks that `T̂_ij` depends on `j - i` only.
///
/// A cell takes part when its rough relative standard error,
/// `sqrt((1 + T) / (T N_j))`, is at most a quarter of `tol`, so the
/// comparison is not swamped by sampling noise. Diagonals whose pooled value
/// is zero compare absolute values instead.
pub fn tokunaga_depends_only_on_gap(tm: &TokunagaMatrix, tol: f64) -> GapReport {
    let top = tm.max_order();
    let mut diagonals = Vec::new();
    for k in 1..top {
        let Some((pooled, _)) = tm.diagonal(k) else {
            continue;
        };
        let mut devs = Vec::new();
        for j in k + 1..=top {
            let Some(t) = tm.estimate(j - k, j) else {
                continue;
            };
            let n = tm.branch_total(j);
            let precise = if t > 0.0 {
                ((1.0 + t) / (t * n)).sqrt() <= tol / 4.0
            } else {
                n >= 16.0 / (tol * tol)
            };
            if precise {
                let dev = if pooled > 0.0 {
                    (t - pooled).abs() / pooled
                } else {
                    t.abs()
                };
                devs.push(dev);
            }
        }
        if devs.len() >= 2 {
            let max = devs.iter().copied().fold(0.0, f64::max);
            diagonals.push(DiagonalSpread {
                gap: k,
                cells: devs.len(),
                pooled,
                max_relative_deviation: max,
                within_tolerance: max <= tol,
            });
        }
    }
    let insufficient = diagonals.is_empty();
    GapReport {
        holds: !insufficient && diagonals.iter().all(|d| d.within_tolerance),
        tolerance: tol,
        insufficient,
        diagonals,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TokunagaFit {
    pub a: f64,
    pub c: f64,
    /// Root-mean-square residual of the log-linear fit.
    pub residual: f64,
    /// `a - (c - 1)`; zero for the time-invariant family.
    pub critical_discrepancy: f64,
    /// Gaps `k` and their pooled estimates used in the fit.
    pub used: Vec<(u32, f64)>,
    /// Gaps left out because their estimate was not positive.
    pub excluded: Vec<u32>,
}

/// Weighted least squares of `ln T̂_k` against `k - 1`, using the pooled
/// diagonal estimates. Weights are the inverse relative variances
/// `T N / (1 + T)`.
pub fn fit_tokunaga_ac(tm: &TokunagaMatrix) -> Result<TokunagaFit, StatsError> {
    let mut used = Vec::new();
    let mut excluded = Vec::new();
    let mut pts = Vec::new();
    for k in 1..tm.max_order() {
        match tm.diagonal(k) {
            Some((t, n)) if t > 0.0 => {
                used.push((k, t));
                pts.push(((k - 1) as f64, t.ln(), t * n / (1.0 + t)));
            }
            Some(_) => excluded.push(k),
            None => {}
        }
    }
    if pts.len() < 2 {
        return Err(StatsError::InsufficientDiagonals(pts.len()));
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
    let (a, c) = (intercept.exp(), slope.exp());
    Ok(TokunagaFit {
        a,
        c,
        residual,
        critical_discrepancy: a - (c - 1.0),
        used,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact counts for `T_ij = t(j - i)` with `n` branches of every order.
    fn toeplitz(top: u32, n: f64, t: impl Fn(u32) -> f64) -> TokunagaMatrix {
        let mut branches = BTreeMap::new();
        let mut sides = BTreeMap::new();
        for j in 1..=top {
            branches.insert(j, n);
            for i in 1..j {
                sides.insert((i, j), n * t(j - i));
            }
        }
        TokunagaMatrix::from_counts(branches, sides)
    }

    #[test]
    fn exact_toeplitz_input() {
        let tm = toeplitz(6, 1e6, |k| 2f64.powi(k as i32 - 1));
        assert_eq!(tm.estimate(1, 3), Some(2.0));
        assert_eq!(tm.estimate(3, 3), None);
        let r = tokunaga_depends_only_on_gap(&tm, 0.1);
        assert!(r.holds && !r.insufficient);
        let fit = fit_tokunaga_ac(&tm).unwrap();
        assert!((fit.a - 1.0).abs() < 1e-12 && (fit.c - 2.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12 && fit.critical_discrepancy.abs() < 1e-12);
    }

    #[test]
    fn other_geometric_coefficients() {
        let tm = toeplitz(6, 1e6, |k| 2.0 * 3f64.powi(k as i32 - 1));
        let fit = fit_tokunaga_ac(&tm).unwrap();
        assert!((fit.a - 2.0).abs() < 1e-10 && (fit.c - 3.0).abs() < 1e-10);
    }

    #[test]
    fn a_perturbed_cell_breaks_gap_dependence() {
        let mut tm = toeplitz(6, 1e6, |k| 2f64.powi(k as i32 - 1));
        *tm.side_counts.get_mut(&(1, 3)).unwrap() *= 2.0;
        let r = tokunaga_depends_only_on_gap(&tm, 0.1);
        assert!(!r.holds);
        assert!(r.diagonals.iter().any(|d| d.gap == 2 && !d.within_tolerance));
    }

    #[test]
    fn sparse_matrices_are_flagged() {
        let tm = toeplitz(6, 3.0, |_| 1.0);
        let r = tokunaga_depends_only_on_gap(&tm, 0.1);
        assert!(r.insufficient && !r.holds);
        assert!(estimate_tokunaga(&[]).is_err());
        let zero = toeplitz(2, 10.0, |_| 0.0);
        assert_eq!(fit_tokunaga_ac(&zero), Err(StatsError::InsufficientDiagonals(0)));
    }

    #[test]
    fn skeletons_have_zero_side_branching() {
        let trees: Vec<Tree> = (1..8).map(Tree::skeleton).collect();
        let tm = estimate_tokunaga(&trees).unwrap();
        assert!(tm.cells().iter().all(|c| c.estimate == 0.0));
        assert_eq!(tm.branch_total(1), (1..8).map(|k| 2f64.powi(k - 1)).sum::<f64>());
    }
}
