use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::StatsError;

/// Significance level used unless a caller asks for another.
pub const DEFAULT_SIGNIFICANCE: f64 = 0.01;

/// Cells whose expected count falls below this are pooled with neighbours.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    /// Cells after pooling.
    pub cells: usize,
    pub samples: f64,
    /// Cramér's V for independence tests, `sqrt(χ² / (n df))` otherwise.
    pub effect_size: f64,
}

impl ChiSquareTest {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }

    fn from_statistic(statistic: f64, df: u32, cells: usize, samples: f64, effect_size: f64) -> Self {
        let p_value = ChiSquared::new(df as f64).expect("df is positive").sf(statistic);
        ChiSquareTest {
            statistic,
            df,
            p_value,
            cells,
            samples,
            effect_size,
        }
    }
}

/// Merges consecutive cells left to right until each pooled cell expects
/// at least five observations; a short remainder joins the last cell.
fn pool(observed: &[f64], expected: &[f64]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&x, &y) in observed.iter().zip(expected) {
        o += x;
        e += y;
        if e >= MIN_EXPECTED {
            out.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match out.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => out.push((o, e)),
        }
    }
    out
}

/// Pearson goodness of fit of observed counts against expected counts
/// with the same total. No parameters are treated as fitted.
pub fn chi_square_gof(observed: &[f64], expected: &[f64]) -> Result<ChiSquareTest, StatsError> {
    if observed.len() != expected.len() {
        return Err(StatsError::CellMismatch(observed.len(), expected.len()));
    }
    let cells = pool(observed, expected);
    if cells.len() < 2 || cells.iter().any(|c| c.1 <= 0.0) {
        return Err(StatsError::DegenerateTest);
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let n: f64 = cells.iter().map(|c| c.0).sum();
    let df = (cells.len() - 1) as u32;
    let effect = (stat / (n * df as f64)).sqrt();
    Ok(ChiSquareTest::from_statistic(stat, df, cells.len(), n, effect))
}

/// Tests a sample of orders against `1 + Geom(p)`. Cell `k` counts order
/// `k`; the last cell also takes the tail beyond the largest observed order.
pub fn geometric_order_gof(orders: &[u32], p: f64) -> Result<ChiSquareTest, StatsError> {
    let top = orders.iter().copied().max().unwrap_or(0) as usize;
    if top == 0 {
        return Err(StatsError::DegenerateTest);
    }
    let n = orders.len() as f64;
    let mut observed = vec![0.0; top];
    for &k in orders {
        if k >= 1 {
            observed[k as usize - 1] += 1.0;
        }
    }
    let mut expected: Vec<f64> = (0..top).map(|i| n * p * (1.0 - p).powi(i as i32)).collect();
    expected[top - 1] += n * (1.0 - p).powi(top as i32);
    chi_square_gof(&observed, &expected)
}

/// Pearson independence test for a contingency table. Rows or columns
/// with expected counts below five are merged into a neighbour, sparsest
/// first, until every expected count reaches five.
pub fn chi_square_independence(table: &[Vec<f64>]) -> Result<ChiSquareTest, StatsError> {
    let mut t: Vec<Vec<f64>> = table.to_vec();
    let width = t.first().map_or(0, Vec::len);
    if t.iter().any(|r| r.len() != width) {
        return Err(StatsError::CellMismatch(width, 0));
    }
    // Drop empty rows and columns first.
    t.retain(|r| r.iter().sum::<f64>() > 0.0);
    let keep: Vec<usize> = (0..width)
        .filter(|&j| t.iter().map(|r| r[j]).sum::<f64>() > 0.0)
        .collect();
    for r in &mut t {
        *r = keep.iter().map(|&j| r[j]).collect();
    }
    loop {
        let (rows, cols) = (t.len(), t.first().map_or(0, Vec::len));
        if rows < 2 || cols < 2 {
            return Err(StatsError::DegenerateTest);
        }
        let n: f64 = t.iter().flatten().sum();
        let rs: Vec<f64> = t.iter().map(|r| r.iter().sum()).collect();
        let cs: Vec<f64> = (0..cols).map(|j| t.iter().map(|r| r[j]).sum()).collect();
        let min_row = (0..rows).min_by(|&a, &b| rs[a].total_cmp(&rs[b])).unwrap();
        let min_col = (0..cols).min_by(|&a, &b| cs[a].total_cmp(&cs[b])).unwrap();
        let smallest_expected = rs[min_row] * cs[min_col] / n;
        if smallest_expected >= MIN_EXPECTED {
            let mut stat = 0.0;
            for (i, r) in t.iter().enumerate() {
                for (j, &o) in r.iter().enumerate() {
                    let e = rs[i] * cs[j] / n;
                    stat += (o - e).powi(2) / e;
                }
            }
            let df = ((rows - 1) * (cols - 1)) as u32;
            let v = (stat / (n * (rows.min(cols) - 1) as f64)).sqrt();
            return Ok(ChiSquareTest::from_statistic(stat, df, rows * cols, n, v));
        }
        // The smallest expected count sits at the sparsest row and column;
        // merge whichever of the two margins is lighter into a neighbour.
        if rs[min_row] <= cs[min_col] {
            let row = t.remove(min_row);
            let into = min_row.saturating_sub(1);
            for (a, b) in t[into].iter_mut().zip(row) {
                *a += b;
            }
        } else {
            let into = min_col.saturating_sub(1);
            for r in &mut t {
                let x = r.remove(min_col);
                r[into] += x;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_fit_has_p_value_one() {
        let t = chi_square_gof(&[50.0, 30.0, 20.0], &[50.0, 30.0, 20.0]).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert!((t.p_value - 1.0).abs() < 1e-12);
        assert_eq!(t.df, 2);
    }

    #[test]
    fn known_statistic() {
        // (10-20)^2/20 + (30-20)^2/20 = 10 on one degree of freedom.
        let t = chi_square_gof(&[10.0, 30.0], &[20.0, 20.0]).unwrap();
        assert!((t.statistic - 10.0).abs() < 1e-12);
        assert!((t.p_value - 0.001565402258).abs() < 1e-9);
        assert!(t.rejects(0.01));
    }

    #[test]
    fn sparse_cells_are_pooled() {
        let t = chi_square_gof(&[40.0, 40.0, 3.0, 1.0, 0.0], &[40.0, 40.0, 2.0, 1.5, 0.5]).unwrap();
        // The three sparse cells expect 4 together and join the second.
        assert_eq!(t.cells, 2);
        assert!(chi_square_gof(&[1.0], &[1.0]).is_err());
        assert!(chi_square_gof(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn geometric_orders() {
        // Exactly proportional sample of 1 + Geom(1/2) with a tail.
        let mut orders = Vec::new();
        for (k, n) in [(1, 512), (2, 256), (3, 128), (4, 64), (5, 32), (6, 16), (7, 16)] {
            orders.extend(std::iter::repeat_n(k, n));
        }
        let t = geometric_order_gof(&orders, 0.5).unwrap();
        assert!(t.statistic < 1e-9, "{t:?}");
        let skewed: Vec<u32> = orders.iter().map(|&k| k.min(3)).collect();
        assert!(geometric_order_gof(&skewed, 0.3).unwrap().rejects(0.01));
    }

    #[test]
    fn independence() {
        let product = vec![vec![40.0, 20.0, 20.0], vec![20.0, 10.0, 10.0]];
        let t = chi_square_independence(&product).unwrap();
        assert!(t.statistic.abs() < 1e-12 && t.df == 2);
        let diag = vec![vec![50.0, 5.0], vec![5.0, 50.0]];
        assert!(chi_square_independence(&diag).unwrap().rejects(0.01));
    }

    #[test]
    fn independence_pools_sparse_margins() {
        let t = vec![vec![100.0, 50.0, 1.0], vec![50.0, 25.0, 1.0], vec![1.0, 0.0, 0.0]];
        let r = chi_square_independence(&t).unwrap();
        assert_eq!(r.cells, 4);
        assert!(!r.rejects(0.01));
    }
}
