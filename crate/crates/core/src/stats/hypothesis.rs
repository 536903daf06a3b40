use serde::{Deserialize, Serialize};

use super::distribution::chi2_upper_tail;
use super::rank::rank_with_ties;
use crate::error::{Error, Result};

/// Statistic, degrees of freedom and upper-tail p-value of a χ²-referenced test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestStatistic {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
}

/// Kruskal–Wallis H test with tie correction.
///
/// Empty groups are ignored. Returns `Ok(None)` when fewer than two
/// non-empty groups remain (the "not tested" signal). When every pooled value
/// is identical the tie correction vanishes and the result is H = 0, p = 1.
pub fn kruskal_wallis(groups: &[&[f64]]) -> Result<Option<TestStatistic>> {
    let groups: Vec<&[f64]> = groups.iter().copied().filter(|g| !g.is_empty()).collect();
    if groups.len() < 2 {
        return Ok(None);
    }
    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    let ranking = rank_with_ties(&pooled)?;
    let n = pooled.len() as f64;
    let df = (groups.len() - 1) as u32;

    let correction = 1.0 - ranking.tie_term() / (n * n * n - n);
    if correction <= 0.0 {
        return Ok(Some(TestStatistic {
            statistic: 0.0,
            df,
            p_value: 1.0,
        }));
    }

    // Centered form: 12/(N(N+1)) Σ nᵢ (R̄ᵢ − (N+1)/2)².
    let grand_mean = (n + 1.0) / 2.0;
    let mut offset = 0;
    let mut between = 0.0;
    for g in &groups {
        let ranks = &ranking.ranks[offset..offset + g.len()];
        offset += g.len();
        let ni = g.len() as f64;
        let mean = ranks.iter().sum::<f64>() / ni;
        between += ni * (mean - grand_mean).powi(2);
    }
    let h = (12.0 / (n * (n + 1.0)) * between / correction).max(0.0);
    Ok(Some(TestStatistic {
        statistic: h,
        df,
        p_value: chi2_upper_tail(h, df),
    }))
}

/// ε² = H / (N − 1).
pub fn epsilon_squared(h: f64, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    h / (n as f64 - 1.0)
}

/// Group × category count table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// Row-major, `counts[r][c]`.
    pub counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn new(rows: Vec<String>, cols: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != rows.len() || counts.iter().any(|r| r.len() != cols.len()) {
            return Err(Error::Validation(format!(
                "contingency counts do not match {}x{} labels",
                rows.len(),
                cols.len()
            )));
        }
        Ok(ContingencyTable { rows, cols, counts })
    }

    /// Unlabelled table, rows and columns named by index.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let r = counts.len();
        let c = counts.first().map_or(0, Vec::len);
        Self::new(
            (0..r).map(|i| i.to_string()).collect(),
            (0..c).map(|i| i.to_string()).collect(),
            counts,
        )
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Copy with all-zero rows and columns removed.
    pub fn without_empty_marginals(&self) -> ContingencyTable {
        let keep_rows: Vec<usize> = (0..self.rows.len())
            .filter(|&r| self.counts[r].iter().any(|&v| v > 0))
            .collect();
        let keep_cols: Vec<usize> = (0..self.cols.len())
            .filter(|&c| self.counts.iter().any(|row| row[c] > 0))
            .collect();
        ContingencyTable {
            rows: keep_rows.iter().map(|&r| self.rows[r].clone()).collect(),
            cols: keep_cols.iter().map(|&c| self.cols[c].clone()).collect(),
            counts: keep_rows
                .iter()
                .map(|&r| keep_cols.iter().map(|&c| self.counts[r][c]).collect())
                .collect(),
        }
    }
}

/// Pearson χ² test of independence (no continuity correction).
///
/// Zero rows/columns are dropped first. Returns `None` if fewer than two rows
/// or columns remain; the reduced table's shape is what the caller should
/// use for Cramér's V.
pub fn chi_square_independence(
    table: &ContingencyTable,
) -> Option<(TestStatistic, (usize, usize))> {
    let t = table.without_empty_marginals();
    let (r, c) = (t.rows.len(), t.cols.len());
    if r < 2 || c < 2 {
        return None;
    }
    let n = t.total() as f64;
    let row_sums: Vec<f64> = t
        .counts
        .iter()
        .map(|row| row.iter().sum::<u64>() as f64)
        .collect();
    let col_sums: Vec<f64> = (0..c)
        .map(|j| t.counts.iter().map(|row| row[j]).sum::<u64>() as f64)
        .collect();
    let mut chi2 = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &observed) in row.iter().enumerate() {
            let expected = row_sums[i] * col_sums[j] / n;
            chi2 += (observed as f64 - expected).powi(2) / expected;
        }
    }
    let df = ((r - 1) * (c - 1)) as u32;
    Some((
        TestStatistic {
            statistic: chi2,
            df,
            p_value: chi2_upper_tail(chi2, df),
        },
        (r, c),
    ))
}

/// V = sqrt(χ² / (N · (min(r, c) − 1))).
pub fn cramers_v(chi2: f64, n: u64, rows: usize, cols: usize) -> f64 {
    let k = rows.min(cols);
    if n == 0 || k < 2 {
        return 0.0;
    }
    (chi2 / (n as f64 * (k as f64 - 1.0))).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kw_two_separated_groups() {
        let t = kruskal_wallis(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]])
            .unwrap()
            .unwrap();
        assert!((t.statistic - 27.0 / 7.0).abs() < 1e-12);
        assert_eq!(t.df, 1);
        assert!((t.p_value - 0.049_534_613_435_626_9).abs() < 1e-9);
    }

    #[test]
    fn kw_all_ties() {
        let t = kruskal_wallis(&[&[7.0, 7.0], &[7.0, 7.0]])
            .unwrap()
            .unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn kw_permuted_groups() {
        let t = kruskal_wallis(&[&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0], &[2.0, 3.0, 1.0]])
            .unwrap()
            .unwrap();
        assert!(t.statistic.abs() < 1e-12);
        assert_eq!(t.df, 2);
    }

    #[test]
    fn kw_needs_two_groups() {
        assert_eq!(kruskal_wallis(&[&[1.0, 2.0]]).unwrap(), None);
        assert_eq!(kruskal_wallis(&[&[1.0, 2.0], &[]]).unwrap(), None);
    }

    #[test]
    fn epsilon_examples() {
        assert!((epsilon_squared(3.857, 6) - 0.7714).abs() < 1e-12);
        assert_eq!(epsilon_squared(0.0, 50), 0.0);
        assert!((epsilon_squared(4.95, 100) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn chi_square_examples() {
        let t = ContingencyTable::from_counts(vec![vec![10, 20], vec![20, 10]]).unwrap();
        let (s, shape) = chi_square_independence(&t).unwrap();
        assert!((s.statistic - 20.0 / 3.0).abs() < 1e-12);
        assert_eq!((s.df, shape), (1, (2, 2)));
        assert!((s.p_value - 0.009_823_274_507_519_23).abs() < 1e-9);

        let t = ContingencyTable::from_counts(vec![vec![5, 0], vec![0, 5]]).unwrap();
        assert!((chi_square_independence(&t).unwrap().0.statistic - 10.0).abs() < 1e-12);

        let t = ContingencyTable::from_counts(vec![vec![10, 20, 30], vec![20, 40, 60]]).unwrap();
        let (s, _) = chi_square_independence(&t).unwrap();
        assert!(s.statistic.abs() < 1e-12);
        assert!((s.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_drops_empty_marginals() {
        let t =
            ContingencyTable::from_counts(vec![vec![10, 0, 20], vec![0, 0, 0], vec![20, 0, 10]])
                .unwrap();
        let (s, shape) = chi_square_independence(&t).unwrap();
        assert_eq!(shape, (2, 2));
        assert!((s.statistic - 20.0 / 3.0).abs() < 1e-12);

        let single = ContingencyTable::from_counts(vec![vec![10, 20], vec![0, 0]]).unwrap();
        assert!(chi_square_independence(&single).is_none());
    }

    #[test]
    fn cramers_v_examples() {
        assert!((cramers_v(20.0 / 3.0, 60, 2, 2) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(cramers_v(0.0, 60, 2, 2), 0.0);
        assert!((cramers_v(15.072, 60, 2, 2) - 0.501_198_563_2).abs() < 1e-6);
    }

    #[test]
    fn table_shape_validated() {
        assert!(
            ContingencyTable::new(vec!["a".into()], vec!["x".into()], vec![vec![1, 2]]).is_err()
        );
    }

    proptest! {
        #[test]
        fn kw_invariant_under_monotone_transform(
            groups in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 1..15), 2..5)
        ) {
            let refs: Vec<&[f64]> = groups.iter().map(Vec::as_slice).collect();
            let exp: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|v| v.exp()).collect()).collect();
            let exp_refs: Vec<&[f64]> = exp.iter().map(Vec::as_slice).collect();
            let a = kruskal_wallis(&refs).unwrap().unwrap();
            let b = kruskal_wallis(&exp_refs).unwrap().unwrap();
            prop_assert!((a.statistic - b.statistic).abs() < 1e-9);
            prop_assert!(a.statistic >= 0.0);
            let n: usize = groups.iter().map(Vec::len).sum();
            let eps = epsilon_squared(a.statistic, n);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&eps));
        }

        #[test]
        fn chi_square_and_v_bounds(
            counts in prop::collection::vec(prop::collection::vec(0u64..40, 3), 2..5)
        ) {
            let table = ContingencyTable::from_counts(counts).unwrap();
            if let Some((s, (r, c))) = chi_square_independence(&table) {
                prop_assert!(s.statistic >= -1e-12);
                let v = cramers_v(s.statistic, table.total(), r, c);
                prop_assert!((0.0..=1.0 + 1e-9).contains(&v));
                prop_assert!((0.0..=1.0).contains(&s.p_value));
            }
        }
    }
}
