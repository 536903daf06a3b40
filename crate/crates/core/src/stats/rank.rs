use crate::error::{Error, Result};

/// Mid-ranks of a sample plus the sizes of its tie groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    /// `ranks[i]` is the 1-based mid-rank of `values[i]`.
    pub ranks: Vec<f64>,
    /// Size of every tie group with more than one member, in ascending value order.
    pub tie_sizes: Vec<usize>,
}

impl Ranking {
    /// Σ (t³ − t) over tie groups.
    pub fn tie_term(&self) -> f64 {
        self.tie_sizes
            .iter()
            .map(|&t| {
                let t = t as f64;
                t * t * t - t
            })
            .sum()
    }
}

/// Ascending 1..N ranks; tied values share the mean of their rank span.
pub fn rank_with_ties(values: &[f64]) -> Result<Ranking> {
    if values.is_empty() {
        return Err(Error::Validation("cannot rank an empty sample".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("cannot rank non-finite values".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut ranks = vec![0.0; values.len()];
    let mut tie_sizes = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        // -0.0 and 0.0 compare equal here, as they should for ranking.
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let mid = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mid;
        }
        if end - start > 1 {
            tie_sizes.push(end - start);
        }
        start = end;
    }
    Ok(Ranking { ranks, tie_sizes })
}
