use crate::data::DistanceMatrix;
use crate::error::{Error, Result};

/// Distance from every observation to its `k`-th nearest other observation.
pub fn knn_baseline(distances: &DistanceMatrix, k: usize) -> Result<Vec<f64>> {
    let n = distances.len();
    if k == 0 || k >= n {
        return Err(Error::param(
            "k",
            format!("must lie in 1..={}, got {k}", n.saturating_sub(1)),
        ));
    }
    let mut buf = Vec::with_capacity(n - 1);
    Ok((0..n)
        .map(|i| {
            buf.clear();
            buf.extend(
                distances
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &d)| d),
            );
            *buf.select_nth_unstable_by(k - 1, f64::total_cmp).1
        })
        .collect())
}
