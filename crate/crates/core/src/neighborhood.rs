//! k-nearest-neighbor sets and the dense core of each local projection.

use std::cmp::Ordering;

use crate::data::DistanceMatrix;
use crate::error::{Error, Result};

/// Neighborhood size `k` and trimming proportion `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborhoodParams {
    k: usize,
    alpha: f64,
}

impl NeighborhoodParams {
    pub const DEFAULT_ALPHA: f64 = 0.5;

    pub fn new(k: usize, alpha: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("k", "must be a positive integer"));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::param(
                "alpha",
                format!("must lie in (0, 1], got {alpha}"),
            ));
        }
        let params = Self { k, alpha };
        if params.core_size() < 2 {
            return Err(Error::param(
                "alpha",
                format!(
                    "ceil(alpha * k) = {} but a core needs at least 2 observations",
                    params.core_size()
                ),
            ));
        }
        Ok(params)
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of core observations, `ceil(alpha * k)`.
    pub fn core_size(&self) -> usize {
        // products like 0.3 * 10 land a hair above the integer
        let m = (self.alpha * self.k as f64 - 1e-9).ceil() as usize;
        m.clamp(1, self.k)
    }

    /// Checks the parameters against a dataset of `n` observations.
    pub fn check_for(&self, n: usize) -> Result<()> {
        if self.k >= n {
            return Err(Error::param(
                "k",
                format!(
                    "must be at most n - 1 = {}, got {}",
                    n.saturating_sub(1),
                    self.k
                ),
            ));
        }
        Ok(())
    }
}

/// The core of the local projection initiated by one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Core {
    pub initiator: usize,
    /// k nearest neighbors of the initiator, nearest first.
    pub knn: Vec<usize>,
    /// Densest neighbor, the core center.
    pub center: usize,
    /// Core members in ascending index order; contains `center`, never `initiator`.
    pub members: Vec<usize>,
    /// Largest distance from the center to a member.
    pub covering_radius: f64,
}

fn by_distance(row: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b))
}

/// The `k` observations closest to `y`, excluding `y`; distance ties go to
/// the lower row index.
pub fn knn_set(y: usize, distances: &DistanceMatrix, k: usize) -> Result<Vec<usize>> {
    let n = distances.len();
    if y >= n {
        return Err(Error::param(
            "y",
            format!("row {y} out of range for n = {n}"),
        ));
    }
    if k == 0 || k >= n {
        return Err(Error::param(
            "k",
            format!("must lie in 1..={}, got {k}", n.saturating_sub(1)),
        ));
    }
    let row = distances.row(y);
    let mut others: Vec<usize> = (0..n).filter(|&i| i != y).collect();
    let cmp = by_distance(row);
    others.select_nth_unstable_by(k - 1, &cmp);
    others.truncate(k);
    others.sort_unstable_by(&cmp);
    Ok(others)
}

/// Selects the core for initiator `y`.
///
/// Every neighbor is scored by the radius of the smallest ball around it
/// that holds `core_size` neighbors (itself included); the neighbor with the
/// smallest radius becomes the center and its `core_size` closest neighbors
/// the core.
pub fn select_core(
    y: usize,
    distances: &DistanceMatrix,
    params: &NeighborhoodParams,
) -> Result<Core> {
    params.check_for(distances.len())?;
    let knn = knn_set(y, distances, params.k())?;
    let m = params.core_size();

    // Mutual neighbors often share the same m-th distance exactly, so ties on
    // the radius fall back to the summed distances to the m nearest before the
    // row index. This keeps the choice independent of row order.
    let mut best: Option<(f64, f64, usize)> = None;
    let mut buf = Vec::with_capacity(knn.len());
    for &c in &knn {
        let row = distances.row(c);
        buf.clear();
        buf.extend(knn.iter().map(|&j| if j == c { 0.0 } else { row[j] }));
        let (head, r, _) = buf.select_nth_unstable_by(m - 1, f64::total_cmp);
        let r = *r;
        head.sort_unstable_by(f64::total_cmp);
        let spread = head.iter().sum::<f64>() + r;
        let better = match best {
            None => true,
            Some((br, bs, bc)) => r < br || (r == br && (spread < bs || (spread == bs && c < bc))),
        };
        if better {
            best = Some((r, spread, c));
        }
    }
    let (covering_radius, _, center) = best.expect("knn is non-empty");

    let row = distances.row(center);
    let mut rest: Vec<usize> = knn.iter().copied().filter(|&j| j != center).collect();
    rest.sort_unstable_by(by_distance(row));
    let mut members: Vec<usize> = std::iter::once(center)
        .chain(rest.into_iter().take(m - 1))
        .collect();
    members.sort_unstable();

    Ok(Core {
        initiator: y,
        knn,
        center,
        members,
        covering_radius,
    })
}
