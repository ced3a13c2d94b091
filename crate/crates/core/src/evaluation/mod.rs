//! Evaluation of outlier scores: AUC, the KNN baseline, the stage profiler
//! and the simulation benchmark harness.

mod auc;
mod bench;
mod knn;
mod profile;

pub use auc::{auc, AucResult};
pub use bench::{derive_seed, run_benchmark, BenchConfig, BenchRow, Method, DEFAULT_KNN_GRID};
pub use knn::knn_baseline;
pub use profile::{profile, profile_median, RuntimeProfile};

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
