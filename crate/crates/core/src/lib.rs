//! Outlier detection for high-dimensional data through local projections.
//!
//! Each observation initiates a local projection: its k nearest neighbors
//! are trimmed to their densest core, the core is centered, scaled and
//! decomposed by SVD, and every observation is measured by its core
//! distance (inside the core space) and orthogonal distance (to the core
//! space). The LocOut score of an observation aggregates its orthogonal
//! distances over all projections, weighted by inverse core distance.
//!
//! ```
//! use locout::{locout_scores, DataMatrix, NeighborhoodParams, ScoreConfig};
//! # use nalgebra::DMatrix;
//! let x = DataMatrix::new(DMatrix::from_fn(30, 40, |i, j| ((i * 31 + j * 17) as f64).sin()))?;
//! let config = ScoreConfig::new(NeighborhoodParams::new(10, 0.5)?);
//! let report = locout_scores(&x, &config)?;
//! assert_eq!(report.locout.len(), 30);
//! # Ok::<(), locout::Error>(())
//! ```

// `!(v > 0.0)` deliberately treats NaN as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod neighborhood;
pub mod projection;
pub mod scoring;
pub mod simgen;

pub use data::{
    load_csv, pairwise_distances, CsvOptions, DataMatrix, DistanceMatrix, TiesMode, TiesPolicy,
};
pub use error::{Error, Result, Warning};
pub use evaluation::{auc, knn_baseline, AucResult, RuntimeProfile};
pub use neighborhood::{knn_set, select_core, Core, NeighborhoodParams};
pub use projection::{
    core_distance, fit_projection, orthogonal_distance, project_point, CdVariant, ConstantColumns,
    FitOptions, LocalProjection, ProjectedPoint,
};
pub use scoring::{
    build_ensemble, locout_scores, weights, ProjectionEnsemble, ScoreConfig, ScoreReport,
};
pub use simgen::{generate, GroupDistribution, LabeledDataset, SimulationConfig};
