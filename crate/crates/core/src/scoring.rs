//! The projection ensemble and the LocOut score.
//!
//! Every observation initiates one local projection. Each observation is
//! then scored by the orthogonal distances it attains in all projections
//! whose core does not contain it, weighted by inverse core distance.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::{pairwise_distances, DataMatrix, DistanceMatrix};
use crate::error::{Error, Result, Warning};
use crate::neighborhood::{select_core, Core, NeighborhoodParams};
use crate::projection::{fit_projection, CdVariant, FitOptions, LocalProjection};

/// Denominator below which the weights fall back to uniform.
pub const WEIGHT_EPS: f64 = 1e-12;

/// Everything that parameterizes a LocOut run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    pub params: NeighborhoodParams,
    pub variant: CdVariant,
    pub fit: FitOptions,
}

impl ScoreConfig {
    pub fn new(params: NeighborhoodParams) -> Self {
        Self {
            params,
            variant: CdVariant::default(),
            fit: FitOptions::default(),
        }
    }

    pub fn with_variant(mut self, variant: CdVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_fit(mut self, fit: FitOptions) -> Self {
        self.fit = fit;
        self
    }
}

/// All n local projections and the distances of every observation in each.
///
/// Matrices are indexed `(initiator, observation)`.
#[derive(Debug, Clone)]
pub struct ProjectionEnsemble {
    pub cores: Vec<Core>,
    /// Projection of each initiator; initiators with the same core member
    /// set share one fitted projection.
    pub projections: Vec<Arc<LocalProjection>>,
    pub cd: DMatrix<f64>,
    pub od: DMatrix<f64>,
    pub core_mask: DMatrix<bool>,
}

impl ProjectionEnsemble {
    pub fn len(&self) -> usize {
        self.cores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cores.is_empty()
    }

    /// Number of distinct fitted projections.
    pub fn distinct_projections(&self) -> usize {
        let mut ptrs: Vec<*const LocalProjection> =
            self.projections.iter().map(Arc::as_ptr).collect();
        ptrs.sort_unstable();
        ptrs.dedup();
        ptrs.len()
    }
}

/// Cores with identical member sets, grouped.
#[derive(Debug, Clone)]
pub struct CoreGroups {
    /// One representative initiator per distinct member set.
    pub representatives: Vec<usize>,
    /// Group index of every initiator.
    pub group_of: Vec<usize>,
}

pub fn select_cores(distances: &DistanceMatrix, params: &NeighborhoodParams) -> Result<Vec<Core>> {
    params.check_for(distances.len())?;
    (0..distances.len())
        .into_par_iter()
        .map(|y| select_core(y, distances, params))
        .collect()
}

pub fn group_cores(cores: &[Core]) -> CoreGroups {
    let mut seen: BTreeMap<&[usize], usize> = BTreeMap::new();
    let mut representatives = Vec::new();
    let group_of = cores
        .iter()
        .map(|c| {
            *seen.entry(&c.members).or_insert_with(|| {
                representatives.push(c.initiator);
                representatives.len() - 1
            })
        })
        .collect();
    CoreGroups {
        representatives,
        group_of,
    }
}

/// CD and OD of every observation in one projection.
pub(crate) struct Evaluated {
    pub cd: Vec<f64>,
    pub od: Vec<f64>,
}

pub(crate) fn evaluate(x: &DataMatrix, proj: &LocalProjection, variant: CdVariant) -> Evaluated {
    let scaled = proj.scale(x);
    let coords = proj.core_coordinates(&scaled);
    Evaluated {
        cd: proj.core_distances(&coords, variant),
        od: proj.orthogonal_distances(&scaled, &coords),
    }
}

pub(crate) fn assemble(
    cores: Vec<Core>,
    groups: &CoreGroups,
    fitted: Vec<Arc<LocalProjection>>,
    evaluated: &[Evaluated],
) -> ProjectionEnsemble {
    let n = cores.len();
    let mut cd = DMatrix::zeros(n, n);
    let mut od = DMatrix::zeros(n, n);
    let mut core_mask = DMatrix::from_element(n, n, false);
    for (y, core) in cores.iter().enumerate() {
        let e = &evaluated[groups.group_of[y]];
        for x in 0..n {
            cd[(y, x)] = e.cd[x];
            od[(y, x)] = e.od[x];
        }
        for &m in &core.members {
            core_mask[(y, m)] = true;
        }
    }
    let projections = groups
        .group_of
        .iter()
        .map(|&g| Arc::clone(&fitted[g]))
        .collect();
    ProjectionEnsemble {
        cores,
        projections,
        cd,
        od,
        core_mask,
    }
}

/// Selects all cores, fits each distinct core once, and evaluates every
/// observation in every projection.
pub fn build_ensemble(
    x: &DataMatrix,
    distances: &DistanceMatrix,
    config: &ScoreConfig,
) -> Result<ProjectionEnsemble> {
    if distances.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: distances.len(),
        });
    }
    let cores = select_cores(distances, &config.params)?;
    let groups = group_cores(&cores);
    let fitted: Vec<Arc<LocalProjection>> = groups
        .representatives
        .par_iter()
        .map(|&y| fit_projection(x, &cores[y], &config.fit).map(Arc::new))
        .collect::<Result<_>>()?;
    let evaluated: Vec<Evaluated> = fitted
        .par_iter()
        .map(|p| evaluate(x, p, config.variant))
        .collect();
    Ok(assemble(cores, &groups, fitted, &evaluated))
}

/// Weights of all projections for one observation, plus whether the
/// uniform fallback was used.
pub(crate) fn weights_for(ensemble: &ProjectionEnsemble, x: usize) -> Result<(Vec<f64>, bool)> {
    let n = ensemble.len();
    let cd = ensemble.cd.column(x);
    let mask = ensemble.core_mask.column(x);
    let contributing: Vec<usize> = (0..n).filter(|&y| !mask[y]).collect();
    if contributing.is_empty() {
        return Err(Error::NoContributingProjection { observation: x });
    }
    let mut w = vec![0.0; n];

    // 1/CD diverges: the mass goes to the projections centered on x
    let zeros: Vec<usize> = contributing
        .iter()
        .copied()
        .filter(|&y| cd[y] == 0.0)
        .collect();
    if !zeros.is_empty() {
        let share = 1.0 / zeros.len() as f64;
        for y in zeros {
            w[y] = share;
        }
        return Ok((w, false));
    }

    let floor = contributing
        .iter()
        .map(|&y| 1.0 / cd[y])
        .fold(f64::INFINITY, f64::min);
    let mut total = 0.0;
    for &y in &contributing {
        w[y] = 1.0 / cd[y] - floor;
        total += w[y];
    }
    if total < WEIGHT_EPS {
        let share = 1.0 / contributing.len() as f64;
        for &y in &contributing {
            w[y] = share;
        }
        return Ok((w, true));
    }
    for &y in &contributing {
        w[y] /= total;
    }
    Ok((w, false))
}

/// Weights `w_y(x)` of every projection `y` for observation `x`. They are
/// zero on projections whose core contains `x` and sum to one.
pub fn weights(ensemble: &ProjectionEnsemble, x: usize) -> Result<Vec<f64>> {
    weights_for(ensemble, x).map(|(w, _)| w)
}

/// Per-observation summary across all projections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationDiagnostics {
    pub min_cd: f64,
    pub median_cd: f64,
    /// Number of cores containing the observation.
    pub core_count: usize,
}

/// LocOut scores with diagnostics.
#[derive(Debug, Clone)]
pub struct ScoreReport {
    pub locout: Vec<f64>,
    /// Observations whose weights fell back to uniform.
    pub weights_degenerate: Vec<usize>,
    pub params: NeighborhoodParams,
    pub variant: CdVariant,
    /// Empty when the run short-circuits on low dimension.
    pub diagnostics: Vec<ObservationDiagnostics>,
    pub warnings: Vec<Warning>,
}

pub(crate) struct Aggregate {
    pub scores: Vec<f64>,
    pub degenerate: Vec<usize>,
}

pub(crate) fn aggregate(ensemble: &ProjectionEnsemble) -> Result<Aggregate> {
    let per_obs: Vec<(f64, bool)> = (0..ensemble.len())
        .into_par_iter()
        .map(|x| {
            let (w, fallback) = weights_for(ensemble, x)?;
            let od = ensemble.od.column(x);
            let score = w.iter().zip(od.iter()).map(|(w, od)| w * od).sum::<f64>();
            Ok((score, fallback))
        })
        .collect::<Result<_>>()?;
    Ok(Aggregate {
        scores: per_obs.iter().map(|s| s.0).collect(),
        degenerate: per_obs
            .iter()
            .enumerate()
            .filter(|(_, s)| s.1)
            .map(|(i, _)| i)
            .collect(),
    })
}

fn diagnostics(ensemble: &ProjectionEnsemble) -> Vec<ObservationDiagnostics> {
    (0..ensemble.len())
        .map(|x| {
            let mut cds: Vec<f64> = ensemble.cd.column(x).iter().copied().collect();
            cds.sort_unstable_by(f64::total_cmp);
            let n = cds.len();
            let median_cd = if n % 2 == 1 {
                cds[n / 2]
            } else {
                0.5 * (cds[n / 2 - 1] + cds[n / 2])
            };
            ObservationDiagnostics {
                min_cd: cds[0],
                median_cd,
                core_count: ensemble.core_mask.column(x).iter().filter(|&&b| b).count(),
            }
        })
        .collect()
}

/// LocOut score of every observation of `x`.
pub fn locout_scores(x: &DataMatrix, config: &ScoreConfig) -> Result<ScoreReport> {
    config.params.check_for(x.nrows())?;
    let core_size = config.params.core_size();
    if x.ncols() <= core_size {
        return Ok(ScoreReport {
            locout: vec![0.0; x.nrows()],
            weights_degenerate: Vec::new(),
            params: config.params,
            variant: config.variant,
            diagnostics: Vec::new(),
            warnings: vec![Warning::LowDimension {
                p: x.ncols(),
                core_size,
            }],
        });
    }
    let distances = pairwise_distances(x);
    locout_scores_with(x, &distances, config)
}

/// As [`locout_scores`], reusing precomputed distances. Does not apply the
/// low-dimension short-circuit.
pub fn locout_scores_with(
    x: &DataMatrix,
    distances: &DistanceMatrix,
    config: &ScoreConfig,
) -> Result<ScoreReport> {
    let ensemble = build_ensemble(x, distances, config)?;
    let agg = aggregate(&ensemble)?;
    Ok(ScoreReport {
        locout: agg.scores,
        weights_degenerate: agg.degenerate,
        params: config.params,
        variant: config.variant,
        diagnostics: diagnostics(&ensemble),
        warnings: Vec::new(),
    })
}
