use std::time::Instant;

use rayon::prelude::*;

use crate::data::pairwise_distances;
use crate::error::{Error, Result};
use crate::evaluation::{auc, knn_baseline};
use crate::scoring::{locout_scores, ScoreConfig};
use crate::simgen::{generate, SimulationConfig};

/// Neighborhood sizes tried for the KNN baseline; the best AUC is reported.
pub const DEFAULT_KNN_GRID: [usize; 10] = [5, 10, 15, 20, 25, 30, 35, 40, 45, 50];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    LocOut,
    Knn,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::LocOut => "locout",
            Method::Knn => "knn",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "locout" => Ok(Method::LocOut),
            "knn" => Ok(Method::Knn),
            other => Err(Error::param(
                "method",
                format!("expected locout or knn, got {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Simulation settings; their `seed` fields are replaced per repetition.
    pub grid: Vec<SimulationConfig>,
    pub score: ScoreConfig,
    pub methods: Vec<Method>,
    pub repetitions: usize,
    pub knn_grid: Vec<usize>,
    pub master_seed: u64,
}

/// One (grid point, repetition, method) result.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub setup: u8,
    pub distribution: &'static str,
    pub p_inf: usize,
    pub p_noise: usize,
    pub method: Method,
    pub repetition: usize,
    pub seed: u64,
    pub auc: f64,
    pub runtime_s: f64,
    /// Winning neighborhood size of the KNN sweep.
    pub best_k: Option<usize>,
}

impl BenchRow {
    pub const HEADER: [&'static str; 9] = [
        "setup",
        "distribution",
        "p_inf",
        "p_noise",
        "method",
        "repetition",
        "seed",
        "auc",
        "runtime_s",
    ];
}

/// SplitMix64 of `master` mixed with `index`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Simulates every grid point `repetitions` times and scores each dataset
/// with every method.
///
/// Repetition `r` uses the same seed at every grid point, so results are
/// paired across noise levels and distributions.
pub fn run_benchmark(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    if config.repetitions == 0 {
        return Err(Error::param("repetitions", "must be at least 1"));
    }
    if config.methods.contains(&Method::Knn) && config.knn_grid.is_empty() {
        return Err(Error::param("knn_grid", "must not be empty"));
    }
    for sim in &config.grid {
        sim.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..config.grid.len())
        .flat_map(|g| (0..config.repetitions).map(move |r| (g, r)))
        .collect();
    let rows: Vec<Vec<BenchRow>> = jobs
        .par_iter()
        .map(|&(g, r)| run_job(config, g, r))
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn run_job(config: &BenchConfig, grid_point: usize, repetition: usize) -> Result<Vec<BenchRow>> {
    let seed = derive_seed(config.master_seed, repetition as u64);
    let sim = SimulationConfig {
        seed,
        ..config.grid[grid_point].clone()
    };
    let data = generate(&sim)?;
    let row = |method, auc, runtime_s, best_k| BenchRow {
        setup: sim.distribution.setup(),
        distribution: sim.distribution.name(),
        p_inf: sim.p_inf,
        p_noise: sim.p_noise,
        method,
        repetition,
        seed,
        auc,
        runtime_s,
        best_k,
    };

    let mut out = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let start = Instant::now();
        match method {
            Method::LocOut => {
                let report = locout_scores(&data.x, &config.score)?;
                let a = auc(&report.locout, &data.labels)?.auc;
                out.push(row(method, a, start.elapsed().as_secs_f64(), None));
            }
            Method::Knn => {
                let distances = pairwise_distances(&data.x);
                let mut best: Option<(f64, usize)> = None;
                for &k in config
                    .knn_grid
                    .iter()
                    .filter(|&&k| k >= 1 && k < data.x.nrows())
                {
                    let a = auc(&knn_baseline(&distances, k)?, &data.labels)?.auc;
                    if best.is_none_or(|(b, _)| a > b) {
                        best = Some((a, k));
                    }
                }
                let (a, k) = best.ok_or_else(|| {
                    Error::param("knn_grid", format!("no k below n = {}", data.x.nrows()))
                })?;
                out.push(row(method, a, start.elapsed().as_secs_f64(), Some(k)));
            }
        }
    }
    Ok(out)
}
