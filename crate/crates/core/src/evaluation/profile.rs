use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::data::{pairwise_distances, DataMatrix};
use crate::error::{Error, Result};
use crate::neighborhood::select_core;
use crate::projection::fit_projection;
use crate::scoring::{aggregate, assemble, group_cores, Evaluated, ScoreConfig};

/// Wall-clock seconds spent in each stage of one LocOut run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuntimeProfile {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub t_distances: f64,
    pub t_core_selection: f64,
    pub t_svd: f64,
    pub t_cd: f64,
    pub t_od: f64,
    pub t_weights: f64,
    pub t_total: f64,
}

impl RuntimeProfile {
    pub fn stage_sum(&self) -> f64 {
        self.t_distances
            + self.t_core_selection
            + self.t_svd
            + self.t_cd
            + self.t_od
            + self.t_weights
    }

    /// Stage names and durations, in pipeline order.
    pub fn stages(&self) -> [(&'static str, f64); 6] {
        [
            ("distances", self.t_distances),
            ("core_selection", self.t_core_selection),
            ("svd", self.t_svd),
            ("cd", self.t_cd),
            ("od", self.t_od),
            ("weights", self.t_weights),
        ]
    }
}

fn timed<T>(acc: &mut Duration, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    *acc += start.elapsed();
    out
}

/// Runs the full pipeline on one worker thread, timing each stage.
pub fn profile(x: &DataMatrix, config: &ScoreConfig) -> Result<RuntimeProfile> {
    config.params.check_for(x.nrows())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::Numerical(format!("cannot build profiling thread pool: {e}")))?;
    pool.install(|| profile_sequential(x, config))
        .map(|(prof, _)| prof)
}

fn profile_sequential(x: &DataMatrix, config: &ScoreConfig) -> Result<(RuntimeProfile, Vec<f64>)> {
    let mut t = [Duration::ZERO; 6];
    let start = Instant::now();

    let distances = timed(&mut t[0], || pairwise_distances(x));

    let (cores, groups) = timed(&mut t[1], || -> Result<_> {
        let cores = (0..x.nrows())
            .map(|y| select_core(y, &distances, &config.params))
            .collect::<Result<Vec<_>>>()?;
        let groups = group_cores(&cores);
        Ok((cores, groups))
    })?;

    let mut fitted = Vec::with_capacity(groups.representatives.len());
    let mut evaluated = Vec::with_capacity(groups.representatives.len());
    for &y in &groups.representatives {
        let proj = timed(&mut t[2], || fit_projection(x, &cores[y], &config.fit))?;
        let (scaled, coords, cd) = timed(&mut t[3], || {
            let scaled = proj.scale(x);
            let coords = proj.core_coordinates(&scaled);
            let cd = proj.core_distances(&coords, config.variant);
            (scaled, coords, cd)
        });
        let od = timed(&mut t[4], || proj.orthogonal_distances(&scaled, &coords));
        fitted.push(Arc::new(proj));
        evaluated.push(Evaluated { cd, od });
    }

    let ensemble = assemble(cores, &groups, fitted, &evaluated);
    let agg = timed(&mut t[5], || aggregate(&ensemble))?;

    let t_total = start.elapsed().as_secs_f64();
    let prof = RuntimeProfile {
        n: x.nrows(),
        p: x.ncols(),
        k: config.params.k(),
        t_distances: t[0].as_secs_f64(),
        t_core_selection: t[1].as_secs_f64(),
        t_svd: t[2].as_secs_f64(),
        t_cd: t[3].as_secs_f64(),
        t_od: t[4].as_secs_f64(),
        t_weights: t[5].as_secs_f64(),
        t_total,
    };
    Ok((prof, agg.scores))
}

/// Profiles `runs` times and returns the run with the median total time.
pub fn profile_median(x: &DataMatrix, config: &ScoreConfig, runs: usize) -> Result<RuntimeProfile> {
    if runs == 0 {
        return Err(Error::param("runs", "must be at least 1"));
    }
    let mut all = (0..runs)
        .map(|_| profile(x, config))
        .collect::<Result<Vec<_>>>()?;
    all.sort_by(|a, b| a.t_total.total_cmp(&b.t_total));
    Ok(all[(runs - 1) / 2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighborhood::NeighborhoodParams;
    use crate::scoring::locout_scores_with;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn durations_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = DataMatrix::new(DMatrix::from_fn(40, 60, |_, _| rng.random::<f64>())).unwrap();
        let cfg = ScoreConfig::new(NeighborhoodParams::new(10, 0.5).unwrap());
        let prof = profile_median(&x, &cfg, 3).unwrap();
        assert_eq!((prof.n, prof.p, prof.k), (40, 60, 10));
        for (_, t) in prof.stages() {
            assert!(t >= 0.0 && t <= prof.t_total);
        }
        assert!(prof.t_svd > 0.0);
        assert!(prof.stage_sum() <= prof.t_total);
        // the profiled path computes the same scores as the parallel one
        let (_, scores) = profile_sequential(&x, &cfg).unwrap();
        let dist = pairwise_distances(&x);
        assert_eq!(scores, locout_scores_with(&x, &dist, &cfg).unwrap().locout);
    }
}
