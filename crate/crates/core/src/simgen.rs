//! Synthetic benchmarks: three groups with randomly rotated equicorrelation
//! covariances, optional noise variables, and injected scatter outliers.
//!
//! Random draws come from ChaCha20 substreams of the master seed. Each group
//! owns separate streams for its parameters, inlier informative coordinates,
//! noise coordinates and outlier coordinates, so changing the number of noise
//! variables leaves the informative part of a dataset untouched and the
//! log-normal setup is the exponential of the normal one for the same seed.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::DataMatrix;
use crate::error::{Error, Result, Warning};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupDistribution {
    #[default]
    Normal,
    LogNormal,
}

impl GroupDistribution {
    pub fn name(self) -> &'static str {
        match self {
            GroupDistribution::Normal => "normal",
            GroupDistribution::LogNormal => "lognormal",
        }
    }

    /// Setup number of the benchmark (1 = normal, 2 = log-normal).
    pub fn setup(self) -> u8 {
        match self {
            GroupDistribution::Normal => 1,
            GroupDistribution::LogNormal => 2,
        }
    }
}

impl std::str::FromStr for GroupDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" | "1" => Ok(Self::Normal),
            "lognormal" | "log-normal" | "2" => Ok(Self::LogNormal),
            other => Err(Error::param(
                "setup",
                format!("expected normal or lognormal, got {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub group_sizes: Vec<usize>,
    pub p_inf: usize,
    pub p_noise: usize,
    /// Equicorrelation `rho` is drawn uniformly from this interval per group.
    pub rho_range: (f64, f64),
    /// The mean shift is drawn uniformly from `[-hi, -lo] U [lo, hi]`.
    pub mu_range: (f64, f64),
    pub outlier_fraction: f64,
    /// Outlier variance on informative coordinates, drawn per group.
    pub outlier_sigma_range: (f64, f64),
    pub distribution: GroupDistribution,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            group_sizes: vec![150, 150, 100],
            p_inf: 50,
            p_noise: 0,
            rho_range: (0.1, 0.9),
            mu_range: (3.0, 6.0),
            outlier_fraction: 0.05,
            outlier_sigma_range: (3.0, 9.0),
            distribution: GroupDistribution::Normal,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let ordered = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 <= r.1;
        if self.group_sizes.len() != 3 {
            return Err(Error::param(
                "group_sizes",
                format!(
                    "the mean pattern needs exactly 3 groups, got {}",
                    self.group_sizes.len()
                ),
            ));
        }
        if self.group_sizes.contains(&0) {
            return Err(Error::param("group_sizes", "groups must be non-empty"));
        }
        if self.p_inf == 0 {
            return Err(Error::param("p_inf", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return Err(Error::param(
                "outlier_fraction",
                format!("must lie in [0, 1), got {}", self.outlier_fraction),
            ));
        }
        if !ordered(self.rho_range) {
            return Err(Error::param(
                "rho_range",
                "must be an ordered finite interval",
            ));
        }
        if !ordered(self.mu_range) || self.mu_range.0 < 0.0 {
            return Err(Error::param(
                "mu_range",
                "must be an ordered interval of magnitudes >= 0",
            ));
        }
        if !ordered(self.outlier_sigma_range) || !(self.outlier_sigma_range.0 > 0.0) {
            return Err(Error::param(
                "outlier_sigma_range",
                "must be an ordered interval of positive variances",
            ));
        }
        check_rho(self.rho_range.0, self.p_inf)?;
        check_rho(self.rho_range.1, self.p_inf)?;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    pub fn p(&self) -> usize {
        self.p_inf + self.p_noise
    }

    /// Outliers injected into a group of `size` observations.
    pub fn outliers_in(&self, size: usize) -> usize {
        round_half_up(self.outlier_fraction * size as f64).min(size)
    }
}

fn round_half_up(v: f64) -> usize {
    // 0.05 * 150 is stored a hair below 7.5 on some paths
    (v + 0.5 + 1e-9).floor() as usize
}

fn check_rho(rho: f64, p_inf: usize) -> Result<()> {
    let lower = if p_inf > 1 {
        -1.0 / (p_inf as f64 - 1.0)
    } else {
        f64::NEG_INFINITY
    };
    if !(rho > lower && rho < 1.0) {
        return Err(Error::param(
            "rho",
            format!(
                "{rho} gives a singular or indefinite equicorrelation matrix for p_inf = {p_inf}"
            ),
        ));
    }
    Ok(())
}

/// Parameters drawn while generating a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationDraws {
    pub mu: f64,
    pub rho: Vec<f64>,
    pub outlier_sigma: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub x: DataMatrix,
    /// 1 marks an injected outlier.
    pub labels: Vec<u8>,
    pub group_ids: Vec<usize>,
    pub config: SimulationConfig,
    pub draws: SimulationDraws,
    pub warnings: Vec<Warning>,
}

impl LabeledDataset {
    /// One-line summary of the seed and every sampled parameter.
    pub fn provenance(&self) -> String {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:.6}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        format!(
            "seed={} setup={} n={} p_inf={} p_noise={} mu={:.6} rho=[{}] outlier_sigma=[{}] outliers={}",
            self.config.seed,
            self.config.distribution.name(),
            self.x.nrows(),
            self.config.p_inf,
            self.config.p_noise,
            self.draws.mu,
            list(&self.draws.rho),
            list(&self.draws.outlier_sigma),
            self.labels.iter().filter(|&&l| l == 1).count(),
        )
    }
}

/// Independent generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Haar-distributed rotation: QR of a Gaussian matrix with the signs of
/// R's diagonal folded into Q.
pub fn random_rotation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    assert!(d >= 1, "rotation dimension must be at least 1");
    let g = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        if r[(j, j)] < 0.0 {
            col.neg_mut();
        }
    }
    q
}

/// Equicorrelation matrix of size `p`.
pub fn equicorrelation(rho: f64, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho })
}

/// Full group covariance: rotated equicorrelation on the informative block,
/// identity on the noise block.
pub fn group_covariance(
    rho: f64,
    rotation: &DMatrix<f64>,
    p_inf: usize,
    p_noise: usize,
) -> Result<DMatrix<f64>> {
    check_rho(rho, p_inf)?;
    if rotation.shape() != (p_inf, p_inf) {
        return Err(Error::DimensionMismatch {
            expected: p_inf,
            found: rotation.nrows(),
        });
    }
    let inf = informative_covariance(rho, rotation);
    let p = p_inf + p_noise;
    let mut cov = DMatrix::zeros(p, p);
    cov.view_mut((0, 0), (p_inf, p_inf)).copy_from(&inf);
    for j in p_inf..p {
        cov[(j, j)] = 1.0;
    }
    Ok(cov)
}

fn informative_covariance(rho: f64, rotation: &DMatrix<f64>) -> DMatrix<f64> {
    let p = rotation.nrows();
    let c = rotation * equicorrelation(rho, p) * rotation.transpose();
    // symmetrize rounding noise
    (&c + c.transpose()) * 0.5
}

/// Informative means (rows = groups): coordinate `j` of group `g` is `mu`
/// when `j % 3 == g`, else 0. Noise coordinates always have mean 0.
pub fn group_means(n_groups: usize, p_inf: usize, mu: f64) -> Result<DMatrix<f64>> {
    if n_groups != 3 {
        return Err(Error::param(
            "n_groups",
            format!("the cyclic mean pattern is defined for 3 groups, got {n_groups}"),
        ));
    }
    Ok(DMatrix::from_fn(3, p_inf, |g, j| {
        if j % 3 == g {
            mu
        } else {
            0.0
        }
    }))
}

const GLOBAL_STREAM: u64 = 0;

fn group_stream(group: usize, which: u64) -> u64 {
    1 + 4 * group as u64 + which
}

const PARAMS: u64 = 0;
const INFORMATIVE: u64 = 1;
const NOISE: u64 = 2;
const OUTLIERS: u64 = 3;

/// Generates one labeled dataset.
pub fn generate(config: &SimulationConfig) -> Result<LabeledDataset> {
    config.validate()?;
    let (p_inf, p) = (config.p_inf, config.p());
    let n = config.n();

    let mut global = substream(config.seed, GLOBAL_STREAM);
    let magnitude = global.random_range(config.mu_range.0..=config.mu_range.1);
    let mu = if global.random_bool(0.5) {
        magnitude
    } else {
        -magnitude
    };
    let means = group_means(config.group_sizes.len(), p_inf, mu)?;

    let mut values = DMatrix::zeros(n, p);
    let mut labels = vec![0u8; n];
    let mut group_ids = Vec::with_capacity(n);
    let mut draws = SimulationDraws {
        mu,
        rho: Vec::new(),
        outlier_sigma: Vec::new(),
    };
    let mut warnings = Vec::new();

    let mut offset = 0;
    for (g, &size) in config.group_sizes.iter().enumerate() {
        let mut params = substream(config.seed, group_stream(g, PARAMS));
        let rho = params.random_range(config.rho_range.0..=config.rho_range.1);
        let rotation = random_rotation(p_inf, &mut params);
        let sigma =
            params.random_range(config.outlier_sigma_range.0..=config.outlier_sigma_range.1);
        let n_out = config.outliers_in(size);
        if config.outlier_fraction > 0.0 && n_out == 0 {
            warnings.push(Warning::NoOutliersInGroup { group: g, size });
        }
        let mut outlier_rows = index::sample(&mut params, size, n_out).into_vec();
        outlier_rows.sort_unstable();
        draws.rho.push(rho);
        draws.outlier_sigma.push(sigma);

        let cov = informative_covariance(rho, &rotation);
        let chol = Cholesky::new(cov).ok_or_else(|| {
            Error::Numerical(format!("group {g} covariance is not positive definite"))
        })?;
        let l = chol.l();
        let mean = means.row(g).transpose();

        let mut inf_rng = substream(config.seed, group_stream(g, INFORMATIVE));
        let mut noise_rng = substream(config.seed, group_stream(g, NOISE));
        let mut out_rng = substream(config.seed, group_stream(g, OUTLIERS));
        let sd = sigma.sqrt();
        for i in 0..size {
            let z = DVector::from_fn(p_inf, |_, _| StandardNormal.sample(&mut inf_rng));
            let row = offset + i;
            if outlier_rows.binary_search(&i).is_ok() {
                for j in 0..p_inf {
                    let e: f64 = StandardNormal.sample(&mut out_rng);
                    values[(row, j)] = mean[j] + sd * e;
                }
                labels[row] = 1;
            } else {
                let x = &mean + &l * z;
                for j in 0..p_inf {
                    values[(row, j)] = x[j];
                }
            }
            for j in p_inf..p {
                values[(row, j)] = StandardNormal.sample(&mut noise_rng);
            }
            group_ids.push(g);
        }
        offset += size;
    }

    if config.distribution == GroupDistribution::LogNormal {
        values.apply(|v| *v = v.exp());
    }

    let col_ids = (1..=p).map(|j| format!("x{j}")).collect();
    let x = DataMatrix::new(values)?.with_col_ids(col_ids)?;
    Ok(LabeledDataset {
        x,
        labels,
        group_ids,
        config: config.clone(),
        draws,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    #[test]
    fn rotation_of_dimension_one_is_a_sign() {
        let mut rng = substream(1, 0);
        for _ in 0..10 {
            let q = random_rotation(1, &mut rng);
            assert_eq!(q[(0, 0)].abs(), 1.0);
        }
    }

    #[test]
    fn rotations_are_orthonormal_and_replayable() {
        for d in [2, 5, 50] {
            let q = random_rotation(d, &mut substream(7, 3));
            assert!((q.tr_mul(&q) - DMatrix::identity(d, d)).amax() <= 1e-10);
            assert_eq!(q, random_rotation(d, &mut substream(7, 3)));
        }
    }

    #[test]
    fn rotation_preserves_spectrum() {
        let mut rng = substream(11, 0);
        let a: DMatrix<f64> = DMatrix::from_fn(6, 6, |_, _| StandardNormal.sample(&mut rng));
        let spd = &a * a.transpose() + DMatrix::identity(6, 6);
        let q = random_rotation(6, &mut rng);
        let rotated: DMatrix<f64> = &q * &spd * q.transpose();
        let rotated = (&rotated + rotated.transpose()) * 0.5;
        let (e1, e2) = (sorted_eigenvalues(spd), sorted_eigenvalues(rotated));
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn covariance_blocks() {
        let q = random_rotation(5, &mut substream(2, 0));
        let cov = group_covariance(0.0, &q, 5, 3).unwrap();
        assert!((cov.view((0, 0), (5, 5)) - DMatrix::<f64>::identity(5, 5)).amax() <= 1e-12);
        let cov = group_covariance(0.4, &q, 5, 3).unwrap();
        for i in 0..5 {
            for j in 5..8 {
                assert_eq!(cov[(i, j)], 0.0);
                assert_eq!(cov[(j, i)], 0.0);
            }
        }
        assert_eq!(cov.view((5, 5), (3, 3)), DMatrix::<f64>::identity(3, 3));
    }

    #[test]
    fn equicorrelation_spectrum() {
        let (p, rho) = (8, 0.35);
        let q = random_rotation(p, &mut substream(3, 0));
        let cov = group_covariance(rho, &q, p, 0).unwrap();
        let ev = sorted_eigenvalues(cov);
        for v in &ev[..p - 1] {
            assert!((v - (1.0 - rho)).abs() <= 1e-8);
        }
        assert!((ev[p - 1] - (1.0 + (p as f64 - 1.0) * rho)).abs() <= 1e-8);
    }

    #[test]
    fn rho_outside_spd_range() {
        let q = random_rotation(4, &mut substream(0, 0));
        assert!(group_covariance(1.0, &q, 4, 0).is_err());
        assert!(group_covariance(-0.4, &q, 4, 0).is_err());
        assert!(group_covariance(-0.3, &q, 4, 0).is_ok());
    }

    #[test]
    fn cyclic_means() {
        let m = group_means(3, 3, 5.0).unwrap();
        assert_eq!(
            m,
            DMatrix::from_row_slice(3, 3, &[5., 0., 0., 0., 5., 0., 0., 0., 5.])
        );
        let m = group_means(3, 4, 5.0).unwrap();
        assert_eq!(
            m.row(0).iter().copied().collect::<Vec<_>>(),
            vec![5., 0., 0., 5.]
        );
        assert_eq!(group_means(3, 7, 0.0).unwrap().amax(), 0.0);
        assert!(group_means(2, 4, 1.0).is_err());
    }

    #[test]
    fn default_dataset_shape_and_outlier_count() {
        let ds = generate(&SimulationConfig::default()).unwrap();
        assert_eq!((ds.x.nrows(), ds.x.ncols()), (400, 50));
        // round-half-up of 7.5, 7.5, 5
        assert_eq!(ds.labels.iter().filter(|&&l| l == 1).count(), 21);
        assert_eq!(ds.group_ids.len(), 400);
        assert_eq!(ds.group_ids.iter().filter(|&&g| g == 2).count(), 100);
        for g in 0..3 {
            let count = ds
                .labels
                .iter()
                .zip(&ds.group_ids)
                .filter(|(&l, &gid)| l == 1 && gid == g)
                .count();
            assert_eq!(count, [8, 8, 5][g]);
        }
    }

    #[test]
    fn seeded_generation_is_bitwise_reproducible() {
        let cfg = SimulationConfig {
            p_noise: 20,
            seed: 42,
            ..Default::default()
        };
        let (a, b) = (generate(&cfg).unwrap(), generate(&cfg).unwrap());
        assert_eq!(a.x, b.x);
        assert_eq!(a.labels, b.labels);
        let c = generate(&SimulationConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn noise_dimension_does_not_perturb_informative_part() {
        let base = SimulationConfig {
            seed: 5,
            ..Default::default()
        };
        let a = generate(&base).unwrap();
        let b = generate(&SimulationConfig {
            p_noise: 30,
            ..base.clone()
        })
        .unwrap();
        assert_eq!(a.x.values(), &b.x.values().columns(0, 50).into_owned());
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn lognormal_is_exp_of_normal() {
        let base = SimulationConfig {
            p_noise: 5,
            seed: 9,
            ..Default::default()
        };
        let normal = generate(&base).unwrap();
        let lognormal = generate(&SimulationConfig {
            distribution: GroupDistribution::LogNormal,
            ..base
        })
        .unwrap();
        assert!(lognormal.x.values().iter().all(|&v| v > 0.0));
        let diff = (normal.x.values().map(f64::exp) - lognormal.x.values()).amax();
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn no_injection() {
        let ds = generate(&SimulationConfig {
            group_sizes: vec![10, 10, 10],
            outlier_fraction: 0.0,
            ..Default::default()
        })
        .unwrap();
        assert_eq!((ds.x.nrows(), ds.x.ncols()), (30, 50));
        assert!(ds.labels.iter().all(|&l| l == 0));
        assert!(ds.warnings.is_empty());
    }

    #[test]
    fn tiny_group_warns() {
        let ds = generate(&SimulationConfig {
            group_sizes: vec![40, 40, 5],
            ..Default::default()
        })
        .unwrap();
        assert_eq!(
            ds.warnings,
            vec![Warning::NoOutliersInGroup { group: 2, size: 5 }]
        );
        assert_eq!(ds.labels.iter().filter(|&&l| l == 1).count(), 4);
    }

    #[test]
    fn invalid_configs() {
        let bad = |f: &dyn Fn(&mut SimulationConfig)| {
            let mut c = SimulationConfig::default();
            f(&mut c);
            generate(&c).is_err()
        };
        assert!(bad(&|c| c.outlier_fraction = 1.0));
        assert!(bad(&|c| c.p_inf = 0));
        assert!(bad(&|c| c.group_sizes = vec![10, 10]));
        assert!(bad(&|c| c.rho_range = (0.9, 0.1)));
        assert!(bad(&|c| c.rho_range = (0.1, 1.0)));
        assert!(bad(&|c| c.outlier_sigma_range = (0.0, 2.0)));
    }

    #[test]
    fn monte_carlo_covariance() {
        let cfg = SimulationConfig {
            group_sizes: vec![10_000, 1, 1],
            p_inf: 5,
            outlier_fraction: 0.0,
            seed: 3,
            ..Default::default()
        };
        let ds = generate(&cfg).unwrap();
        let mut params = substream(cfg.seed, group_stream(0, PARAMS));
        let rho = params.random_range(cfg.rho_range.0..=cfg.rho_range.1);
        let q = random_rotation(5, &mut params);
        let sigma = group_covariance(rho, &q, 5, 0).unwrap();
        assert_eq!(rho, ds.draws.rho[0]);

        let block = ds.x.values().rows(0, 10_000).into_owned();
        let mean = block.row_mean();
        let centered = DMatrix::from_fn(10_000, 5, |i, j| block[(i, j)] - mean[j]);
        let sample = centered.tr_mul(&centered) / 9_999.0;
        assert!((sample - sigma).amax() < 0.1);
    }

    #[test]
    fn noise_coordinates_are_standard() {
        let cfg = SimulationConfig {
            group_sizes: vec![4_000, 3_000, 3_000],
            p_inf: 3,
            p_noise: 4,
            seed: 21,
            ..Default::default()
        };
        let ds = generate(&cfg).unwrap();
        let inliers: Vec<usize> = (0..ds.x.nrows()).filter(|&i| ds.labels[i] == 0).collect();
        for j in 3..7 {
            let col: Vec<f64> = inliers.iter().map(|&i| ds.x.values()[(i, j)]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
            assert!(
                mean.abs() < 0.05 && (var - 1.0).abs() < 0.05,
                "{mean} {var}"
            );
        }
    }
}
