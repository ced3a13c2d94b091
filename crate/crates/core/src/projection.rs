//! Local projections: per-core centering, scaling and SVD, and the core and
//! orthogonal distances of arbitrary observations.
//!
//! All coordinates are taken in the scaled frame of the core, i.e. after
//! subtracting the core mean and dividing by the core standard deviation.
//! The orthogonal representation lives in that frame too, so that
//! `scaled = basis * core_rep + orth_rep` holds exactly.

use nalgebra::{DMatrix, DVector, SVD};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::neighborhood::Core;

/// Quadratic form used for the core distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CdVariant {
    /// Core coordinates weighted by the inverse singular values.
    #[default]
    Literal,
    /// Core coordinates weighted by the inverse squared singular values.
    Mahalanobis,
}

/// What to do with a column that is constant within a core.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstantColumns {
    #[default]
    Error,
    /// Use a scale of 1 for that column.
    Unscaled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Singular values below `tol_rank * largest` are discarded.
    pub tol_rank: f64,
    pub constant_columns: ConstantColumns,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol_rank: 1e-10,
            constant_columns: ConstantColumns::Error,
        }
    }
}

/// The local model spanned by one core.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalProjection {
    pub mu: DVector<f64>,
    pub sigma: DVector<f64>,
    /// p x r, orthonormal columns (right singular vectors).
    pub basis: DMatrix<f64>,
    /// Retained singular values, descending.
    pub singular_values: DVector<f64>,
    pub core: Core,
}

/// One observation seen through a local projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPoint {
    pub core_rep: DVector<f64>,
    pub orth_rep: DVector<f64>,
    pub cd: f64,
    pub od: f64,
}

impl LocalProjection {
    #[inline]
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    #[inline]
    pub fn core_size(&self) -> usize {
        self.core.members.len()
    }

    /// Divisor of the core distance, `min(core_size - 1, p)`.
    pub fn cd_divisor(&self) -> f64 {
        (self.core_size() - 1).min(self.dim()) as f64
    }

    /// Maps every row of `x` into the scaled frame of this core (n x p).
    pub fn scale(&self, x: &DataMatrix) -> DMatrix<f64> {
        let mut s = x.values().clone();
        for (j, mut col) in s.column_iter_mut().enumerate() {
            let (m, sd) = (self.mu[j], self.sigma[j]);
            col.apply(|v| *v = (*v - m) / sd);
        }
        s
    }

    /// Core representations of scaled rows (n x r).
    pub fn core_coordinates(&self, scaled: &DMatrix<f64>) -> DMatrix<f64> {
        scaled * &self.basis
    }

    /// Core distance of every row of `coords`.
    pub fn core_distances(&self, coords: &DMatrix<f64>, variant: CdVariant) -> Vec<f64> {
        let div = self.cd_divisor();
        let w = self.cd_weights(variant);
        (0..coords.nrows())
            .map(|i| {
                let q: f64 = coords.row(i).iter().zip(&w).map(|(c, w)| c * c * w).sum();
                (q / div).sqrt()
            })
            .collect()
    }

    /// Orthogonal distance of every scaled row, given its core coordinates.
    pub fn orthogonal_distances(&self, scaled: &DMatrix<f64>, coords: &DMatrix<f64>) -> Vec<f64> {
        let mut orth = scaled.clone();
        orth.gemm(-1.0, coords, &self.basis.transpose(), 1.0);
        let mut ss = vec![0.0; orth.nrows()];
        for col in orth.column_iter() {
            for (acc, v) in ss.iter_mut().zip(col.iter()) {
                *acc += v * v;
            }
        }
        ss.into_iter().map(f64::sqrt).collect()
    }

    fn cd_weights(&self, variant: CdVariant) -> Vec<f64> {
        self.singular_values
            .iter()
            .map(|&d| match variant {
                CdVariant::Literal => 1.0 / d,
                CdVariant::Mahalanobis => 1.0 / (d * d),
            })
            .collect()
    }
}

/// Fits the local projection of `core`: column means and sample standard
/// deviations of the core rows, then the SVD of the centered, scaled core.
pub fn fit_projection(x: &DataMatrix, core: &Core, opts: &FitOptions) -> Result<LocalProjection> {
    let m = core.members.len();
    if m < 2 {
        return Err(Error::param(
            "core",
            format!("a core needs at least 2 members, got {m}"),
        ));
    }
    let p = x.ncols();
    let mut block = x.values().select_rows(core.members.iter());

    let mu = block.row_mean().transpose();
    let mut sigma = DVector::zeros(p);
    for (j, mut col) in block.column_iter_mut().enumerate() {
        let mean = mu[j];
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        let mut sd = (ss / (m - 1) as f64).sqrt();
        if !(sd > 0.0) {
            match opts.constant_columns {
                ConstantColumns::Error => {
                    return Err(Error::DegenerateCore {
                        initiator: Some(core.initiator),
                        column: j,
                    })
                }
                ConstantColumns::Unscaled => sd = 1.0,
            }
        }
        sigma[j] = sd;
        col.apply(|v| *v = (*v - mean) / sd);
    }

    // The centered core has an exact null direction (the ones vector), which
    // nalgebra's SVD does not resolve reliably. Rotating onto an orthonormal
    // basis of its complement removes it and leaves the singular values and
    // right singular vectors unchanged.
    let reduced = helmert(m).tr_mul(&block);
    let svd = SVD::try_new(reduced.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let (u, v_t) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let recon = u * DMatrix::from_diagonal(&svd.singular_values) * v_t;
    let scale = reduced.amax().max(f64::MIN_POSITIVE);
    if (recon - &reduced).amax() > 1e-8 * scale {
        return Err(Error::Numerical(format!(
            "inaccurate SVD for the core of observation {}",
            core.initiator
        )));
    }
    let right = v_t.transpose();
    let values = svd.singular_values;

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let largest = values[order[0]];
    if !(largest > 0.0) {
        return Err(Error::Numerical("core has no variation".into()));
    }
    let keep: Vec<usize> = order
        .into_iter()
        .take_while(|&i| values[i] >= opts.tol_rank * largest)
        .collect();

    let basis = DMatrix::from_fn(p, keep.len(), |i, j| right[(i, keep[j])]);
    let singular_values = DVector::from_iterator(keep.len(), keep.iter().map(|&i| values[i]));

    Ok(LocalProjection {
        mu,
        sigma,
        basis,
        singular_values,
        core: core.clone(),
    })
}

/// m x (m - 1) Helmert contrasts: orthonormal columns orthogonal to the ones vector.
fn helmert(m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m - 1, |i, j| {
        let t = (j + 1) as f64;
        let norm = (t * (t + 1.0)).sqrt();
        if i <= j {
            1.0 / norm
        } else if i == j + 1 {
            -t / norm
        } else {
            0.0
        }
    })
}

/// Projects a single observation.
pub fn project_point(
    x: &[f64],
    proj: &LocalProjection,
    variant: CdVariant,
) -> Result<ProjectedPoint> {
    if x.len() != proj.dim() {
        return Err(Error::DimensionMismatch {
            expected: proj.dim(),
            found: x.len(),
        });
    }
    let scaled = DVector::from_iterator(
        x.len(),
        x.iter()
            .zip(proj.mu.iter().zip(proj.sigma.iter()))
            .map(|(v, (m, s))| (v - m) / s),
    );
    let core_rep = proj.basis.tr_mul(&scaled);
    let orth_rep = &scaled - &proj.basis * &core_rep;
    let cd = core_distance(core_rep.as_slice(), proj, variant)?;
    let od = orthogonal_distance(orth_rep.as_slice());
    Ok(ProjectedPoint {
        core_rep,
        orth_rep,
        cd,
        od,
    })
}

/// Core distance of a core representation.
pub fn core_distance(core_rep: &[f64], proj: &LocalProjection, variant: CdVariant) -> Result<f64> {
    if core_rep.len() != proj.rank() {
        return Err(Error::DimensionMismatch {
            expected: proj.rank(),
            found: core_rep.len(),
        });
    }
    let q: f64 = core_rep
        .iter()
        .zip(proj.cd_weights(variant))
        .map(|(c, w)| c * c * w)
        .sum();
    Ok((q / proj.cd_divisor()).sqrt())
}

/// Euclidean norm of an orthogonal representation.
pub fn orthogonal_distance(orth_rep: &[f64]) -> f64 {
    orth_rep.iter().map(|v| v * v).sum::<f64>().sqrt()
}
