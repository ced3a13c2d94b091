//! Naive reference implementation of LocOut used as a test oracle.
//!
//! Shares no code with the library: distances by double loop, neighbors and
//! cores by full sorts, core spaces from an eigendecomposition of the scaled
//! Gram matrix, and explicit p x p projectors.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
}

pub fn distance(x: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    let mut ss = 0.0;
    for c in 0..x.ncols() {
        let d = x[(i, c)] - x[(j, c)];
        ss += d * d;
    }
    ss.sqrt()
}

pub fn knn(x: &DMatrix<f64>, y: usize, k: usize) -> Vec<usize> {
    let mut others: Vec<(f64, usize)> = (0..x.nrows())
        .filter(|&i| i != y)
        .map(|i| (distance(x, y, i), i))
        .collect();
    others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    others.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Sorted member indices of the core initiated by `y`.
pub fn core(x: &DMatrix<f64>, y: usize, k: usize, m: usize) -> Vec<usize> {
    let nb = knn(x, y, k);
    // key: m-th smallest distance, then the sum of the m smallest, then index
    let mut best = (f64::INFINITY, f64::INFINITY, usize::MAX);
    for &c in &nb {
        let mut ds: Vec<f64> = nb.iter().map(|&j| distance(x, c, j)).collect();
        ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let r = ds[m - 1];
        let s: f64 = ds[..m].iter().sum();
        if (r, s, c) < best {
            best = (r, s, c);
        }
    }
    let center = best.2;
    let mut by_center: Vec<(f64, usize)> =
        nb.iter().map(|&j| (distance(x, center, j), j)).collect();
    by_center.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut members: Vec<usize> = by_center.into_iter().take(m).map(|(_, j)| j).collect();
    members.sort_unstable();
    members
}

pub struct NaiveProjection {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// eigenvalues of the scaled Gram matrix (squared singular values)
    pub lambda: Vec<f64>,
    pub basis: DMatrix<f64>,
    pub projector: DMatrix<f64>,
    pub divisor: f64,
}

pub fn fit(x: &DMatrix<f64>, members: &[usize]) -> NaiveProjection {
    let (m, p) = (members.len(), x.ncols());
    let mut mu = vec![0.0; p];
    let mut sigma = vec![0.0; p];
    for c in 0..p {
        let vals: Vec<f64> = members.iter().map(|&i| x[(i, c)]).collect();
        let mean = vals.iter().sum::<f64>() / m as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
        mu[c] = mean;
        sigma[c] = var.sqrt();
    }
    let scaled = DMatrix::from_fn(m, p, |r, c| (x[(members[r], c)] - mu[c]) / sigma[c]);
    let gram = scaled.transpose() * &scaled;
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    // centered core of m generic points spans min(m - 1, p) dimensions
    let r = (m - 1).min(p);
    let keep = &order[..r];
    let basis = DMatrix::from_fn(p, r, |i, j| eig.eigenvectors[(i, keep[j])]);
    let lambda = keep.iter().map(|&i| eig.eigenvalues[i]).collect();
    let projector = &basis * basis.transpose();
    NaiveProjection {
        mu,
        sigma,
        lambda,
        basis,
        projector,
        divisor: r as f64,
    }
}

/// (cd, od, core representation, orthogonal representation) of `point`.
pub fn project(
    proj: &NaiveProjection,
    point: &[f64],
    mahalanobis: bool,
) -> (f64, f64, DVector<f64>, DVector<f64>) {
    let p = point.len();
    let scaled = DVector::from_fn(p, |c, _| (point[c] - proj.mu[c]) / proj.sigma[c]);
    let core_rep = proj.basis.transpose() * &scaled;
    let orth = (DMatrix::<f64>::identity(p, p) - &proj.projector) * &scaled;
    let mut q = 0.0;
    for (j, c) in core_rep.iter().enumerate() {
        let d = proj.lambda[j].sqrt();
        q += c * c / if mahalanobis { d * d } else { d };
    }
    let cd = (q / proj.divisor).sqrt();
    let od = orth.iter().map(|v| v * v).sum::<f64>().sqrt();
    (cd, od, core_rep, orth)
}

pub struct NaiveEnsemble {
    pub cores: Vec<Vec<usize>>,
    pub cd: DMatrix<f64>,
    pub od: DMatrix<f64>,
}

pub fn ensemble(x: &DMatrix<f64>, k: usize, m: usize, mahalanobis: bool) -> NaiveEnsemble {
    let n = x.nrows();
    let mut cd = DMatrix::zeros(n, n);
    let mut od = DMatrix::zeros(n, n);
    let mut cores = Vec::new();
    for y in 0..n {
        let members = core(x, y, k, m);
        let proj = fit(x, &members);
        for i in 0..n {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            let (c, o, _, _) = project(&proj, &row, mahalanobis);
            cd[(y, i)] = c;
            od[(y, i)] = o;
        }
        cores.push(members);
    }
    NaiveEnsemble { cores, cd, od }
}

/// Weights over all projections for observation `i`, straight from the formula.
pub fn weights(e: &NaiveEnsemble, i: usize) -> Vec<f64> {
    let n = e.cores.len();
    let contributing: Vec<usize> = (0..n).filter(|&y| !e.cores[y].contains(&i)).collect();
    let inv: Vec<f64> = contributing.iter().map(|&y| 1.0 / e.cd[(y, i)]).collect();
    let min = inv.iter().cloned().fold(f64::INFINITY, f64::min);
    let denom: f64 = inv.iter().map(|v| v - min).sum();
    let mut w = vec![0.0; n];
    for (idx, &y) in contributing.iter().enumerate() {
        w[y] = if denom < 1e-12 {
            1.0 / contributing.len() as f64
        } else {
            (inv[idx] - min) / denom
        };
    }
    w
}

pub fn locout(x: &DMatrix<f64>, k: usize, m: usize) -> Vec<f64> {
    let e = ensemble(x, k, m, false);
    (0..x.nrows())
        .map(|i| {
            let w = weights(&e, i);
            (0..x.nrows()).map(|y| w[y] * e.od[(y, i)]).sum()
        })
        .collect()
}
