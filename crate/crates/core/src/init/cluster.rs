//! Robust principal-component projection and the "clean" Ward cluster.

use nalgebra::{DMatrix, SymmetricEigen};

use super::ward::{ward_hclust, Dendrogram};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{median_mad_unchecked, qn};

const CORR_CLIP: f64 = 0.999;

#[derive(Debug, Clone)]
pub struct ClusterProjection {
    /// Median/MAD standardized data, zero at missing cells.
    pub z: DMatrix<f64>,
    /// Robust correlation matrix.
    pub r: DMatrix<f64>,
    /// Eigenvalues in decreasing order.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors with positive eigenvalue, as columns.
    pub basis: DMatrix<f64>,
    /// Projected and re-standardized scores.
    pub scores: DMatrix<f64>,
}

/// Median/MAD standardization, robust correlation, projection on the
/// positive-eigenvalue basis and column-wise re-standardization.
pub fn cluster_projection(data: &Dataset) -> Result<ClusterProjection> {
    let (n, p) = (data.n(), data.p());
    let mut z = DMatrix::zeros(n, p);
    for j in 0..p {
        let obs = data.column_observed(j);
        if obs.len() < 2 {
            return Err(Error::SampleTooSmall {
                needed: 2,
                got: obs.len(),
            });
        }
        let vals: Vec<f64> = obs.iter().map(|&(_, v)| v).collect();
        let ls = median_mad_unchecked(&vals, true);
        if !(ls.scale > 0.0) {
            return Err(Error::DegenerateDispersion { column: j });
        }
        for (i, v) in obs {
            z[(i, j)] = (v - ls.location) / ls.scale;
        }
    }

    let mask = data.mask();
    let mut r = DMatrix::identity(p, p);
    for j in 0..p {
        for k in (j + 1)..p {
            let rows: Vec<usize> = (0..n).filter(|&i| mask.get(i, j) && mask.get(i, k)).collect();
            let v = if rows.len() < 2 {
                0.0
            } else {
                let plus: Vec<f64> = rows.iter().map(|&i| z[(i, j)] + z[(i, k)]).collect();
                let minus: Vec<f64> = rows.iter().map(|&i| z[(i, j)] - z[(i, k)]).collect();
                let (sp, sm) = (qn(&plus)?, qn(&minus)?);
                (0.25 * (sp * sp - sm * sm)).clamp(-CORR_CLIP, CORR_CLIP)
            };
            r[(j, k)] = v;
            r[(k, j)] = v;
        }
    }

    let eig = SymmetricEigen::new(r.clone());
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&a| eig.eigenvalues[a]).collect();
    let tol = 1e-10 * eigenvalues[0].abs().max(1.0);
    let keep: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&a| eig.eigenvalues[a] > tol)
        .collect();
    let mut basis = DMatrix::zeros(p, keep.len());
    for (c, &a) in keep.iter().enumerate() {
        let mut v = eig.eigenvectors.column(a).into_owned();
        let lead = v.iter().copied().enumerate().fold((0, 0.0_f64), |acc, (i, x)| {
            if x.abs() > acc.1.abs() {
                (i, x)
            } else {
                acc
            }
        });
        if lead.1 < 0.0 {
            v = -v;
        }
        basis.set_column(c, &v);
    }

    let mut scores = &z * &basis;
    for c in 0..scores.ncols() {
        let col: Vec<f64> = scores.column(c).iter().copied().collect();
        let ls = median_mad_unchecked(&col, true);
        let s = if ls.scale > 0.0 { ls.scale } else { 1.0 };
        for i in 0..n {
            scores[(i, c)] = (scores[(i, c)] - ls.location) / s;
        }
    }
    Ok(ClusterProjection {
        z,
        r,
        eigenvalues,
        basis,
        scores,
    })
}

pub fn euclidean_dissimilarity(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (x.row(i) - x.row(j)).norm();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// The cases of the smallest Ward cluster holding at least half the sample.
pub fn clean_cluster(data: &Dataset) -> Result<(Vec<usize>, Dendrogram)> {
    let proj = cluster_projection(data)?;
    let dg = ward_hclust(&euclidean_dissimilarity(&proj.scores))?;
    Ok((dg.clean_cluster(), dg))
}
