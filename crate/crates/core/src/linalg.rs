//! Per-missingness-pattern linear algebra: partial Mahalanobis distances,
//! conditional means and conditional covariances under a Gaussian model.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::data::{Dataset, Mask};
use crate::error::{Error, Result};

/// Rows sharing one observation pattern.
#[derive(Debug, Clone)]
pub struct PatternGroup {
    pub observed: Vec<usize>,
    pub missing: Vec<usize>,
    pub rows: Vec<usize>,
}

/// Rows of a mask grouped by observation pattern; fully missing rows are set aside.
#[derive(Debug, Clone)]
pub struct Patterns {
    pub groups: Vec<PatternGroup>,
    pub dropped: Vec<usize>,
    /// Observed dimension of every row (0 for dropped rows).
    pub dims: Vec<usize>,
    pub p: usize,
}

impl Patterns {
    pub fn from_mask(mask: &Mask) -> Self {
        let (n, p) = mask.dims();
        let mut by_pattern: BTreeMap<&[bool], Vec<usize>> = BTreeMap::new();
        let mut dropped = Vec::new();
        let mut dims = vec![0; n];
        for i in 0..n {
            let row = mask.row(i);
            dims[i] = row.iter().filter(|&&o| o).count();
            if dims[i] == 0 {
                dropped.push(i);
            } else {
                by_pattern.entry(row).or_default().push(i);
            }
        }
        let groups = by_pattern
            .into_iter()
            .map(|(pattern, rows)| PatternGroup {
                observed: (0..p).filter(|&j| pattern[j]).collect(),
                missing: (0..p).filter(|&j| !pattern[j]).collect(),
                rows,
            })
            .collect();
        Patterns {
            groups,
            dropped,
            dims,
            p,
        }
    }

    pub fn retained(&self) -> usize {
        self.dims.len() - self.dropped.len()
    }

    /// Name of the first coordinate pair never observed together, if any.
    pub fn unidentified_pair(&self) -> Option<(usize, usize)> {
        let p = self.p;
        let mut seen = vec![false; p * p];
        for g in &self.groups {
            for &j in &g.observed {
                for &k in &g.observed {
                    seen[j * p + k] = true;
                }
            }
        }
        (0..p)
            .flat_map(|j| (j..p).map(move |k| (j, k)))
            .find(|&(j, k)| !seen[j * p + k])
    }
}

pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])])
}

pub fn cholesky(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m).ok_or(Error::NotPositiveDefinite)
}

pub fn log_det_chol(ch: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Log-determinant of a symmetric positive definite matrix.
pub fn log_det_spd(m: &DMatrix<f64>) -> Result<f64> {
    Ok(log_det_chol(&cholesky(m.clone())?))
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Ratio of extreme eigenvalues of a symmetric matrix; infinite if not positive definite.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let ev = m.clone().symmetric_eigenvalues();
    let max = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Log-determinant of the observed block for every pattern group.
pub fn group_log_dets(patterns: &Patterns, sigma: &DMatrix<f64>) -> Result<Vec<f64>> {
    patterns
        .groups
        .par_iter()
        .map(|g| log_det_spd(&submatrix(sigma, &g.observed, &g.observed)))
        .collect()
}

/// Per-row quantities of one Gaussian E-step.
#[derive(Debug, Clone)]
pub struct EStep {
    /// Rows with missing coordinates replaced by conditional means; dropped rows are NaN.
    pub completed: DMatrix<f64>,
    /// Partial squared Mahalanobis distances; NaN for dropped rows.
    pub distances: Vec<f64>,
    /// log |Sigma_oo| of each row's observed block; NaN for dropped rows.
    pub log_dets: Vec<f64>,
    /// Conditional covariance of the missing block per group, padded to p x p.
    pub cond_cov: Vec<DMatrix<f64>>,
    /// Group index of every row (usize::MAX for dropped rows).
    pub group_of: Vec<usize>,
}

impl EStep {
    /// Updates the quantities for a rescaled scatter `lambda * sigma`.
    pub fn rescale(&mut self, lambda: f64, dims: &[usize]) {
        let ln = lambda.ln();
        for (i, d) in self.distances.iter_mut().enumerate() {
            if dims[i] > 0 {
                *d /= lambda;
                self.log_dets[i] += dims[i] as f64 * ln;
            }
        }
        for c in &mut self.cond_cov {
            *c *= lambda;
        }
    }
}

struct GroupResult {
    rows: Vec<(usize, DVector<f64>, f64)>,
    log_det: f64,
    cond_cov: DMatrix<f64>,
}

fn group_e_step(data: &Dataset, g: &PatternGroup, mu: &DVector<f64>, sigma: &DMatrix<f64>, complete: bool) -> Result<GroupResult> {
    let p = mu.len();
    let s_oo = submatrix(sigma, &g.observed, &g.observed);
    let ch = cholesky(s_oo)?;
    let log_det = log_det_chol(&ch);
    let x = data.values();
    let need_missing = complete && !g.missing.is_empty();
    let s_mo = if need_missing {
        submatrix(sigma, &g.missing, &g.observed)
    } else {
        DMatrix::zeros(0, 0)
    };
    let mut rows = Vec::with_capacity(g.rows.len());
    for &i in &g.rows {
        let r = DVector::from_iterator(g.observed.len(), g.observed.iter().map(|&j| x[(i, j)] - mu[j]));
        let a = ch.solve(&r);
        let d = r.dot(&a).max(0.0);
        let mut full = DVector::zeros(if complete { p } else { 0 });
        if complete {
            for &j in &g.observed {
                full[j] = x[(i, j)];
            }
            if need_missing {
                let cm = &s_mo * &a;
                for (t, &j) in g.missing.iter().enumerate() {
                    full[j] = mu[j] + cm[t];
                }
            }
        }
        rows.push((i, full, d));
    }
    let mut cond_cov = DMatrix::zeros(if complete { p } else { 0 }, if complete { p } else { 0 });
    if need_missing {
        let s_mm = submatrix(sigma, &g.missing, &g.missing);
        let sol = ch.solve(&s_mo.transpose());
        let c = s_mm - &s_mo * sol;
        for (a, &j) in g.missing.iter().enumerate() {
            for (b, &k) in g.missing.iter().enumerate() {
                cond_cov[(j, k)] = 0.5 * (c[(a, b)] + c[(b, a)]);
            }
        }
    }
    Ok(GroupResult {
        rows,
        log_det,
        cond_cov,
    })
}

fn run(data: &Dataset, patterns: &Patterns, mu: &DVector<f64>, sigma: &DMatrix<f64>, complete: bool) -> Result<EStep> {
    let (n, p) = (data.n(), data.p());
    let results: Vec<Result<GroupResult>> = patterns
        .groups
        .par_iter()
        .map(|g| group_e_step(data, g, mu, sigma, complete))
        .collect();
    let mut completed = DMatrix::from_element(if complete { n } else { 0 }, p, f64::NAN);
    let mut distances = vec![f64::NAN; n];
    let mut log_dets = vec![f64::NAN; n];
    let mut group_of = vec![usize::MAX; n];
    let mut cond_cov = Vec::with_capacity(results.len());
    for (gi, res) in results.into_iter().enumerate() {
        let res = res?;
        for (i, full, d) in res.rows {
            if complete {
                completed.set_row(i, &full.transpose());
            }
            distances[i] = d;
            log_dets[i] = res.log_det;
            group_of[i] = gi;
        }
        cond_cov.push(res.cond_cov);
    }
    Ok(EStep {
        completed,
        distances,
        log_dets,
        cond_cov,
        group_of,
    })
}

/// Conditional-mean completion, partial distances and conditional covariances.
pub fn e_step(data: &Dataset, patterns: &Patterns, mu: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<EStep> {
    run(data, patterns, mu, sigma, true)
}

/// Partial distances and observed-block log-determinants only.
pub fn partial_distances(data: &Dataset, patterns: &Patterns, mu: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<EStep> {
    run(data, patterns, mu, sigma, false)
}
