//! Maximum likelihood for the multivariate normal with ignorable missingness.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{e_step, symmetrize, EStep, Patterns};

#[derive(Debug, Clone)]
pub struct EmFit {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Observed-data log-likelihood before each update, then at the final estimate.
    pub log_likelihood: Vec<f64>,
}

/// Observed-data Gaussian log-likelihood from an E-step.
pub fn observed_log_likelihood(es: &EStep, dims: &[usize]) -> f64 {
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    dims.iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .map(|(i, &k)| -0.5 * (k as f64 * ln2pi + es.log_dets[i] + es.distances[i]))
        .sum()
}

fn starting_values(data: &Dataset) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let p = data.p();
    let mut mu = DVector::zeros(p);
    let mut sigma = DMatrix::zeros(p, p);
    for j in 0..p {
        let col: Vec<f64> = data.column_observed(j).into_iter().map(|(_, v)| v).collect();
        if col.len() < 2 {
            return Err(Error::NonIdentifiable(format!("coordinate {} observed fewer than twice", j)));
        }
        let m = col.iter().sum::<f64>() / col.len() as f64;
        let v = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / col.len() as f64;
        if !(v > 0.0) {
            return Err(Error::SingularScatter(f64::INFINITY));
        }
        mu[j] = m;
        sigma[(j, j)] = v;
    }
    Ok((mu, sigma))
}

fn m_step(es: &EStep, dims: &[usize], p: usize) -> (DVector<f64>, DMatrix<f64>) {
    let rows: Vec<usize> = (0..dims.len()).filter(|&i| dims[i] > 0).collect();
    let n = rows.len() as f64;
    let mut mu = DVector::zeros(p);
    for &i in &rows {
        mu += es.completed.row(i).transpose();
    }
    mu /= n;
    let mut sigma = DMatrix::zeros(p, p);
    let mut counts = vec![0usize; es.cond_cov.len()];
    for &i in &rows {
        let r = es.completed.row(i).transpose() - &mu;
        sigma.ger(1.0, &r, &r, 1.0);
        counts[es.group_of[i]] += 1;
    }
    for (c, &k) in es.cond_cov.iter().zip(&counts) {
        if k > 0 && c.nrows() == p {
            sigma += c * k as f64;
        }
    }
    sigma /= n;
    symmetrize(&mut sigma);
    (mu, sigma)
}

fn e_step_with_ridge(data: &Dataset, patterns: &Patterns, mu: &DVector<f64>, sigma: &mut DMatrix<f64>) -> Result<EStep> {
    match e_step(data, patterns, mu, sigma) {
        Ok(es) => Ok(es),
        Err(Error::NotPositiveDefinite) => {
            let p = sigma.nrows();
            let bump = 1e-8 * sigma.trace() / p as f64;
            for j in 0..p {
                sigma[(j, j)] += bump;
            }
            e_step(data, patterns, mu, sigma).map_err(|e| match e {
                Error::NotPositiveDefinite => Error::SingularScatter(f64::INFINITY),
                other => other,
            })
        }
        Err(e) => Err(e),
    }
}

/// EM iterations until the log-likelihood gain per case drops below `tol`.
/// The gain, unlike the level, is unchanged by rescaling the coordinates.
pub fn gaussian_em(data: &Dataset, max_iter: usize, tol: f64) -> Result<EmFit> {
    let p = data.p();
    let patterns = Patterns::from_mask(data.mask());
    if let Some((j, k)) = patterns.unidentified_pair() {
        return Err(Error::NonIdentifiable(format!(
            "coordinates {} and {} are never observed together",
            j, k
        )));
    }
    let (mut mu, mut sigma) = starting_values(data)?;
    let cases = patterns.dims.iter().filter(|&&k| k > 0).count() as f64;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut es = e_step_with_ridge(data, &patterns, &mu, &mut sigma)?;
    let mut ll = observed_log_likelihood(&es, &patterns.dims);
    trace.push(ll);
    while iterations < max_iter {
        let (m, s) = m_step(&es, &patterns.dims, p);
        mu = m;
        sigma = s;
        iterations += 1;
        es = e_step_with_ridge(data, &patterns, &mu, &mut sigma)?;
        let next = observed_log_likelihood(&es, &patterns.dims);
        trace.push(next);
        let change = (next - ll).abs();
        ll = next;
        if change <= tol * cases {
            converged = true;
            break;
        }
    }
    Ok(EmFit {
        mu,
        sigma,
        iterations,
        converged,
        log_likelihood: trace,
    })
}
