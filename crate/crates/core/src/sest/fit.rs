use nalgebra::{DMatrix, DVector};

use super::mscale::{normalized_terms, row_log_dets, solve_mscale};
use super::rho::RhoSpec;
use super::ScatterEstimate;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{condition_number, e_step, symmetrize, EStep, Patterns};

const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 150,
            tol: 1e-6,
        }
    }
}

struct Iterate {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    objective: f64,
    terms: Vec<f64>,
    distances: Vec<f64>,
}

/// Weighted location and scatter step. `weights` multiply both the completed
/// outer products and the conditional covariance corrections; the scatter is
/// normalized by `sum_i w_i D_i / p_i`, its scale being fixed afterwards by the
/// constraint.
pub(crate) fn weighted_update(es: &EStep, weights: &[f64], dims: &[usize], p: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let mut wsum = 0.0;
    let mut mu = DVector::zeros(p);
    for (i, &w) in weights.iter().enumerate() {
        if dims[i] == 0 || w == 0.0 {
            continue;
        }
        wsum += w;
        mu.axpy(w, &es.completed.row(i).transpose(), 1.0);
    }
    if !(wsum > 0.0) {
        return Err(Error::DegenerateConfiguration("all case weights are zero".into()));
    }
    mu /= wsum;

    let mut sigma = DMatrix::zeros(p, p);
    let mut cond = vec![0.0; es.cond_cov.len()];
    let mut norm = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        if dims[i] == 0 || w == 0.0 {
            continue;
        }
        let r = es.completed.row(i).transpose() - &mu;
        sigma.ger(w, &r, &r, 1.0);
        let share = w * es.distances[i] / dims[i] as f64;
        cond[es.group_of[i]] += share;
        norm += share;
    }
    for (c, &a) in es.cond_cov.iter().zip(&cond) {
        if a != 0.0 && c.nrows() == p {
            sigma += c * a;
        }
    }
    if !(norm > 0.0) {
        return Err(Error::DegenerateConfiguration("weighted distances vanish".into()));
    }
    sigma /= norm;
    symmetrize(&mut sigma);
    Ok((mu, sigma))
}

/// Generalized S-estimate of location and scatter for incomplete data,
/// starting from `initial`, whose scatter also serves as the volume reference.
pub fn s_fit(data: &Dataset, initial: &ScatterEstimate, spec: &RhoSpec, opts: &FitOptions) -> Result<ScatterEstimate> {
    let p = data.p();
    if spec.dim() < p {
        return Err(Error::InvalidArgument("rho spec tabulated for fewer dimensions than the data".into()));
    }
    if initial.mu.len() != p || initial.sigma.shape() != (p, p) {
        return Err(Error::InvalidArgument("initial estimate has the wrong dimension".into()));
    }
    let patterns = Patterns::from_mask(data.mask());
    if patterns.retained() < p + 1 {
        return Err(Error::SampleTooSmall {
            needed: p + 1,
            got: patterns.retained(),
        });
    }
    if let Some((j, k)) = patterns.unidentified_pair() {
        return Err(Error::NonIdentifiable(format!(
            "coordinates {} and {} are never observed together",
            j, k
        )));
    }
    let dims = &patterns.dims;
    let omega = row_log_dets(&patterns, &initial.sigma)?;

    let mut mu = initial.mu.clone();
    let mut sigma = initial.sigma.clone();
    let mut best: Option<Iterate> = None;
    let mut prev = f64::INFINITY;
    let mut increases = 0;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..=opts.max_iter {
        let mut es = e_step(data, &patterns, &mu, &sigma)?;
        let raw: Vec<f64> = es
            .distances
            .iter()
            .zip(dims)
            .map(|(&d, &k)| if k > 0 { d / spec.c(k) } else { f64::NAN })
            .collect();
        let lambda = solve_mscale(&raw, dims, spec)?;
        es.rescale(lambda, dims);
        sigma *= lambda;
        let terms = normalized_terms(&es.distances, &es.log_dets, &omega, dims, spec);
        let objective = solve_mscale(&terms, dims, spec)?;
        iterations = iter;

        if best.as_ref().is_none_or(|b| objective < b.objective) {
            best = Some(Iterate {
                mu: mu.clone(),
                sigma: sigma.clone(),
                objective,
                terms: terms.clone(),
                distances: es.distances.clone(),
            });
        }
        if iter > 0 {
            if (prev - objective).abs() <= opts.tol * prev {
                converged = true;
                break;
            }
            if objective > prev {
                increases += 1;
                if increases >= 2 {
                    break;
                }
            } else {
                increases = 0;
            }
        }
        if iter == opts.max_iter {
            break;
        }
        prev = objective;

        let weights: Vec<f64> = (0..data.n())
            .map(|i| {
                let k = dims[i];
                if k == 0 {
                    return 0.0;
                }
                spec.weight(terms[i] / objective, k) * ((es.log_dets[i] - omega[i]) / k as f64).exp()
            })
            .collect();
        let (m, s) = weighted_update(&es, &weights, dims, p)?;
        let cond = condition_number(&s);
        if cond > MAX_CONDITION {
            return Err(Error::SingularScatter(cond));
        }
        mu = m;
        sigma = s;
    }

    let best = best.expect("at least one iterate is evaluated");
    let weights = (0..data.n())
        .map(|i| {
            let k = dims[i];
            if k == 0 {
                0.0
            } else {
                spec.weight(best.terms[i] / best.objective, k) / spec.max_weight(k)
            }
        })
        .collect();
    Ok(ScatterEstimate {
        mu: best.mu,
        sigma: best.sigma,
        weights,
        distances: best.distances,
        scale: best.objective,
        iterations,
        converged,
        dropped: patterns.dropped.clone(),
    })
}

/// S-estimate with Tukey's bisquare loss.
pub fn gse_fit(data: &Dataset, initial: &ScatterEstimate, opts: &FitOptions) -> Result<ScatterEstimate> {
    s_fit(data, initial, &RhoSpec::tukey(data.p())?, opts)
}

/// S-estimate with the dimension-adaptive Rocke loss.
pub fn gre_fit(data: &Dataset, initial: &ScatterEstimate, alpha: f64, opts: &FitOptions) -> Result<ScatterEstimate> {
    s_fit(data, initial, &RhoSpec::rocke(data.p(), alpha)?, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::e_step;
    use approx::assert_relative_eq;

    #[test]
    fn unit_weights_give_mean_and_proportional_covariance() {
        let rows: Vec<Vec<Option<f64>>> = (0..12)
            .map(|i| {
                let a = (i as f64 * 0.7).sin();
                let b = (i as f64 * 1.3).cos() + 0.5 * a;
                let c = (i as f64 * 0.4).sin() * 2.0 - b;
                vec![Some(a), Some(b), Some(c)]
            })
            .collect();
        let data = Dataset::from_rows(&rows).unwrap();
        let pats = Patterns::from_mask(data.mask());
        let mu0 = DVector::zeros(3);
        let es = e_step(&data, &pats, &mu0, &DMatrix::identity(3, 3)).unwrap();
        let (mu, sigma) = weighted_update(&es, &vec![1.0; 12], &pats.dims, 3).unwrap();
        let x = data.values();
        let mean = x.row_mean().transpose();
        assert_relative_eq!(mu, mean, epsilon = 1e-12);
        let centered = x - DMatrix::from_fn(12, 3, |_, j| mean[j]);
        let cov = centered.transpose() * &centered / 12.0;
        let ratio = sigma[(0, 0)] / cov[(0, 0)];
        assert_relative_eq!(sigma, cov * ratio, max_relative = 1e-10);
    }
}
