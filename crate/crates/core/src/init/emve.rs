//! Extended minimum volume ellipsoid by subsampling.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rayon::prelude::*;

use super::cluster::clean_cluster;
use super::em::gaussian_em;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{chi2_quantile, median_in_place};
use crate::linalg::{log_det_spd, partial_distances, Patterns};
use crate::rng::stream;
use crate::sest::ScatterEstimate;

/// Redraws allowed per candidate when a subsample's fit fails.
const ATTEMPTS_PER_CANDIDATE: u64 = 10;
/// EM iterations per subsample. Subsamples of size about p + 1 drift
/// towards singular fits if iterated to convergence.
pub const SUBSAMPLE_EM_ITERATIONS: usize = 5;
const SUBSAMPLE_EM_TOL: f64 = 1e-6;
pub const CONCENTRATION_STEPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsamplingMode {
    Uniform,
    Cluster,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsamplingPlan {
    pub mode: SubsamplingMode,
    pub n_subsamples: usize,
    /// Requested subsample size; `None` uses the mode's default.
    pub subsample_size: Option<usize>,
    /// EM iteration cap for each subsample fit.
    pub em_iterations: usize,
    /// Concentration steps applied to the winning candidate.
    pub concentration_steps: usize,
    pub seed: u64,
}

impl SubsamplingPlan {
    pub fn uniform(seed: u64) -> Self {
        SubsamplingPlan {
            mode: SubsamplingMode::Uniform,
            n_subsamples: 500,
            subsample_size: None,
            em_iterations: SUBSAMPLE_EM_ITERATIONS,
            concentration_steps: CONCENTRATION_STEPS,
            seed,
        }
    }

    pub fn cluster(seed: u64) -> Self {
        SubsamplingPlan {
            mode: SubsamplingMode::Cluster,
            n_subsamples: 50,
            subsample_size: None,
            em_iterations: SUBSAMPLE_EM_ITERATIONS,
            concentration_steps: CONCENTRATION_STEPS,
            seed,
        }
    }

    /// `ceil(f (p + 1) / (1 - alpha_mis))`, `f` = 1 (uniform) or 2 (cluster), capped at n.
    pub fn resolved_size(&self, data: &Dataset) -> usize {
        let factor = match self.mode {
            SubsamplingMode::Uniform => 1.0,
            SubsamplingMode::Cluster => 2.0,
        };
        let alpha = data.missing_fraction().min(0.99);
        let default = (factor * (data.p() as f64 + 1.0) / (1.0 - alpha)).ceil() as usize;
        self.subsample_size.unwrap_or(default).min(data.n())
    }
}

#[derive(Debug, Clone)]
pub struct EmveResult {
    pub estimate: ScatterEstimate,
    /// Calibrated scale of the returned fit; never above the best candidate's.
    pub objective: f64,
    /// Index of the winning candidate.
    pub candidate: usize,
    /// Cases the returned fit was computed from: the winning subsample or,
    /// after concentration, the last half-sample.
    pub subsample: Vec<usize>,
    /// Cases subsamples were drawn from.
    pub pool: Vec<usize>,
    /// Objective of every candidate; NaN where all attempts failed.
    pub objectives: Vec<f64>,
}

struct Candidate {
    objective: f64,
    /// Calibrated distance of each case; NaN for cases with nothing observed.
    terms: Vec<f64>,
    mu: nalgebra::DVector<f64>,
    sigma: DMatrix<f64>,
    subsample: Vec<usize>,
}

fn evaluate(data: &Dataset, patterns: &Patterns, medians: &[f64], rows: &[usize], em_iterations: usize) -> Result<Candidate> {
    let p = data.p();
    let sub = data.select_rows(rows);
    let fit = gaussian_em(&sub, em_iterations, SUBSAMPLE_EM_TOL)?;
    let log_det = log_det_spd(&fit.sigma)?;
    let unit = &fit.sigma / (log_det / p as f64).exp();
    let es = partial_distances(data, patterns, &fit.mu, &unit)?;
    let terms: Vec<f64> = (0..data.n())
        .map(|i| {
            let k = patterns.dims[i];
            if k == 0 {
                f64::NAN
            } else {
                es.distances[i] / medians[k]
            }
        })
        .collect();
    let mut r: Vec<f64> = terms.iter().copied().filter(|v| !v.is_nan()).collect();
    let s = median_in_place(&mut r);
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::DegenerateConfiguration("candidate scale is not positive".into()));
    }
    Ok(Candidate {
        objective: s,
        terms,
        mu: fit.mu,
        sigma: unit * s,
        subsample: rows.to_vec(),
    })
}

/// Refits on the half of the cases with the smallest calibrated distances
/// while that lowers the objective.
fn concentrate(data: &Dataset, patterns: &Patterns, medians: &[f64], mut best: Candidate, plan: &SubsamplingPlan) -> Candidate {
    let retained: Vec<usize> = (0..data.n()).filter(|&i| patterns.dims[i] > 0).collect();
    let h = (retained.len() + data.p() + 1) / 2;
    if h >= retained.len() {
        return best;
    }
    for _ in 0..plan.concentration_steps {
        let mut order = retained.clone();
        order.sort_by(|&a, &b| best.terms[a].total_cmp(&best.terms[b]).then(a.cmp(&b)));
        let mut rows = order[..h].to_vec();
        rows.sort_unstable();
        match evaluate(data, patterns, medians, &rows, plan.em_iterations) {
            Ok(c) if c.objective < best.objective => best = c,
            _ => break,
        }
    }
    best
}

/// EMVE: fit the Gaussian MLE on each subsample, calibrate its unit-volume
/// scatter by the median of chi-square-normalized partial distances over the
/// whole sample, and keep the candidate with the smallest calibrated scale.
///
/// Partial distances use the observed block of the unit-volume scatter, so
/// rescaling a coordinate changes every case's term by the same factor. The
/// winner is then refined by concentration steps.
pub fn emve(data: &Dataset, plan: &SubsamplingPlan) -> Result<EmveResult> {
    if plan.n_subsamples == 0 || plan.em_iterations == 0 {
        return Err(Error::InvalidArgument("at least one subsample and one EM iteration are required".into()));
    }
    let p = data.p();
    let patterns = Patterns::from_mask(data.mask());
    let pool: Vec<usize> = match plan.mode {
        SubsamplingMode::Uniform => (0..data.n()).filter(|&i| patterns.dims[i] > 0).collect(),
        SubsamplingMode::Cluster => clean_cluster(data)?
            .0
            .into_iter()
            .filter(|&i| patterns.dims[i] > 0)
            .collect(),
    };
    let size = plan.resolved_size(data).min(pool.len());
    if size < 2 {
        return Err(Error::EmveFailed);
    }
    let medians: Vec<f64> = std::iter::once(Ok(f64::NAN))
        .chain((1..=p).map(|k| chi2_quantile(0.5, k as u32)))
        .collect::<Result<_>>()?;

    let candidates: Vec<Option<Candidate>> = (0..plan.n_subsamples)
        .into_par_iter()
        .map(|m| {
            (0..ATTEMPTS_PER_CANDIDATE).find_map(|attempt| {
                let mut rng = stream(plan.seed, &[m as u64, attempt]);
                let mut rows: Vec<usize> = sample(&mut rng, pool.len(), size)
                    .into_iter()
                    .map(|k| pool[k])
                    .collect();
                rows.sort_unstable();
                evaluate(data, &patterns, &medians, &rows, plan.em_iterations).ok()
            })
        })
        .collect();

    let objectives: Vec<f64> = candidates
        .iter()
        .map(|c| c.as_ref().map_or(f64::NAN, |c| c.objective))
        .collect();
    let (best_index, best) = candidates
        .into_iter()
        .enumerate()
        .filter_map(|(m, c)| c.map(|c| (m, c)))
        .min_by(|a, b| a.1.objective.total_cmp(&b.1.objective).then(a.0.cmp(&b.0)))
        .ok_or(Error::EmveFailed)?;
    let best = concentrate(data, &patterns, &medians, best, plan);

    let es = partial_distances(data, &patterns, &best.mu, &best.sigma)?;
    let estimate = ScatterEstimate {
        mu: best.mu,
        sigma: best.sigma,
        weights: patterns.dims.iter().map(|&k| if k > 0 { 1.0 } else { 0.0 }).collect(),
        distances: es.distances,
        scale: best.objective,
        iterations: 0,
        converged: true,
        dropped: patterns.dropped.clone(),
    };
    Ok(EmveResult {
        estimate,
        objective: best.objective,
        candidate: best_index,
        subsample: best.subsample,
        pool,
        objectives,
    })
}
