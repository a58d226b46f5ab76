use nalgebra::DMatrix;
use rayon::prelude::*;

use super::tail::{bivariate_filter, flag_largest, Reference};
use super::{FilterConfig, FilterReport, FlagSource};
use crate::data::{Dataset, Mask};
use crate::error::{Error, Result};
use crate::kernels::{binom_quantile, median_mad_unchecked, pairwise_scatter};

const PAIR_DET_TOL: f64 = 1e-12;

/// Column-wise standardized values and the univariate flags.
struct UnivariatePass {
    z: DMatrix<f64>,
    mask: Mask,
    flagged: Vec<FlagSource>,
}

fn univariate_pass(data: &Dataset, cfg: &FilterConfig) -> Result<UnivariatePass> {
    cfg.validate()?;
    let (n, p) = (data.n(), data.p());
    let per_column: Vec<Result<(Vec<(usize, f64)>, Vec<usize>)>> = (0..p)
        .into_par_iter()
        .map(|j| {
            let obs = data.column_observed(j);
            if obs.len() < 2 {
                return Err(Error::SampleTooSmall {
                    needed: 2,
                    got: obs.len(),
                });
            }
            let values: Vec<f64> = obs.iter().map(|&(_, v)| v).collect();
            let ls = median_mad_unchecked(&values, true);
            if !(ls.scale > 0.0) {
                return Err(Error::DegenerateDispersion { column: j });
            }
            let z: Vec<(usize, f64)> = obs
                .iter()
                .map(|&(i, v)| (i, (v - ls.location) / ls.scale))
                .collect();
            let abs: Vec<f64> = z.iter().map(|&(_, v)| v.abs()).collect();
            let hits = flag_largest(&abs, Reference::HalfNormal, cfg.alpha_uni)?;
            Ok((z, hits.into_iter().map(|k| obs[k].0).collect()))
        })
        .collect();

    let mut z = DMatrix::from_element(n, p, f64::NAN);
    let mut mask = data.mask().clone();
    let mut flagged = vec![FlagSource::None; n * p];
    for (j, res) in per_column.into_iter().enumerate() {
        let (values, hits) = res?;
        for (i, v) in values {
            z[(i, j)] = v;
        }
        for i in hits {
            mask.set(i, j, false);
            flagged[i * p + j] = FlagSource::Univariate;
        }
    }
    Ok(UnivariatePass { z, mask, flagged })
}

fn report(input: &Mask, mask: Mask, flagged: Vec<FlagSource>) -> FilterReport {
    let (n, p) = input.dims();
    let mut r = FilterReport {
        mask,
        flagged_by: flagged,
        per_column_fraction: Vec::new(),
        m_counts: vec![0; n * p],
        c_counts: vec![0; n * p],
        skipped_pairs: Vec::new(),
    };
    r.recompute_fractions(input);
    r
}

/// Univariate filter applied to every column.
pub fn uf(data: &Dataset, cfg: &FilterConfig) -> Result<FilterReport> {
    let pass = univariate_pass(data, cfg)?;
    Ok(report(data.mask(), pass.mask, pass.flagged))
}

enum PairOutcome {
    Skipped,
    Flagged(Vec<usize>),
}

fn pair_outcome(z: &DMatrix<f64>, mask: &Mask, j: usize, k: usize, alpha: f64) -> Result<PairOutcome> {
    let rows: Vec<usize> = (0..z.nrows()).filter(|&i| mask.get(i, j) && mask.get(i, k)).collect();
    if rows.len() < 2 {
        return Ok(PairOutcome::Skipped);
    }
    let xs: Vec<f64> = rows.iter().map(|&i| z[(i, j)]).collect();
    let ys: Vec<f64> = rows.iter().map(|&i| z[(i, k)]).collect();
    let scatter = pairwise_scatter(&xs, &ys)?;
    if !scatter.is_usable(PAIR_DET_TOL) {
        return Ok(PairOutcome::Skipped);
    }
    let d: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| scatter.mahalanobis(x, y).max(0.0))
        .collect();
    let hits = bivariate_filter(&d, alpha)?;
    Ok(PairOutcome::Flagged(hits.into_iter().map(|h| rows[h]).collect()))
}

/// Univariate filter followed by the pairwise bivariate filter; a cell is
/// removed by the second stage when its row was flagged in more pairs than a
/// binomial count of undetected outliers would explain.
pub fn ubf(data: &Dataset, cfg: &FilterConfig) -> Result<FilterReport> {
    let pass = univariate_pass(data, cfg)?;
    let (n, p) = (data.n(), data.p());
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|j| ((j + 1)..p).map(move |k| (j, k)))
        .collect();
    let outcomes: Vec<Result<PairOutcome>> = pairs
        .par_iter()
        .map(|&(j, k)| pair_outcome(&pass.z, &pass.mask, j, k, cfg.alpha_biv))
        .collect();

    let mut m = vec![0u32; n * p];
    let mut usable = vec![vec![false; p]; p];
    let mut skipped = Vec::new();
    for (&(j, k), out) in pairs.iter().zip(outcomes) {
        match out? {
            PairOutcome::Skipped => skipped.push((j, k)),
            PairOutcome::Flagged(rows) => {
                usable[j][k] = true;
                usable[k][j] = true;
                for i in rows {
                    m[i * p + j] += 1;
                    m[i * p + k] += 1;
                }
            }
        }
    }

    let thresholds: Vec<u32> = (0..p as u64)
        .map(|partners| binom_quantile(partners, cfg.delta, cfg.binom_level).map(|c| c as u32))
        .collect::<Result<_>>()?;
    let mut c = vec![0u32; n * p];
    let mut mask = pass.mask.clone();
    let mut flagged = pass.flagged;
    for i in 0..n {
        for j in 0..p {
            if !pass.mask.get(i, j) {
                continue;
            }
            let partners = (0..p)
                .filter(|&k| k != j && usable[j][k] && pass.mask.get(i, k))
                .count();
            let cij = thresholds[partners];
            c[i * p + j] = cij;
            if m[i * p + j] > cij {
                mask.set(i, j, false);
                flagged[i * p + j] = FlagSource::Bivariate;
            }
        }
    }

    let mut r = report(data.mask(), mask, flagged);
    r.m_counts = m;
    r.c_counts = c;
    r.skipped_pairs = skipped;
    Ok(r)
}
