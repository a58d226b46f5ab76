use nalgebra::{DMatrix, DVector};

use super::rho::RhoSpec;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{group_log_dets, partial_distances, Patterns};

const MAX_EXPANSIONS: usize = 200;

/// Solves `sum_i c_i rho(t_i / s) = b sum_i c_i` for `s`, where `c_i` is the
/// tuning constant of row i's dimension. Rows with `dims[i] == 0` are ignored.
pub(crate) fn solve_mscale(t: &[f64], dims: &[usize], spec: &RhoSpec) -> Result<f64> {
    let terms: Vec<(f64, f64, usize)> = t
        .iter()
        .zip(dims)
        .filter(|(_, &d)| d > 0)
        .map(|(&t, &d)| (spec.c(d), t, d))
        .collect();
    if terms.is_empty() || terms.iter().all(|&(_, t, _)| t <= 0.0) {
        return Err(Error::DegenerateConfiguration("all distances are zero".into()));
    }
    let total: f64 = terms.iter().map(|&(c, _, _)| c).sum();
    let target = spec.b * total;
    let f = |s: f64| terms.iter().map(|&(c, t, d)| c * spec.rho(t / s, d)).sum::<f64>() - target;

    let mut positive: Vec<f64> = terms.iter().map(|&(_, t, _)| t).filter(|&t| t > 0.0).collect();
    let start = crate::kernels::median_in_place(&mut positive);
    let (mut lo, mut hi) = (start, start);
    let mut k = 0;
    while f(lo) < 0.0 {
        lo *= 0.5;
        k += 1;
        if k > MAX_EXPANSIONS {
            return Err(Error::RootNotBracketed("generalized M-scale".into()));
        }
    }
    k = 0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        k += 1;
        if k > MAX_EXPANSIONS {
            return Err(Error::RootNotBracketed("generalized M-scale".into()));
        }
    }
    if lo == hi {
        return Ok(lo);
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Normalized arguments `t_i = D*_i / (c_{p_i} |Omega0_oo|^{1/p_i})` from partial
/// distances and observed-block log-determinants of Sigma and Omega0.
pub(crate) fn normalized_terms(distances: &[f64], sigma_log_dets: &[f64], omega_log_dets: &[f64], dims: &[usize], spec: &RhoSpec) -> Vec<f64> {
    (0..distances.len())
        .map(|i| {
            let d = dims[i];
            if d == 0 {
                return f64::NAN;
            }
            let pi = d as f64;
            distances[i] * ((sigma_log_dets[i] - omega_log_dets[i]) / pi).exp() / spec.c(d)
        })
        .collect()
}

/// Per-row log-determinant of a fixed matrix's observed blocks.
pub(crate) fn row_log_dets(patterns: &Patterns, m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let by_group = group_log_dets(patterns, m)?;
    let mut out = vec![f64::NAN; patterns.dims.len()];
    for (g, ld) in patterns.groups.iter().zip(by_group) {
        for &i in &g.rows {
            out[i] = ld;
        }
    }
    Ok(out)
}

/// Generalized M-scale of the partial distances of `data` under `(mu, sigma)`,
/// with observed blocks of `omega0` as the per-pattern volume reference.
pub fn gse_scale(mu: &DVector<f64>, sigma: &DMatrix<f64>, omega0: &DMatrix<f64>, data: &Dataset, spec: &RhoSpec) -> Result<f64> {
    if spec.dim() < data.p() {
        return Err(Error::InvalidArgument("rho spec tabulated for fewer dimensions than the data".into()));
    }
    let patterns = Patterns::from_mask(data.mask());
    let es = partial_distances(data, &patterns, mu, sigma)?;
    let omega = row_log_dets(&patterns, omega0)?;
    let t = normalized_terms(&es.distances, &es.log_dets, &omega, &patterns.dims, spec);
    solve_mscale(&t, &patterns.dims, spec)
}
