//! Adaptive tail cut-off: how much empirical mass beyond a quantile exceeds
//! what the reference distribution allows.

use crate::error::{Error, Result};
use crate::kernels::{chi2_cdf, chi2_quantile};

/// Reference distribution of the filtered statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// |Z| for standard normal Z.
    HalfNormal,
    /// Chi-square with the given degrees of freedom.
    ChiSquare { df: u32 },
}

impl Reference {
    pub fn cdf(self, t: f64) -> f64 {
        match self {
            Reference::HalfNormal => chi2_cdf(t * t, 1),
            Reference::ChiSquare { df } => chi2_cdf(t, df),
        }
    }

    pub fn quantile(self, alpha: f64) -> Result<f64> {
        match self {
            Reference::HalfNormal => Ok(chi2_quantile(alpha, 1)?.sqrt()),
            Reference::ChiSquare { df } => chi2_quantile(alpha, df),
        }
    }
}

/// `sup_{t >= eta} (F(t) - F_n(t))^+` with `eta = F^{-1}(alpha)`.
///
/// Between consecutive order statistics `F_n` is flat and `F` increases, so the
/// supremum is reached as `t` approaches an observed value from the left.
pub fn tail_excess(stats: &[f64], reference: Reference, alpha: f64) -> Result<f64> {
    if stats.is_empty() {
        return Err(Error::EmptySample);
    }
    if stats.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let eta = reference.quantile(alpha)?;
    let mut sorted = stats.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i];
        if s > eta {
            // i values lie strictly below s
            d = d.max(reference.cdf(s) - i as f64 / n);
        }
        while i < sorted.len() && sorted[i] == s {
            i += 1;
        }
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Indices of the `floor(n * d_n)` largest statistics, ascending.
///
/// Ties are ordered by index, so among equal values the later rows are flagged first.
pub fn flag_largest(stats: &[f64], reference: Reference, alpha: f64) -> Result<Vec<usize>> {
    let d = tail_excess(stats, reference, alpha)?;
    let count = (stats.len() as f64 * d).floor() as usize;
    let mut order: Vec<usize> = (0..stats.len()).collect();
    order.sort_by(|&a, &b| stats[a].total_cmp(&stats[b]).then(a.cmp(&b)));
    let mut flagged = order[stats.len() - count..].to_vec();
    flagged.sort_unstable();
    Ok(flagged)
}

/// Univariate filter on one column: standardize by median and normalized MAD,
/// then flag the tail of |Z| against the half-normal.
pub fn univariate_filter(column: &[f64], alpha: f64) -> Result<Vec<usize>> {
    let ls = crate::kernels::median_mad(column, true)?;
    if !(ls.scale > 0.0) {
        return Err(Error::DegenerateDispersion { column: 0 });
    }
    let z: Vec<f64> = column
        .iter()
        .map(|x| ((x - ls.location) / ls.scale).abs())
        .collect();
    flag_largest(&z, Reference::HalfNormal, alpha)
}

/// Bivariate filter on pairwise squared Mahalanobis distances against chi-square(2).
pub fn bivariate_filter(distances: &[f64], alpha: f64) -> Result<Vec<usize>> {
    if distances.len() < 2 {
        return Err(Error::SampleTooSmall {
            needed: 2,
            got: distances.len(),
        });
    }
    if let Some(&d) = distances.iter().find(|&&d| d < 0.0) {
        return Err(Error::NegativeDistance(d));
    }
    flag_largest(distances, Reference::ChiSquare { df: 2 }, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_below_threshold_flags_nothing() {
        let d = [0.1, 0.5, 1.0, 2.0, 0.3];
        assert_eq!(tail_excess(&d, Reference::ChiSquare { df: 2 }, 0.85).unwrap(), 0.0);
        assert!(bivariate_filter(&d, 0.85).unwrap().is_empty());
    }

    #[test]
    fn negative_distance_rejected() {
        assert!(matches!(
            bivariate_filter(&[1.0, -0.5], 0.85),
            Err(Error::NegativeDistance(_))
        ));
    }

    #[test]
    fn single_far_value_gives_one_over_n() {
        // F(big) ~ 1, n - 1 values below it: excess is 1/n
        let mut d = vec![0.5; 9];
        d.push(1e6);
        let e = tail_excess(&d, Reference::ChiSquare { df: 2 }, 0.85).unwrap();
        assert!((e - 0.1).abs() < 1e-12);
    }

    #[test]
    fn ties_flag_later_indices() {
        let stats = [5.0, 1.0, 5.0, 0.0];
        // eta for |Z| at 0.5 is ~0.674; d = F(5) - 2/4 ~ 0.5 -> floor(4 * 0.4999...) = 1
        let f = flag_largest(&stats, Reference::HalfNormal, 0.5).unwrap();
        assert_eq!(f, vec![2]);
    }

    #[test]
    fn constant_column_is_degenerate() {
        assert!(matches!(
            univariate_filter(&[3.0, 3.0, 3.0, 3.0], 0.95),
            Err(Error::DegenerateDispersion { .. })
        ));
    }
}
