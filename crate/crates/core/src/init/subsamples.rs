use crate::error::{Error, Result};
use crate::kernels::ln_gamma;

fn ln_choose(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// Number of subsamples of size `m` needed so that, with probability `q`, at
/// least one contains no contaminated case when a fraction `eps` of the `n`
/// cases is contaminated.
///
/// The exact requirement `1 - (1 - pi)^M >= q` is solved in log space and
/// rounded to the nearest integer, never below one.
pub fn required_subsamples(q: f64, eps: f64, n: usize, m: usize) -> Result<u64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidProbability(q));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidProbability(eps));
    }
    let clean = n as f64 * (1.0 - eps);
    if m as f64 > clean {
        return Err(Error::InvalidArgument(format!(
            "subsample size {} exceeds the {} clean cases",
            m, clean
        )));
    }
    let ln_pi = ln_choose(clean, m as f64) - ln_choose(n as f64, m as f64);
    if ln_pi >= 0.0 {
        return Ok(1);
    }
    let ln_miss = (-ln_pi.exp_m1()).ln();
    let count = ((-q).ln_1p() / ln_miss).round();
    Ok(count.max(1.0) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(required_subsamples(0.99, 0.5, 100, 10).unwrap(), 7758);
        assert_eq!(required_subsamples(0.99, 0.5, 100, 1).unwrap(), 7);
        assert_eq!(required_subsamples(0.99, 0.0, 100, 10).unwrap(), 1);
        assert!(required_subsamples(0.99, 0.5, 100, 51).is_err());
    }
}
