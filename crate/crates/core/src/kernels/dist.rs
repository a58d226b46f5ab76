//! Chi-square and binomial distribution functions.
//!
//! The chi-square CDF is the regularized lower incomplete gamma function,
//! evaluated by its power series below `a + 1` and by a Lentz continued
//! fraction above. Quantiles are found by bracketed bisection followed by a
//! Newton polish.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 100_000;
const FPMIN: f64 = 1e-300;

/// Natural logarithm of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn gamma_prefactor(a: f64, x: f64) -> f64 {
    (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * gamma_prefactor(a, x)
}

fn gamma_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    gamma_prefactor(a, x) * h
}

/// Regularized lower incomplete gamma function P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else if x < a + 1.0 {
        gamma_series(a, x).min(1.0)
    } else {
        (1.0 - gamma_continued_fraction(a, x)).max(0.0)
    }
}

/// Regularized upper incomplete gamma function Q(a, x) = 1 - P(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else if x < a + 1.0 {
        (1.0 - gamma_series(a, x)).max(0.0)
    } else {
        gamma_continued_fraction(a, x).min(1.0)
    }
}

/// CDF of the chi-square distribution with `k` degrees of freedom.
pub fn chi2_cdf(t: f64, k: u32) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    gamma_p(0.5 * k as f64, 0.5 * t)
}

/// Upper tail probability of the chi-square distribution.
pub fn chi2_sf(t: f64, k: u32) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    gamma_q(0.5 * k as f64, 0.5 * t)
}

/// Density of the chi-square distribution.
pub fn chi2_pdf(t: f64, k: u32) -> f64 {
    let half = 0.5 * k as f64;
    if t < 0.0 {
        return 0.0;
    }
    if t == 0.0 {
        return match k {
            1 => f64::INFINITY,
            2 => 0.5,
            _ => 0.0,
        };
    }
    ((half - 1.0) * t.ln() - 0.5 * t - half * std::f64::consts::LN_2 - ln_gamma(half)).exp()
}

/// Quantile of the chi-square distribution with `k` degrees of freedom.
pub fn chi2_quantile(p: f64, k: u32) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("chi-square needs k >= 1".into()));
    }
    // Compare on whichever tail carries more relative precision.
    let upper = 1.0 - p;
    let below = |t: f64| -> bool {
        if p <= 0.5 {
            chi2_cdf(t, k) < p
        } else {
            chi2_sf(t, k) > upper
        }
    };

    let mut hi = (k as f64).max(1.0);
    let mut expansions = 0;
    while below(hi) {
        hi *= 2.0;
        expansions += 1;
        if expansions > 2000 {
            return Err(Error::RootNotBracketed("chi-square quantile".into()));
        }
    }
    let mut lo = 0.0_f64;
    for _ in 0..400 {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if lo > 0.0 && hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let mut t = if lo > 0.0 { 0.5 * (lo + hi) } else { hi };

    // Newton polish on the log of the tail in use.
    for _ in 0..3 {
        let pdf = chi2_pdf(t, k);
        if !(pdf > 0.0 && pdf.is_finite()) {
            break;
        }
        let step = if p <= 0.5 {
            let f = chi2_cdf(t, k);
            if f <= 0.0 {
                break;
            }
            (f.ln() - p.ln()) * f / pdf
        } else {
            let q = chi2_sf(t, k);
            if q <= 0.0 {
                break;
            }
            -(q.ln() - upper.ln()) * q / pdf
        };
        let next = t - step;
        if !(next > 0.0) || !next.is_finite() {
            break;
        }
        t = next;
    }
    Ok(t)
}

/// Smallest integer `c` with P(Bin(n, prob) <= c) >= level, by exact CDF summation.
pub fn binom_quantile(n: u64, prob: f64, level: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::InvalidProbability(prob));
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::InvalidProbability(level));
    }
    if n == 0 || prob == 0.0 {
        return Ok(0);
    }
    if prob == 1.0 {
        return Ok(n);
    }
    let nf = n as f64;
    let ln_p = prob.ln();
    let ln_q = (-prob).ln_1p();
    let ln_n_fact = ln_gamma(nf + 1.0);
    let mut cdf = 0.0;
    for i in 0..=n {
        let fi = i as f64;
        let ln_choose = ln_n_fact - ln_gamma(fi + 1.0) - ln_gamma(nf - fi + 1.0);
        cdf += (ln_choose + fi * ln_p + (nf - fi) * ln_q).exp();
        if cdf >= level {
            return Ok(i);
        }
    }
    Ok(n)
}
