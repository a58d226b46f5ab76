//! Bounded loss functions and their consistency constants.

use crate::error::{Error, Result};
use crate::kernels::{chi2_quantile, gamma_p, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoFamily {
    TukeyBisquare,
    Rocke,
}

/// A loss family with its per-dimension constants, tabulated for k = 1..=p.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoSpec {
    pub family: RhoFamily,
    pub b: f64,
    pub rocke_alpha: f64,
    /// `gamma_by_dim[k - 1]`; all ones for the Tukey family.
    pub gamma_by_dim: Vec<f64>,
    /// `c_by_dim[k - 1]`.
    pub c_by_dim: Vec<f64>,
}

impl RhoSpec {
    pub fn tukey(p: usize) -> Result<Self> {
        Self::build(RhoFamily::TukeyBisquare, p, 0.5, 0.05)
    }

    pub fn rocke(p: usize, alpha: f64) -> Result<Self> {
        Self::build(RhoFamily::Rocke, p, 0.5, alpha)
    }

    pub fn build(family: RhoFamily, p: usize, b: f64, rocke_alpha: f64) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::InvalidProbability(b));
        }
        let gamma_by_dim = (1..=p)
            .map(|k| match family {
                RhoFamily::TukeyBisquare => Ok(1.0),
                RhoFamily::Rocke => rocke_gamma(k, rocke_alpha),
            })
            .collect::<Result<Vec<f64>>>()?;
        let c_by_dim = (1..=p)
            .map(|k| tuning_constant_for(family, k, b, gamma_by_dim[k - 1]))
            .collect::<Result<Vec<f64>>>()?;
        Ok(RhoSpec {
            family,
            b,
            rocke_alpha,
            gamma_by_dim,
            c_by_dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.c_by_dim.len()
    }

    #[inline]
    pub fn gamma(&self, dim: usize) -> f64 {
        self.gamma_by_dim[dim - 1]
    }

    #[inline]
    pub fn c(&self, dim: usize) -> f64 {
        self.c_by_dim[dim - 1]
    }

    #[inline]
    pub fn rho(&self, u: f64, dim: usize) -> f64 {
        rho_value(self.family, u, self.gamma(dim))
    }

    /// Derivative of rho in its argument.
    #[inline]
    pub fn weight(&self, u: f64, dim: usize) -> f64 {
        weight_value(self.family, u, self.gamma(dim))
    }

    /// Largest value of [`Self::weight`] for this dimension, used to report weights in [0, 1].
    pub fn max_weight(&self, dim: usize) -> f64 {
        match self.family {
            RhoFamily::TukeyBisquare => 3.0,
            RhoFamily::Rocke => 0.75 / self.gamma(dim),
        }
    }
}

/// `min(chi2_k(1 - alpha) / k - 1, 1)`.
pub fn rocke_gamma(p: usize, alpha: f64) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let q = chi2_quantile(1.0 - alpha, p as u32)?;
    let g = (q / p as f64 - 1.0).min(1.0);
    if !(g > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rocke gamma is not positive for p = {}, alpha = {}",
            p, alpha
        )));
    }
    Ok(g)
}

pub fn rho_value(family: RhoFamily, u: f64, gamma: f64) -> f64 {
    match family {
        RhoFamily::TukeyBisquare => {
            if u >= 1.0 {
                1.0
            } else {
                let v = 1.0 - u;
                1.0 - v * v * v
            }
        }
        RhoFamily::Rocke => {
            if u <= 1.0 - gamma {
                0.0
            } else if u >= 1.0 + gamma {
                1.0
            } else {
                let v = (u - 1.0) / gamma;
                0.25 * v * (3.0 - v * v) + 0.5
            }
        }
    }
}

pub fn weight_value(family: RhoFamily, u: f64, gamma: f64) -> f64 {
    match family {
        RhoFamily::TukeyBisquare => {
            if u >= 1.0 {
                0.0
            } else {
                let v = 1.0 - u;
                3.0 * v * v
            }
        }
        RhoFamily::Rocke => {
            if u < 1.0 - gamma || u > 1.0 + gamma {
                0.0
            } else {
                let v = (u - 1.0) / gamma;
                (0.75 / gamma * (1.0 - v * v)).max(0.0)
            }
        }
    }
}

/// E[Z^j 1{lo < Z < hi}] for Z ~ chi2_k.
fn truncated_moment(k: usize, j: u32, lo: f64, hi: f64) -> f64 {
    let a = 0.5 * k as f64;
    let aj = a + j as f64;
    let factor = (j as f64 * std::f64::consts::LN_2 + ln_gamma(aj) - ln_gamma(a)).exp();
    factor * (gamma_p(aj, 0.5 * hi) - gamma_p(aj, 0.5 * lo))
}

/// E[rho(Z / c)] for Z ~ chi2_k, in closed form: rho is a cubic polynomial
/// on its non-constant piece, so the expectation reduces to truncated
/// chi-square moments.
pub fn expected_rho(family: RhoFamily, k: usize, c: f64, gamma: f64) -> f64 {
    let (lo, hi, coef): (f64, f64, [f64; 4]) = match family {
        RhoFamily::TukeyBisquare => (0.0, 1.0, [0.0, 3.0, -3.0, 1.0]),
        RhoFamily::Rocke => {
            let g3 = gamma * gamma * gamma;
            (
                (1.0 - gamma).max(0.0),
                1.0 + gamma,
                [
                    0.5 - 0.75 / gamma + 0.25 / g3,
                    0.75 / gamma - 0.75 / g3,
                    0.75 / g3,
                    -0.25 / g3,
                ],
            )
        }
    };
    let a = 0.5 * k as f64;
    let mut e = 1.0 - gamma_p(a, 0.5 * hi * c);
    let mut cj = 1.0;
    for (j, &cf) in coef.iter().enumerate() {
        if cf != 0.0 {
            e += cf / cj * truncated_moment(k, j as u32, lo * c, hi * c);
        }
        cj *= c;
    }
    e
}

fn tuning_constant_for(family: RhoFamily, k: usize, b: f64, gamma: f64) -> Result<f64> {
    let f = |c: f64| expected_rho(family, k, c, gamma) - b;
    let mut lo = k as f64;
    let mut hi = k as f64;
    let mut tries = 0;
    while f(lo) < 0.0 {
        lo *= 0.5;
        tries += 1;
        if tries > 200 {
            return Err(Error::RootNotBracketed("tuning constant (lower)".into()));
        }
    }
    while f(hi) > 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 400 {
            return Err(Error::RootNotBracketed("tuning constant (upper)".into()));
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Consistency constant c_k with E[rho(Z / c_k)] = b for Z ~ chi2_k.
pub fn tuning_constant(k: usize, spec: &RhoSpec) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let gamma = match spec.family {
        RhoFamily::TukeyBisquare => 1.0,
        RhoFamily::Rocke => rocke_gamma(k, spec.rocke_alpha)?,
    };
    tuning_constant_for(spec.family, k, spec.b, gamma)
}
