//! Cell filters: suspect cells are turned into missing values before estimation.

mod combine;
mod tail;
mod ubf;

pub use combine::{apply_external, combine_filters, load_mask, parse_mask, CombineMode};
pub use tail::{bivariate_filter, flag_largest, tail_excess, univariate_filter, Reference};
pub use ubf::{uf, ubf};

use crate::data::Mask;

/// Thresholds of the univariate/bivariate filters and the binomial flagging rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub alpha_uni: f64,
    pub alpha_biv: f64,
    pub delta: f64,
    pub binom_level: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            alpha_uni: 0.95,
            alpha_biv: 0.85,
            delta: 0.10,
            binom_level: 0.99,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> crate::Result<()> {
        for v in [self.alpha_uni, self.alpha_biv, self.delta, self.binom_level] {
            if !(v > 0.0 && v < 1.0) {
                return Err(crate::Error::InvalidProbability(v));
            }
        }
        Ok(())
    }
}

/// Which stage removed a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlagSource {
    None,
    Univariate,
    Bivariate,
    External,
    Intersection,
}

impl FlagSource {
    pub fn as_str(self) -> &'static str {
        match self {
            FlagSource::None => "none",
            FlagSource::Univariate => "uf",
            FlagSource::Bivariate => "bf",
            FlagSource::External => "external",
            FlagSource::Intersection => "intersection",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FilterReport {
    /// Post-filter observation mask.
    pub mask: Mask,
    /// Row-major n x p provenance of each removed cell.
    pub flagged_by: Vec<FlagSource>,
    pub per_column_fraction: Vec<f64>,
    /// Row-major n x p count of pairs in which the cell's row was flagged.
    pub m_counts: Vec<u32>,
    /// Row-major n x p binomial thresholds; zero where the bivariate stage did not run.
    pub c_counts: Vec<u32>,
    /// Column pairs whose 2x2 scatter was unusable.
    pub skipped_pairs: Vec<(usize, usize)>,
}

impl FilterReport {
    pub fn source(&self, i: usize, j: usize) -> FlagSource {
        self.flagged_by[i * self.mask.cols() + j]
    }

    pub fn flagged_count(&self) -> usize {
        self.flagged_by.iter().filter(|&&s| s != FlagSource::None).count()
    }

    /// Flagged cells over cells observed on input.
    pub fn flagged_fraction(&self) -> f64 {
        let flagged = self.flagged_count();
        let observed = self.mask.observed_count() + flagged;
        if observed == 0 {
            0.0
        } else {
            flagged as f64 / observed as f64
        }
    }

    pub(crate) fn recompute_fractions(&mut self, input: &Mask) {
        let (n, p) = input.dims();
        self.per_column_fraction = (0..p)
            .map(|j| {
                let observed = (0..n).filter(|&i| input.get(i, j)).count();
                let flagged = (0..n)
                    .filter(|&i| self.flagged_by[i * p + j] != FlagSource::None)
                    .count();
                if observed == 0 {
                    0.0
                } else {
                    flagged as f64 / observed as f64
                }
            })
            .collect();
    }
}
