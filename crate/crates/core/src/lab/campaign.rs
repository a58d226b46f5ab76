//! Seeded multi-replicate simulation campaigns.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use super::model::{contaminate_casewise, contaminate_cellwise, lrt_distance, random_correlation, ar1_correlation, CorrelationKind, TrueModel};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::filter::FilterConfig;
use crate::init::emve;
use crate::pipeline::{mle, run_filter, two_step, EstimatorKind, FilterKind, InitKind, PipelineConfig};
use crate::rng::stream;

/// Share of failed replicates above which a campaign is rejected.
pub const MAX_FAILURE_RATE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Mle,
    Initial { filter: FilterKind, init: InitKind },
    TwoStep { filter: FilterKind, estimator: EstimatorKind, init: InitKind },
}

/// An estimator selector such as `mle`, `uf-gse` or `ubf-gre-c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EstimatorSpec {
    pub label: String,
    pub method: Method,
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl FromStr for EstimatorSpec {
    type Err = Error;

    /// `mle`, or `[uf-|ubf-](gse|gre|emve)[-c]`; the `-c` suffix selects the
    /// cluster-based initial estimator.
    fn from_str(s: &str) -> Result<Self> {
        let label = s.trim().to_ascii_lowercase();
        let bad = || Error::InvalidArgument(format!("unknown estimator {:?}", s));
        if label == "mle" {
            return Ok(EstimatorSpec { label, method: Method::Mle });
        }
        let (filter, rest) = if let Some(r) = label.strip_prefix("ubf-") {
            (FilterKind::Ubf, r)
        } else if let Some(r) = label.strip_prefix("uf-") {
            (FilterKind::Uf, r)
        } else {
            (FilterKind::None, label.as_str())
        };
        let (core, init) = match rest.strip_suffix("-c") {
            Some(c) => (c, InitKind::EmveC),
            None => (rest, InitKind::Emve),
        };
        let method = match core {
            "gse" => Method::TwoStep { filter, estimator: EstimatorKind::Gse, init },
            "gre" => Method::TwoStep { filter, estimator: EstimatorKind::Gre, init },
            "emve" => Method::Initial { filter, init },
            _ => return Err(bad()),
        };
        Ok(EstimatorSpec { label, method })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contamination {
    None,
    Cellwise,
    Casewise,
}

impl fmt::Display for Contamination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Contamination::None => "none",
            Contamination::Cellwise => "cellwise",
            Contamination::Casewise => "casewise",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub p: usize,
    pub n: usize,
    pub correlation: CorrelationKind,
    pub contamination: Contamination,
    /// Contamination fractions; 0 yields a single clean cell with k = 0.
    pub eps: Vec<f64>,
    pub k_grid: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorSpec>,
    pub rocke_alpha: f64,
    pub filter: FilterConfig,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidArgument("p must be at least 2".into()));
        }
        if self.n <= 2 * self.p {
            return Err(Error::TooFewCases { n: self.n, p: self.p });
        }
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("at least one replicate is required".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidArgument("no estimators selected".into()));
        }
        if let Some(&e) = self.eps.iter().find(|&&e| !(0.0..1.0).contains(&e)) {
            return Err(Error::InvalidProbability(e));
        }
        if self.contamination != Contamination::None && self.eps.iter().any(|&e| e > 0.0) && self.k_grid.is_empty() {
            return Err(Error::InvalidArgument("contamination requires a nonempty k grid".into()));
        }
        self.filter.validate()
    }

    /// `(eps index, eps, k)` for every grid cell, in output order.
    pub fn cells(&self) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        for (ei, &e) in self.eps.iter().enumerate() {
            if e == 0.0 || self.contamination == Contamination::None {
                out.push((ei, e, 0.0));
            } else {
                out.extend(self.k_grid.iter().map(|&k| (ei, e, k)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignRow {
    pub estimator: String,
    pub scenario: String,
    pub eps: f64,
    pub k: f64,
    pub mean_lrt: f64,
    pub se: f64,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxRow {
    pub estimator: String,
    pub eps: f64,
    pub max_mean_lrt: f64,
    pub k_at_max: f64,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub scenario: String,
    pub replicates: usize,
    pub rows: Vec<CampaignRow>,
    /// Maximum over k of the average LRT, per estimator and eps.
    pub max_over_k: Vec<MaxRow>,
    /// MLE average LRT over the estimator's, on clean data.
    pub efficiency: Vec<(String, f64)>,
    /// Wall time spent in each estimator, summed over replicates.
    pub timing: Vec<(String, Duration)>,
}

fn true_model(cfg: &ScenarioConfig, rep: u64) -> Result<TrueModel> {
    let sigma0 = match cfg.correlation {
        CorrelationKind::Ar1(rho) => ar1_correlation(cfg.p, rho),
        CorrelationKind::Random => random_correlation(cfg.p, &mut stream(cfg.seed, &[rep, 0])),
    };
    TrueModel::new(sigma0)
}

fn estimate(spec: &EstimatorSpec, data: &Dataset, cfg: &ScenarioConfig, seed: u64) -> Result<DMatrix<f64>> {
    let pipeline = |filter, estimator, init| PipelineConfig {
        filter,
        filter_config: cfg.filter,
        estimator,
        init,
        rocke_alpha: cfg.rocke_alpha,
        seed,
        ..PipelineConfig::default()
    };
    match spec.method {
        Method::Mle => Ok(mle(data)?.sigma),
        Method::Initial { filter, init } => {
            let pc = pipeline(filter, EstimatorKind::Gse, init);
            let report = run_filter(data, &pc)?;
            let filtered = data.with_mask(report.mask)?;
            Ok(emve(&filtered, &pc.plan())?.estimate.sigma)
        }
        Method::TwoStep { filter, estimator, init } => Ok(two_step(data, &pipeline(filter, estimator, init))?.estimate.sigma),
    }
}

type TaskOutcome = Vec<(Result<f64>, Duration)>;

fn run_task(cfg: &ScenarioConfig, rep: usize, cell: usize, eps_index: usize, eps: f64, k: f64) -> Result<TaskOutcome> {
    let rep = rep as u64;
    let model = true_model(cfg, rep)?;
    let mut x = model.sample(cfg.n, &mut stream(cfg.seed, &[rep, 1]));
    // one contamination stream per (replicate, eps): every k shares cells and noise
    let mut crng = stream(cfg.seed, &[rep, 2, eps_index as u64]);
    match cfg.contamination {
        _ if eps == 0.0 => {}
        Contamination::None => {}
        Contamination::Cellwise => {
            contaminate_cellwise(&mut x, eps, k, &mut crng)?;
        }
        Contamination::Casewise => {
            contaminate_casewise(&mut x, &model, eps, k, &mut crng)?;
        }
    }
    let data = Dataset::complete(x)?;
    let seed: u64 = stream(cfg.seed, &[rep, 3, cell as u64]).random();
    Ok(cfg
        .estimators
        .iter()
        .map(|spec| {
            let start = Instant::now();
            let lrt = estimate(spec, &data, cfg, seed).and_then(|s| lrt_distance(&s, &model.sigma0));
            (lrt, start.elapsed())
        })
        .collect())
}

/// Runs every estimator on every replicate of every grid cell.
pub fn run_campaign(cfg: &ScenarioConfig) -> Result<CampaignResult> {
    cfg.validate()?;
    let cells = cfg.cells();
    let tasks: Vec<(usize, usize)> = (0..cfg.replicates)
        .flat_map(|r| (0..cells.len()).map(move |c| (r, c)))
        .collect();
    let outcomes: Vec<Result<TaskOutcome>> = tasks
        .par_iter()
        .map(|&(r, c)| {
            let (ei, e, k) = cells[c];
            run_task(cfg, r, c, ei, e, k)
        })
        .collect();
    let outcomes: Vec<TaskOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    let ne = cfg.estimators.len();
    let mut timing = vec![Duration::ZERO; ne];
    let mut values: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); cells.len()]; ne];
    let mut failures = vec![vec![0usize; cells.len()]; ne];
    for (&(_, c), out) in tasks.iter().zip(&outcomes) {
        for (e, (lrt, dt)) in out.iter().enumerate() {
            timing[e] += *dt;
            match lrt {
                Ok(v) if v.is_finite() => values[e][c].push(*v),
                _ => failures[e][c] += 1,
            }
        }
    }

    let mut rows = Vec::new();
    for (e, spec) in cfg.estimators.iter().enumerate() {
        for (c, &(_, eps, k)) in cells.iter().enumerate() {
            let failed = failures[e][c];
            if failed as f64 > MAX_FAILURE_RATE * cfg.replicates as f64 {
                return Err(Error::CampaignFailed(format!(
                    "{} failed in {} of {} replicates at eps = {}, k = {}",
                    spec, failed, cfg.replicates, eps, k
                )));
            }
            let v = &values[e][c];
            let m = v.len() as f64;
            let mean = v.iter().sum::<f64>() / m;
            let se = if v.len() > 1 {
                (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0)).sqrt() / m.sqrt()
            } else {
                f64::NAN
            };
            rows.push(CampaignRow {
                estimator: spec.label.clone(),
                scenario: cfg.name.clone(),
                eps,
                k,
                mean_lrt: mean,
                se,
                failed,
            });
        }
    }

    let mut max_over_k: Vec<MaxRow> = Vec::new();
    for r in &rows {
        match max_over_k.iter_mut().find(|m| m.estimator == r.estimator && m.eps == r.eps) {
            Some(m) => {
                if r.mean_lrt > m.max_mean_lrt {
                    m.max_mean_lrt = r.mean_lrt;
                    m.k_at_max = r.k;
                }
            }
            None => max_over_k.push(MaxRow {
                estimator: r.estimator.clone(),
                eps: r.eps,
                max_mean_lrt: r.mean_lrt,
                k_at_max: r.k,
            }),
        }
    }

    let clean = |label: &str| rows.iter().find(|r| r.estimator == label && r.eps == 0.0).map(|r| r.mean_lrt);
    let efficiency = match cfg.estimators.iter().find(|s| s.method == Method::Mle).and_then(|s| clean(&s.label)) {
        Some(base) => cfg
            .estimators
            .iter()
            .filter_map(|s| clean(&s.label).map(|v| (s.label.clone(), base / v)))
            .collect(),
        None => Vec::new(),
    };

    Ok(CampaignResult {
        scenario: cfg.name.clone(),
        replicates: cfg.replicates,
        rows,
        max_over_k,
        efficiency,
        timing: cfg.estimators.iter().map(|s| s.label.clone()).zip(timing).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_selectors() {
        let s: EstimatorSpec = "UBF-GRE-C".parse().unwrap();
        assert_eq!(
            s.method,
            Method::TwoStep {
                filter: FilterKind::Ubf,
                estimator: EstimatorKind::Gre,
                init: InitKind::EmveC
            }
        );
        assert_eq!(s.label, "ubf-gre-c");
        assert_eq!("mle".parse::<EstimatorSpec>().unwrap().method, Method::Mle);
        assert!("ubf-mcd".parse::<EstimatorSpec>().is_err());
    }
}
