//! Filter, initial estimate and S-estimate chained together.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::data::{Dataset, Mask};
use crate::error::{Error, Result};
use crate::filter::{apply_external, ubf, uf, CombineMode, FilterConfig, FilterReport, FlagSource};
use crate::init::{emve, gaussian_em, EmveResult, SubsamplingMode, SubsamplingPlan};
use crate::linalg::{partial_distances, Patterns};
use crate::sest::{s_fit, FitOptions, RhoSpec, ScatterEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    None,
    Uf,
    Ubf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Gse,
    Gre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Emve,
    EmveC,
}

impl InitKind {
    pub fn mode(self) -> SubsamplingMode {
        match self {
            InitKind::Emve => SubsamplingMode::Uniform,
            InitKind::EmveC => SubsamplingMode::Cluster,
        }
    }
}

macro_rules! impl_names {
    ($t:ty, $what:literal, $($v:path => $s:literal),+) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($v => $s),+ })
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($s => Ok($v),)+
                    other => Err(Error::InvalidArgument(format!(concat!("unknown ", $what, " {:?}"), other))),
                }
            }
        }
    };
}

impl_names!(FilterKind, "filter", FilterKind::None => "none", FilterKind::Uf => "uf", FilterKind::Ubf => "ubf");
impl_names!(EstimatorKind, "estimator", EstimatorKind::Gse => "gse", EstimatorKind::Gre => "gre");
impl_names!(InitKind, "initializer", InitKind::Emve => "emve", InitKind::EmveC => "emve-c");

#[derive(Debug, Clone)]
pub struct ExternalMask {
    pub mask: Mask,
    pub mode: CombineMode,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub filter: FilterKind,
    pub filter_config: FilterConfig,
    pub external: Option<ExternalMask>,
    pub estimator: EstimatorKind,
    pub init: InitKind,
    pub rocke_alpha: f64,
    pub subsamples: Option<usize>,
    pub subsample_size: Option<usize>,
    pub seed: u64,
    pub fit: FitOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            filter: FilterKind::Ubf,
            filter_config: FilterConfig::default(),
            external: None,
            estimator: EstimatorKind::Gre,
            init: InitKind::EmveC,
            rocke_alpha: 0.05,
            subsamples: None,
            subsample_size: None,
            seed: 0,
            fit: FitOptions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn plan(&self) -> SubsamplingPlan {
        let mut plan = match self.init {
            InitKind::Emve => SubsamplingPlan::uniform(self.seed),
            InitKind::EmveC => SubsamplingPlan::cluster(self.seed),
        };
        if let Some(m) = self.subsamples {
            plan.n_subsamples = m;
        }
        plan.subsample_size = self.subsample_size;
        plan
    }

    pub fn rho_spec(&self, p: usize) -> Result<RhoSpec> {
        match self.estimator {
            EstimatorKind::Gse => RhoSpec::tukey(p),
            EstimatorKind::Gre => RhoSpec::rocke(p, self.rocke_alpha),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub filter: FilterReport,
    pub initial: EmveResult,
    pub estimate: ScatterEstimate,
    /// Partial squared distances of every case over its cells observed before filtering.
    pub full_distances: Vec<f64>,
    pub warnings: Vec<String>,
    pub timing: StageTiming,
}

/// Wall time of each pipeline stage.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageTiming {
    pub filter: Duration,
    pub initial: Duration,
    pub fit: Duration,
}

/// Report for an unfiltered run.
pub fn no_filter(mask: &Mask) -> FilterReport {
    let (n, p) = mask.dims();
    FilterReport {
        mask: mask.clone(),
        flagged_by: vec![FlagSource::None; n * p],
        per_column_fraction: vec![0.0; p],
        m_counts: vec![0; n * p],
        c_counts: vec![0; n * p],
        skipped_pairs: Vec::new(),
    }
}

pub fn run_filter(data: &Dataset, cfg: &PipelineConfig) -> Result<FilterReport> {
    let report = match cfg.filter {
        FilterKind::None => no_filter(data.mask()),
        FilterKind::Uf => uf(data, &cfg.filter_config)?,
        FilterKind::Ubf => ubf(data, &cfg.filter_config)?,
    };
    match &cfg.external {
        None => Ok(report),
        Some(ext) => apply_external(&report, &ext.mask, data.mask(), ext.mode),
    }
}

/// Size checks shared by the estimating entry points.
pub fn check_size(n: usize, p: usize) -> Result<Vec<String>> {
    if n <= 2 * p {
        return Err(Error::TooFewCases { n, p });
    }
    let mut warnings = Vec::new();
    if n < 5 * p {
        warnings.push(format!(
            "n = {} is below 5p = {}; estimates may be unstable",
            n,
            5 * p
        ));
    }
    Ok(warnings)
}

/// Filter, then S-estimate from an EMVE start on the filtered data.
pub fn two_step(data: &Dataset, cfg: &PipelineConfig) -> Result<PipelineResult> {
    let warnings = check_size(data.n(), data.p())?;
    let spec = cfg.rho_spec(data.p())?;
    let mut timing = StageTiming::default();
    let start = Instant::now();
    let filter = run_filter(data, cfg)?;
    timing.filter = start.elapsed();
    let filtered = data.with_mask(filter.mask.clone())?;
    let start = Instant::now();
    let initial = emve(&filtered, &cfg.plan())?;
    timing.initial = start.elapsed();
    let start = Instant::now();
    let estimate = s_fit(&filtered, &initial.estimate, &spec, &cfg.fit)?;
    timing.fit = start.elapsed();
    let full = partial_distances(data, &Patterns::from_mask(data.mask()), &estimate.mu, &estimate.sigma)?;
    Ok(PipelineResult {
        filter,
        initial,
        estimate,
        full_distances: full.distances,
        warnings,
        timing,
    })
}

/// Gaussian maximum likelihood, the non-robust baseline.
pub fn mle(data: &Dataset) -> Result<ScatterEstimate> {
    let fit = gaussian_em(data, 10_000, 1e-10)?;
    let patterns = Patterns::from_mask(data.mask());
    let es = partial_distances(data, &patterns, &fit.mu, &fit.sigma)?;
    Ok(ScatterEstimate {
        mu: fit.mu,
        sigma: fit.sigma,
        weights: patterns.dims.iter().map(|&k| if k > 0 { 1.0 } else { 0.0 }).collect(),
        distances: es.distances,
        scale: f64::NAN,
        iterations: fit.iterations,
        converged: fit.converged,
        dropped: patterns.dropped,
    })
}
