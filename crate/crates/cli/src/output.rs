//! JSON and CSV artifacts. Numbers are written in shortest round-trip form,
//! so re-parsing yields the in-memory values exactly; NaN becomes null/NA.

use std::time::Duration;

use robscatter::filter::FilterReport;
use robscatter::lab::{CampaignResult, CorrelationKind, ScenarioConfig};
use robscatter::pipeline::{PipelineConfig, PipelineResult, StageTiming};
use serde::{Deserialize, Serialize};

use crate::table::Table;
use crate::{CliError, ErrorKind};

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{}", v)
    } else {
        "NA".into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSettings {
    pub filter: String,
    pub estimator: String,
    pub init: String,
    pub alpha_uni: f64,
    pub alpha_biv: f64,
    pub delta: f64,
    pub rocke_alpha: f64,
    pub subsamples: usize,
    pub subsample_size: Option<usize>,
    pub seed: u64,
    pub external_mask: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub flagged_cells: usize,
    pub flagged_fraction: f64,
    pub per_column_fraction: Vec<f64>,
    /// Column pairs (1-based) the bivariate stage had to skip.
    pub skipped_pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialSummary {
    pub objective: f64,
    pub candidate: usize,
    pub pool_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateOutput {
    pub n: usize,
    pub p: usize,
    pub columns: Vec<String>,
    pub settings: PipelineSettings,
    pub mu: Vec<f64>,
    /// Row-major, exactly symmetric.
    pub sigma: Vec<Vec<f64>>,
    /// Final case weights in [0, 1].
    pub weights: Vec<f64>,
    /// Squared Mahalanobis distances under the final estimate over each
    /// case's cells observed on input; null for empty rows.
    pub distances: Vec<Option<f64>>,
    pub scale: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// 1-based rows with no cell left after filtering.
    pub dropped: Vec<usize>,
    pub initial: InitialSummary,
    pub filter: FilterSummary,
    pub warnings: Vec<String>,
}

fn filter_summary(r: &FilterReport) -> FilterSummary {
    FilterSummary {
        flagged_cells: r.flagged_count(),
        flagged_fraction: r.flagged_fraction(),
        per_column_fraction: r.per_column_fraction.clone(),
        skipped_pairs: r.skipped_pairs.iter().map(|&(a, b)| (a + 1, b + 1)).collect(),
    }
}

impl EstimateOutput {
    pub fn new(table: &Table, cfg: &PipelineConfig, r: &PipelineResult) -> Self {
        let est = &r.estimate;
        let p = est.sigma.nrows();
        let sigma = (0..p)
            .map(|j| (0..p).map(|k| est.sigma[(j.min(k), j.max(k))]).collect())
            .collect();
        EstimateOutput {
            n: table.data.n(),
            p,
            columns: table.columns.clone(),
            settings: PipelineSettings {
                filter: cfg.filter.to_string(),
                estimator: cfg.estimator.to_string(),
                init: cfg.init.to_string(),
                alpha_uni: cfg.filter_config.alpha_uni,
                alpha_biv: cfg.filter_config.alpha_biv,
                delta: cfg.filter_config.delta,
                rocke_alpha: cfg.rocke_alpha,
                subsamples: cfg.plan().n_subsamples,
                subsample_size: cfg.subsample_size,
                seed: cfg.seed,
                external_mask: cfg.external.as_ref().map(|e| format!("{:?}", e.mode).to_lowercase()),
            },
            mu: est.mu.iter().copied().collect(),
            sigma,
            weights: est.weights.clone(),
            distances: r.full_distances.iter().map(|&d| finite(d)).collect(),
            scale: finite(est.scale),
            iterations: est.iterations,
            converged: est.converged,
            dropped: est.dropped.iter().map(|i| i + 1).collect(),
            initial: InitialSummary {
                objective: r.initial.objective,
                candidate: r.initial.candidate,
                pool_size: r.initial.pool.len(),
            },
            filter: filter_summary(&r.filter),
            warnings: r.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

/// Wall times, kept apart from the other artifacts, which are byte-stable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub stages: Vec<StageTime>,
}

fn stage(name: &str, d: Duration) -> StageTime {
    StageTime { stage: name.into(), seconds: d.as_secs_f64() }
}

impl Timing {
    pub fn from_stages(t: &StageTiming, total: Duration) -> Self {
        Timing {
            total_seconds: total.as_secs_f64(),
            stages: vec![stage("filter", t.filter), stage("initial", t.initial), stage("fit", t.fit)],
        }
    }

    /// Per-estimator time summed over replicates.
    pub fn from_campaign(r: &CampaignResult, total: Duration) -> Self {
        Timing {
            total_seconds: total.as_secs_f64(),
            stages: r.timing.iter().map(|(l, d)| stage(l, *d)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxEntry {
    pub estimator: String,
    pub eps: f64,
    pub max_mean_lrt: f64,
    pub k_at_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub scenario: String,
    pub p: usize,
    pub n: usize,
    pub correlation: String,
    pub contamination: String,
    pub eps: Vec<f64>,
    pub k_grid: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub estimators: Vec<String>,
    pub max_over_k: Vec<MaxEntry>,
    /// MLE clean-data LRT over each estimator's.
    pub efficiency: Vec<(String, f64)>,
    pub failed_replicates: usize,
}

impl CampaignSummary {
    pub fn new(cfg: &ScenarioConfig, r: &CampaignResult) -> Self {
        CampaignSummary {
            scenario: cfg.name.clone(),
            p: cfg.p,
            n: cfg.n,
            correlation: match cfg.correlation {
                CorrelationKind::Random => "random".into(),
                CorrelationKind::Ar1(rho) => format!("ar1({})", rho),
            },
            contamination: cfg.contamination.to_string(),
            eps: cfg.eps.clone(),
            k_grid: cfg.k_grid.clone(),
            replicates: cfg.replicates,
            seed: cfg.seed,
            estimators: cfg.estimators.iter().map(|e| e.label.clone()).collect(),
            max_over_k: r
                .max_over_k
                .iter()
                .map(|m| MaxEntry {
                    estimator: m.estimator.clone(),
                    eps: m.eps,
                    max_mean_lrt: m.max_mean_lrt,
                    k_at_max: m.k_at_max,
                })
                .collect(),
            efficiency: r.efficiency.clone(),
            failed_replicates: r.rows.iter().map(|row| row.failed).sum(),
        }
    }
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError { kind: ErrorKind::Input, message: e.to_string() }
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(internal)?;
    s.push('\n');
    Ok(s)
}

fn csv_string(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(internal)?;
    for r in rows {
        w.write_record(&r).map_err(internal)?;
    }
    String::from_utf8(w.into_inner().map_err(internal)?).map_err(internal)
}

/// One line per removed cell: 1-based row and column, column name, value,
/// which stage removed it, and the bivariate counts m and c.
pub fn cell_flags_csv(table: &Table, r: &FilterReport) -> Result<String, CliError> {
    let p = table.data.p();
    let rows = (0..table.data.n() * p)
        .filter(|&c| r.flagged_by[c] != robscatter::filter::FlagSource::None)
        .map(|c| {
            let (i, j) = (c / p, c % p);
            vec![
                (i + 1).to_string(),
                (j + 1).to_string(),
                table.columns[j].clone(),
                num(table.data.values()[(i, j)]),
                r.flagged_by[c].as_str().to_string(),
                r.m_counts[c].to_string(),
                r.c_counts[c].to_string(),
            ]
        });
    csv_string(&["row", "column", "name", "value", "flagged_by", "m", "c"], rows)
}

/// One line per case: observed cells on input and after filtering, final
/// weight and squared distance.
pub fn cases_csv(table: &Table, r: &PipelineResult) -> Result<String, CliError> {
    let rows = (0..table.data.n()).map(|i| {
        vec![
            (i + 1).to_string(),
            table.data.mask().row_observed(i).to_string(),
            r.filter.mask.row_observed(i).to_string(),
            num(r.estimate.weights[i]),
            num(r.full_distances[i]),
        ]
    });
    csv_string(&["row", "observed", "retained", "weight", "distance"], rows)
}

pub fn campaign_csv(r: &CampaignResult) -> Result<String, CliError> {
    let rows = r.rows.iter().map(|row| {
        vec![
            row.scenario.clone(),
            row.estimator.clone(),
            num(row.eps),
            num(row.k),
            num(row.mean_lrt),
            num(row.se),
            (r.replicates - row.failed).to_string(),
            row.failed.to_string(),
        ]
    });
    csv_string(&["scenario", "estimator", "eps", "k", "mean_lrt", "se", "replicates", "failed"], rows)
}
