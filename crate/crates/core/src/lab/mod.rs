//! Simulation laboratory: true models, contamination and campaigns.

mod campaign;
mod config;
mod model;

pub use campaign::{
    run_campaign, CampaignResult, CampaignRow, Contamination, EstimatorSpec, MaxRow, Method, ScenarioConfig, MAX_FAILURE_RATE,
};
pub use config::{parse_config, preset, PRESETS};
pub use model::{
    ar1_correlation, contaminate_casewise, contaminate_cellwise, gen_correlation, lrt_distance, random_correlation, random_correlation_with, CorrelationKind,
    TrueModel, RANDOM_CORRELATION_CONDITION,
};
