//! Command-line front end: estimation and filtering on CSV data, and
//! simulation campaigns.

pub mod output;
pub mod table;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use robscatter::filter::{load_mask, CombineMode, FilterConfig};
use robscatter::lab::{parse_config, preset, run_campaign};
use robscatter::pipeline::{run_filter, two_step, EstimatorKind, ExternalMask, FilterKind, InitKind, PipelineConfig};
use robscatter::Error;

use output::{CampaignSummary, EstimateOutput, Timing};
use table::{read_table, Table};

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "ROBSCATTER_THREADS";

#[derive(Debug, Parser)]
#[command(name = "robscatter", version, about = "Robust location and scatter for data with cellwise and casewise outliers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter, then estimate location and scatter.
    Estimate(EstimateArgs),
    /// Run the cell filter only.
    Filter(FilterArgs),
    /// Run a simulation campaign.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterChoice {
    None,
    Uf,
    Ubf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorChoice {
    Gse,
    Gre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitChoice {
    Emve,
    #[value(name = "emve-c")]
    EmveC,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MaskMode {
    /// Remove a cell only when both the filter and the mask remove it.
    Intersection,
    /// Remove a cell when either removes it.
    Union,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Comma-separated numeric data; a non-numeric first line is a header.
    pub input: PathBuf,
    /// Token marking a missing cell, in addition to empty fields.
    #[arg(long, default_value = "NA")]
    pub na_token: String,
    #[arg(long, short = 'o', default_value = ".")]
    pub output_dir: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct FilterFlags {
    #[arg(long, value_enum, default_value = "ubf")]
    pub filter: FilterChoice,
    #[arg(long, default_value_t = 0.95)]
    pub alpha_uni: f64,
    #[arg(long, default_value_t = 0.85)]
    pub alpha_biv: f64,
    #[arg(long, default_value_t = 0.10)]
    pub delta: f64,
    /// 0/1 matrix (0 = remove) from an external filter, combined with ours.
    #[arg(long)]
    pub external_mask: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "intersection", requires = "external_mask")]
    pub mask_mode: MaskMode,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub filter: FilterFlags,
    #[arg(long, value_enum, default_value = "gre")]
    pub estimator: EstimatorChoice,
    #[arg(long, value_enum, default_value = "emve-c")]
    pub init: InitChoice,
    #[arg(long, default_value_t = 0.05)]
    pub rocke_alpha: f64,
    /// Number of subsamples for the initial estimate (default: 500 for emve, 50 for emve-c).
    #[arg(long)]
    pub subsamples: Option<usize>,
    /// Subsample size (default: (p + 1) / (1 - missing fraction), doubled for emve-c).
    #[arg(long)]
    pub subsample_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct FilterArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub filter: FilterFlags,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// TOML campaign configuration.
    #[arg(required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in scenario, used when no configuration file is given.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated estimator selectors, e.g. mle,uf-gse,ubf-gre-c.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    #[arg(long, short = 'o', default_value = ".")]
    pub output_dir: PathBuf,
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numerical,
    Config,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Input => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Config => 4,
        }
    }

    fn config(e: Error) -> Self {
        CliError { kind: ErrorKind::Config, message: e.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::Config { .. } => ErrorKind::Config,
            e if e.is_numerical() => ErrorKind::Numerical,
            _ => ErrorKind::Input,
        };
        CliError { kind, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError { kind: ErrorKind::Input, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<()> {
    let threads = match &cli.command {
        Command::Estimate(a) => a.input.threads,
        Command::Filter(a) => a.input.threads,
        Command::Simulate(a) => a.threads,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError { kind: ErrorKind::Input, message: "--threads must be positive".into() });
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError { kind: ErrorKind::Input, message: e.to_string() })?;
    pool.install(|| match cli.command {
        Command::Estimate(a) => cmd_estimate(&a),
        Command::Filter(a) => cmd_filter(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    })
}

fn pipeline_config(flags: &FilterFlags, table: &Table) -> CliResult<PipelineConfig> {
    let filter_config = FilterConfig {
        alpha_uni: flags.alpha_uni,
        alpha_biv: flags.alpha_biv,
        delta: flags.delta,
        ..FilterConfig::default()
    };
    filter_config.validate().map_err(CliError::config)?;
    let external = match &flags.external_mask {
        Some(path) => Some(ExternalMask {
            mask: load_mask(path, table.data.n(), table.data.p())?,
            mode: match flags.mask_mode {
                MaskMode::Intersection => CombineMode::Intersection,
                MaskMode::Union => CombineMode::Union,
            },
        }),
        None => None,
    };
    Ok(PipelineConfig {
        filter: match flags.filter {
            FilterChoice::None => FilterKind::None,
            FilterChoice::Uf => FilterKind::Uf,
            FilterChoice::Ubf => FilterKind::Ubf,
        },
        filter_config,
        external,
        ..PipelineConfig::default()
    })
}

fn prepare_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError {
        kind: ErrorKind::Input,
        message: format!("cannot create output directory {}: {}", dir.display(), e),
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError {
        kind: ErrorKind::Input,
        message: format!("cannot write {}: {}", path.display(), e),
    })?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_estimate(args: &EstimateArgs) -> CliResult<()> {
    let start = Instant::now();
    let table = read_table(&args.input.input, &args.input.na_token)?;
    let mut cfg = pipeline_config(&args.filter, &table)?;
    cfg.estimator = match args.estimator {
        EstimatorChoice::Gse => EstimatorKind::Gse,
        EstimatorChoice::Gre => EstimatorKind::Gre,
    };
    cfg.init = match args.init {
        InitChoice::Emve => InitKind::Emve,
        InitChoice::EmveC => InitKind::EmveC,
    };
    if !(args.rocke_alpha > 0.0 && args.rocke_alpha < 1.0) {
        return Err(CliError::config(Error::InvalidProbability(args.rocke_alpha)));
    }
    cfg.rocke_alpha = args.rocke_alpha;
    cfg.subsamples = args.subsamples;
    cfg.subsample_size = args.subsample_size;
    cfg.seed = args.seed;

    let result = two_step(&table.data, &cfg)?;
    for w in &result.warnings {
        eprintln!("warning: {}", w);
    }
    if !result.estimate.converged {
        eprintln!("warning: S-estimate did not converge in {} iterations", result.estimate.iterations);
    }
    let out = EstimateOutput::new(&table, &cfg, &result);
    let timing = Timing::from_stages(&result.timing, start.elapsed());

    let dir = &args.input.output_dir;
    prepare_dir(dir)?;
    write(dir, "estimate.json", &output::to_json(&out)?)?;
    write(dir, "cell_flags.csv", &output::cell_flags_csv(&table, &result.filter)?)?;
    write(dir, "cases.csv", &output::cases_csv(&table, &result)?)?;
    write(dir, "timing.json", &output::to_json(&timing)?)?;
    Ok(())
}

pub fn cmd_filter(args: &FilterArgs) -> CliResult<()> {
    let table = read_table(&args.input.input, &args.input.na_token)?;
    let cfg = pipeline_config(&args.filter, &table)?;
    let report = run_filter(&table.data, &cfg)?;
    eprintln!(
        "flagged {} of {} observed cells ({:.2}%)",
        report.flagged_count(),
        table.data.mask().observed_count(),
        100.0 * report.flagged_fraction()
    );
    let dir = &args.input.output_dir;
    prepare_dir(dir)?;
    write(dir, "cell_flags.csv", &output::cell_flags_csv(&table, &report)?)?;
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| CliError {
                kind: ErrorKind::Config,
                message: format!("cannot read {}: {}", path.display(), e),
            })?;
            parse_config(&text).map_err(CliError::config)?
        }
        (None, Some(name)) => preset(name).map_err(CliError::config)?,
        (None, None) => unreachable!("clap requires a config or a preset"),
    };
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(list) = &args.estimators {
        cfg.estimators = list
            .iter()
            .map(|s| s.parse())
            .collect::<robscatter::Result<_>>()
            .map_err(CliError::config)?;
    }
    cfg.validate().map_err(CliError::config)?;

    let start = Instant::now();
    let result = run_campaign(&cfg)?;
    let dir = &args.output_dir;
    prepare_dir(dir)?;
    write(dir, "campaign.csv", &output::campaign_csv(&result)?)?;
    write(dir, "summary.json", &output::to_json(&CampaignSummary::new(&cfg, &result))?)?;
    write(dir, "timing.json", &output::to_json(&Timing::from_campaign(&result, start.elapsed()))?)?;
    for m in &result.max_over_k {
        eprintln!("{:<12} eps = {:<5} max mean LRT {:.3} (k = {})", m.estimator, m.eps, m.max_mean_lrt, m.k_at_max);
    }
    Ok(())
}
