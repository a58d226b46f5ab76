//! Campaign configuration files (TOML) and built-in presets.
//!
//! ```toml
//! preset = "table1-p10"        # optional base; remaining keys override it
//! name = "my-run"
//! p = 10
//! n = 100                      # default 10 p
//! correlation = "random"       # or "ar1"
//! rho = 0.9                    # ar1 only
//! contamination = "cellwise"   # "none" | "cellwise" | "casewise"
//! eps = [0.0, 0.02, 0.05]
//! k = [1, 2, 3]                # default 1..10 cellwise, 1..20 casewise
//! replicates = 50
//! seed = 1
//! estimators = ["mle", "uf-gse", "ubf-gre-c"]
//! rocke_alpha = 0.05
//! ```

use serde::Deserialize;

use super::campaign::{Contamination, EstimatorSpec, ScenarioConfig};
use super::model::CorrelationKind;
use crate::error::{Error, Result};
use crate::filter::FilterConfig;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    name: Option<String>,
    p: Option<usize>,
    n: Option<usize>,
    correlation: Option<String>,
    rho: Option<f64>,
    contamination: Option<String>,
    eps: Option<Vec<f64>>,
    k: Option<Vec<f64>>,
    replicates: Option<usize>,
    seed: Option<u64>,
    estimators: Option<Vec<String>>,
    rocke_alpha: Option<f64>,
}

const DEFAULT_ESTIMATORS: [&str; 5] = ["mle", "uf-gse", "ubf-gse", "uf-gre-c", "ubf-gre-c"];

pub const PRESETS: [&str; 7] = [
    "table1-p10",
    "table1-p10-ar1",
    "table1-p20",
    "table2-p10",
    "table2-p20",
    "table3-p10",
    "table3-p20",
];

fn k_grid(contamination: Contamination) -> Vec<f64> {
    match contamination {
        Contamination::Cellwise => (1..=10).map(f64::from).collect(),
        Contamination::Casewise => (1..=20).map(f64::from).collect(),
        Contamination::None => Vec::new(),
    }
}

/// A built-in scenario modelled on the paper's simulation tables, at desk scale.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let (p, correlation, contamination, eps, replicates): (usize, _, _, Vec<f64>, usize) = match name {
        "table1-p10" => (10, CorrelationKind::Random, Contamination::Cellwise, vec![0.0, 0.02, 0.05], 100),
        "table1-p10-ar1" => (10, CorrelationKind::Ar1(0.9), Contamination::Cellwise, vec![0.0, 0.02, 0.05], 100),
        "table1-p20" => (20, CorrelationKind::Random, Contamination::Cellwise, vec![0.0, 0.02, 0.05], 50),
        "table2-p10" => (10, CorrelationKind::Random, Contamination::Casewise, vec![0.0, 0.1, 0.2], 50),
        "table2-p20" => (20, CorrelationKind::Random, Contamination::Casewise, vec![0.0, 0.1, 0.2], 50),
        "table3-p10" => (10, CorrelationKind::Random, Contamination::None, vec![0.0], 200),
        "table3-p20" => (20, CorrelationKind::Random, Contamination::None, vec![0.0], 200),
        other => {
            return Err(Error::Config {
                path: "preset".into(),
                msg: format!("unknown preset {:?}; known: {}", other, PRESETS.join(", ")),
            })
        }
    };
    Ok(ScenarioConfig {
        name: name.to_string(),
        p,
        n: 10 * p,
        correlation,
        contamination,
        eps,
        k_grid: k_grid(contamination),
        replicates,
        seed: 1,
        estimators: DEFAULT_ESTIMATORS.iter().map(|s| s.parse()).collect::<Result<_>>()?,
        rocke_alpha: 0.05,
        filter: FilterConfig::default(),
    })
}

fn config_err(path: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        msg: msg.into(),
    }
}

/// Parses a campaign configuration, reporting the offending field path on error.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| config_err("", e.message().to_string()))?;
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_err(&path, e.into_inner().message().to_string())
    })?;

    let mut cfg = match &raw.preset {
        Some(name) => preset(name)?,
        None => {
            let p = raw.p.ok_or_else(|| config_err("p", "missing field (or give a preset)"))?;
            let contamination = Contamination::None;
            ScenarioConfig {
                name: "custom".into(),
                p,
                n: 10 * p,
                correlation: CorrelationKind::Random,
                contamination,
                eps: vec![0.0],
                k_grid: Vec::new(),
                replicates: 50,
                seed: 1,
                estimators: DEFAULT_ESTIMATORS.iter().map(|s| s.parse()).collect::<Result<_>>()?,
                rocke_alpha: 0.05,
                filter: FilterConfig::default(),
            }
        }
    };

    if let Some(name) = raw.name {
        cfg.name = name;
    }
    if let Some(p) = raw.p {
        cfg.p = p;
        cfg.n = 10 * p;
    }
    if let Some(n) = raw.n {
        cfg.n = n;
    }
    match raw.correlation.as_deref() {
        None => {
            if let Some(rho) = raw.rho {
                match cfg.correlation {
                    CorrelationKind::Ar1(_) => cfg.correlation = CorrelationKind::Ar1(rho),
                    CorrelationKind::Random => return Err(config_err("rho", "only valid with correlation = \"ar1\"")),
                }
            }
        }
        Some("random") => {
            if raw.rho.is_some() {
                return Err(config_err("rho", "only valid with correlation = \"ar1\""));
            }
            cfg.correlation = CorrelationKind::Random;
        }
        Some("ar1") => cfg.correlation = CorrelationKind::Ar1(raw.rho.unwrap_or(0.9)),
        Some(other) => return Err(config_err("correlation", format!("expected \"random\" or \"ar1\", found {:?}", other))),
    }
    if let CorrelationKind::Ar1(rho) = cfg.correlation {
        if !(rho.abs() < 1.0) {
            return Err(config_err("rho", "must lie in (-1, 1)"));
        }
    }
    if let Some(c) = raw.contamination.as_deref() {
        let kind = match c {
            "none" => Contamination::None,
            "cellwise" => Contamination::Cellwise,
            "casewise" => Contamination::Casewise,
            other => {
                return Err(config_err(
                    "contamination",
                    format!("expected \"none\", \"cellwise\" or \"casewise\", found {:?}", other),
                ))
            }
        };
        if kind != cfg.contamination {
            cfg.k_grid = k_grid(kind);
        }
        cfg.contamination = kind;
    }
    if let Some(eps) = raw.eps {
        if let Some((i, e)) = eps.iter().enumerate().find(|(_, e)| !(0.0..1.0).contains(*e)) {
            return Err(config_err(&format!("eps[{}]", i), format!("{} is outside [0, 1)", e)));
        }
        cfg.eps = eps;
    }
    if let Some(k) = raw.k {
        cfg.k_grid = k;
    }
    if let Some(r) = raw.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = raw.seed {
        cfg.seed = s;
    }
    if let Some(list) = raw.estimators {
        cfg.estimators = list
            .iter()
            .enumerate()
            .map(|(i, s)| s.parse().map_err(|_: Error| config_err(&format!("estimators[{}]", i), format!("unknown estimator {:?}", s))))
            .collect::<Result<Vec<EstimatorSpec>>>()?;
    }
    if let Some(a) = raw.rocke_alpha {
        if !(a > 0.0 && a < 0.5) {
            return Err(config_err("rocke_alpha", "must lie in (0, 0.5)"));
        }
        cfg.rocke_alpha = a;
    }
    cfg.validate().map_err(|e| config_err("", e.to_string()))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn unknown_field_names_its_path() {
        let err = parse_config("p = 10\nreplicatez = 3\n").unwrap_err();
        assert!(err.to_string().contains("replicatez"), "{}", err);
        let err = parse_config("p = \"ten\"\n").unwrap_err();
        match err {
            Error::Config { path, .. } => assert_eq!(path, "p"),
            other => panic!("{}", other),
        }
        let err = parse_config("preset = \"table1-p10\"\nestimators = [\"mle\", \"bogus\"]\n").unwrap_err();
        match err {
            Error::Config { path, .. } => assert_eq!(path, "estimators[1]"),
            other => panic!("{}", other),
        }
    }

    #[test]
    fn preset_with_overrides() {
        let cfg = parse_config("preset = \"table1-p10\"\nreplicates = 5\nseed = 9\n").unwrap();
        assert_eq!(cfg.replicates, 5);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.eps, vec![0.0, 0.02, 0.05]);
        assert_eq!(cfg.cells().len(), 21);
    }
}
