//! Subcommand implementations.

pub mod convergence;
pub mod fit;
pub mod mc;
pub mod misc;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use misc_iga::backend::Backend;
use misc_iga::misc::Estimator;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{config, io_err, CliError, Result, EXIT_OK};
use fit::RateReport;

/// Result of a subcommand: exit status plus a human-readable summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit: i32,
    pub summary: String,
}

impl Outcome {
    pub fn ok(summary: String) -> Self {
        Self { exit: EXIT_OK, summary }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesUsed {
    pub r: Vec<f64>,
    pub c: Vec<f64>,
    pub g: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceUsed {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub value: f64,
}

/// Run metadata; the only output carrying wall times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub command: String,
    pub config_hash: String,
    pub problem: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesUsed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceUsed>,
    #[serde(default)]
    pub wall_seconds: Vec<f64>,
}

impl Metadata {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            command: command.to_string(),
            config_hash: cfg.hash(),
            problem: cfg.problem.descriptor(),
            seed: cfg.seed,
            rates: None,
            reference: None,
            wall_seconds: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).expect("metadata serializes");
        std::fs::write(path, text).map_err(io_err(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

pub(crate) fn backend(cfg: &ExperimentConfig) -> Result<Arc<dyn Backend>> {
    Ok(Arc::new(cfg.problem.build()?))
}

fn rates_file(cfg: &ExperimentConfig) -> PathBuf {
    cfg.rates
        .as_ref()
        .and_then(|r| r.file.clone())
        .unwrap_or_else(|| cfg.output.dir.join(fit::RATES_FILE))
}

/// Rates from `[rates]`, falling back to the report written by `fit-rates`.
pub fn resolve_rates(cfg: &ExperimentConfig, d: usize, n: usize) -> Result<RatesUsed> {
    let inline = cfg.rates.clone().unwrap_or_default();
    let (mut r, mut c) = (inline.r, inline.c);
    if r.is_none() || c.is_none() {
        let path = rates_file(cfg);
        if !path.exists() {
            return config(format!(
                "no rates given and {} does not exist; run fit-rates or set [rates]",
                path.display()
            ));
        }
        let report = RateReport::read(&path)?;
        r = r.or(Some(report.r));
        c = c.or(Some(report.c));
    }
    let (r, c) = (r.expect("set above"), c.expect("set above"));
    let g = inline.g.unwrap_or_else(|| vec![1.0; n]);
    if r.len() != d || c.len() != d || g.len() != n {
        return config(format!("rates need {d} spatial and {n} stochastic entries"));
    }
    Ok(RatesUsed { r, c, g })
}

/// Configured reference value, solving for it when no value is given.
pub fn resolve_reference(cfg: &ExperimentConfig, est: &Estimator) -> Result<Option<ReferenceUsed>> {
    let Some(rc) = &cfg.reference else {
        return Ok(None);
    };
    if rc.alpha.len() != est.spatial_dim() || rc.beta.len() != est.stochastic_dim() {
        return config("reference alpha/beta have the wrong length");
    }
    if rc.alpha.iter().chain(&rc.beta).any(|&l| l == 0) {
        return config("reference levels must be >= 1");
    }
    let value = match rc.value {
        Some(v) => v,
        None => est.full_tensor_value(&rc.alpha, &rc.beta)?,
    };
    Ok(Some(ReferenceUsed {
        alpha: rc.alpha.clone(),
        beta: rc.beta.clone(),
        value,
    }))
}

/// `sum_i alpha_i c_i` as a power of two.
pub(crate) fn solve_work(alpha: &[u32], c: &[f64]) -> f64 {
    alpha
        .iter()
        .zip(c)
        .map(|(&a, c)| a as f64 * c)
        .sum::<f64>()
        .exp2()
}
