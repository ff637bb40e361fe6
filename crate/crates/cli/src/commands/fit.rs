//! `fit-rates`: spatial convergence and cost rates from a one-direction sweep.

use std::path::Path;

use misc_iga::adaptation::{fit_spatial_rates, SpatialSweep};
use misc_iga::backend::Backend;
use serde::{Deserialize, Serialize};

use super::{backend, ensure_dir, Metadata, Outcome};
use crate::config::{ExperimentConfig, FitConfig};
use crate::error::{config, io_err, CliError, Result};
use crate::table::{fmt_f64, Table};

pub const RATES_FILE: &str = "rates.toml";
pub const SAMPLES_FILE: &str = "fit_samples.csv";
pub const METADATA_FILE: &str = "fit_metadata.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub r: Vec<f64>,
    pub c: Vec<f64>,
    /// RMS residuals of the `log2` error and cost regressions.
    pub r_residual: Vec<f64>,
    pub c_residual: Vec<f64>,
    pub base: Vec<u32>,
    pub levels: Vec<u32>,
    pub y: Vec<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl RateReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).expect("report serializes");
        std::fs::write(path, text).map_err(io_err(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Runs the sweep and returns the report plus the per-level samples.
pub fn fit_rates(backend: &dyn Backend, fit: &FitConfig) -> Result<(RateReport, Table)> {
    let d = backend.spatial_dim();
    let n = backend.stochastic_dim();
    let base = fit.base.clone().unwrap_or_else(|| vec![3; d]);
    let y = fit.y.clone().unwrap_or_else(|| vec![0.0; n]);
    if base.len() != d || y.len() != n {
        return config(format!("fit.base needs {d} entries and fit.y needs {n}"));
    }
    let sweep = SpatialSweep {
        base: base.clone(),
        levels: fit.levels.clone(),
    };
    let res = fit_spatial_rates(backend, &sweep, &y).map_err(|e| match e {
        misc_iga::Error::Argument(msg) => CliError::Config(format!("fit: {msg}")),
        other => CliError::Solver(other),
    })?;
    let mut samples = Table::new(["direction", "level", "error", "cost"]);
    for (dir, level, err, cost) in &res.samples {
        samples.push(vec![
            dir.to_string(),
            level.to_string(),
            fmt_f64(*err),
            fmt_f64(*cost),
        ]);
    }
    let report = RateReport {
        r: res.r,
        c: res.c,
        r_residual: res.error_fits.iter().map(|f| f.residual).collect(),
        c_residual: res.cost_fits.iter().map(|f| f.residual).collect(),
        base,
        levels: fit.levels.clone(),
        y,
        warnings: res.warnings,
    };
    Ok((report, samples))
}

pub fn cmd_fit_rates(cfg: &ExperimentConfig) -> Result<Outcome> {
    let start = std::time::Instant::now();
    let b = backend(cfg)?;
    let (report, samples) = fit_rates(b.as_ref(), &cfg.fit)?;
    let dir = &cfg.output.dir;
    ensure_dir(dir)?;
    report.write(&dir.join(RATES_FILE))?;
    samples.write(&dir.join(SAMPLES_FILE))?;
    let mut meta = Metadata::new("fit-rates", cfg);
    meta.wall_seconds.push(start.elapsed().as_secs_f64());
    meta.write(&dir.join(METADATA_FILE))?;
    let mut summary = String::new();
    for i in 0..report.r.len() {
        summary.push_str(&format!(
            "direction {i}: r = {:.3} (residual {:.3}), c = {:.3} (residual {:.3})\n",
            report.r[i], report.r_residual[i], report.c[i], report.c_residual[i]
        ));
    }
    for w in &report.warnings {
        summary.push_str(&format!("warning: {w}\n"));
    }
    Ok(Outcome::ok(summary))
}
