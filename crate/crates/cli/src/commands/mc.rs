//! `mc`: single-level Monte Carlo baseline.

use misc_iga::backend::Backend;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{backend, ensure_dir, resolve_rates, solve_work, Metadata, Outcome, RatesUsed, ReferenceUsed};
use crate::config::{ExperimentConfig, McConfig};
use crate::error::{config, CliError, Result};
use crate::table::{fmt_f64, fmt_levels, fmt_opt, Table};
use misc_iga::misc::Estimator;

pub const TABLE_FILE: &str = "mc.csv";
pub const METADATA_FILE: &str = "mc_metadata.toml";

#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub tol: Option<f64>,
    pub alpha: Vec<u32>,
    pub samples: usize,
    pub replicas: usize,
    /// Average of the replica means.
    pub mean: f64,
    /// Average of the replica standard-error estimates.
    pub std_error: f64,
    /// RMS over replicas of `mean_r - reference`.
    pub error: Option<f64>,
    pub work: f64,
    /// Measured solver cost of one replica.
    pub cost: f64,
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn draw(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `samples` draws per replica; replica `r` uses stream `r`, so smaller
/// sample counts are prefixes of larger ones.
fn replica_values(
    backend: &dyn Backend,
    alpha: &[u32],
    samples: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<(Vec<f64>, f64)>> {
    let n = backend.stochastic_dim();
    (0..replicas)
        .map(|r| {
            let mut g = rng(seed, r as u64);
            let mut values = Vec::with_capacity(samples);
            let mut cost = 0.0;
            for _ in 0..samples {
                let y = draw(&mut g, n);
                let s = backend.solve(alpha, &y)?;
                values.push(s.value);
                cost += s.cost;
            }
            Ok((values, cost))
        })
        .collect()
}

fn summarize(
    tol: Option<f64>,
    alpha: &[u32],
    per_replica: &[(Vec<f64>, f64)],
    samples: usize,
    c: &[f64],
    reference: Option<f64>,
) -> McRow {
    let stats: Vec<(f64, f64)> = per_replica
        .iter()
        .map(|(v, _)| mean_and_se(&v[..samples]))
        .collect();
    let k = stats.len() as f64;
    let cost_per_sample = per_replica[0].1 / per_replica[0].0.len() as f64;
    McRow {
        tol,
        alpha: alpha.to_vec(),
        samples,
        replicas: per_replica.len(),
        mean: stats.iter().map(|s| s.0).sum::<f64>() / k,
        std_error: stats.iter().map(|s| s.1).sum::<f64>() / k,
        error: reference.map(|r| (stats.iter().map(|s| (s.0 - r).powi(2)).sum::<f64>() / k).sqrt()),
        work: samples as f64 * solve_work(alpha, c),
        cost: cost_per_sample * samples as f64,
    }
}

/// Fixed level, one row per sample count.
pub fn mc_fixed(
    backend: &dyn Backend,
    alpha: &[u32],
    samples: &[usize],
    replicas: usize,
    seed: u64,
    c: &[f64],
    reference: Option<f64>,
) -> Result<Vec<McRow>> {
    let max = samples.iter().copied().max().unwrap_or(0);
    if max < 2 {
        return config("mc needs sample counts >= 2");
    }
    let per_replica = replica_values(backend, alpha, max, replicas, seed)?;
    Ok(samples
        .iter()
        .map(|&s| summarize(None, alpha, &per_replica, s, c, reference))
        .collect())
}

/// Isotropic level and sample count chosen for a target tolerance: the
/// smallest level whose pilot estimate of `E[phi_{k+1} - phi_k]` is within
/// `tol / 2`, then `(2 sigma / tol)^2` samples.
pub fn choose_level(
    backend: &dyn Backend,
    tol: f64,
    pilot: usize,
    max_level: u32,
    seed: u64,
    stream: u64,
) -> Result<(Vec<u32>, usize)> {
    let d = backend.spatial_dim();
    let n = backend.stochastic_dim();
    let mut g = rng(seed, stream);
    let ys: Vec<Vec<f64>> = (0..pilot).map(|_| draw(&mut g, n)).collect();
    let values = |k: u32| -> Result<Vec<f64>> {
        ys.iter()
            .map(|y| Ok(backend.solve(&vec![k; d], y)?.value))
            .collect()
    };
    let mut coarse = values(1)?;
    for k in 1..max_level {
        let fine = values(k + 1)?;
        let diff: Vec<f64> = fine.iter().zip(&coarse).map(|(f, c)| f - c).collect();
        let (bias, _) = mean_and_se(&diff);
        if bias.abs() <= tol / 2.0 {
            let (_, se) = mean_and_se(&coarse);
            let sigma = se * (pilot as f64).sqrt();
            let samples = ((2.0 * sigma / tol).powi(2).ceil() as usize).max(2);
            return Ok((vec![k; d], samples));
        }
        coarse = fine;
    }
    Err(CliError::Config(format!(
        "mc: no level up to {max_level} meets tolerance {tol:e}"
    )))
}

pub fn mc_tolerances(
    backend: &dyn Backend,
    cfg: &McConfig,
    seed: u64,
    c: &[f64],
    reference: Option<f64>,
) -> Result<Vec<McRow>> {
    let mut rows = Vec::new();
    for (i, &tol) in cfg.tolerances.iter().enumerate() {
        let (alpha, samples) = choose_level(backend, tol, cfg.pilot, cfg.max_level, seed, u64::MAX - i as u64)?;
        let per_replica = replica_values(backend, &alpha, samples, cfg.replicas, seed)?;
        rows.push(summarize(Some(tol), &alpha, &per_replica, samples, c, reference));
    }
    Ok(rows)
}

pub fn mc_table(rows: &[McRow]) -> Table {
    let mut t = Table::new([
        "tol", "alpha", "samples", "replicas", "mean", "std_error", "error", "work", "cost",
    ]);
    for r in rows {
        t.push(vec![
            fmt_opt(r.tol),
            fmt_levels(&r.alpha),
            r.samples.to_string(),
            r.replicas.to_string(),
            fmt_f64(r.mean),
            fmt_f64(r.std_error),
            fmt_opt(r.error),
            fmt_f64(r.work),
            fmt_f64(r.cost),
        ]);
    }
    t
}

pub fn cmd_mc(cfg: &ExperimentConfig) -> Result<Outcome> {
    let start = std::time::Instant::now();
    let b = backend(cfg)?;
    let (d, n) = (b.spatial_dim(), b.stochastic_dim());
    let rates: RatesUsed = resolve_rates(cfg, d, n)?;
    let est = Estimator::new(b.clone());
    let reference: Option<ReferenceUsed> = super::resolve_reference(cfg, &est)?;
    let refv = reference.as_ref().map(|r| r.value);
    let mc = &cfg.mc;
    let mut rows = Vec::new();
    if let Some(alpha) = &mc.alpha {
        if alpha.len() != d || alpha.contains(&0) {
            return config(format!("mc.alpha needs {d} levels >= 1"));
        }
        if mc.samples.is_empty() {
            return config("mc.alpha needs mc.samples");
        }
        rows.extend(mc_fixed(b.as_ref(), alpha, &mc.samples, mc.replicas, cfg.seed, &rates.c, refv)?);
    }
    if !mc.tolerances.is_empty() {
        rows.extend(mc_tolerances(b.as_ref(), mc, cfg.seed, &rates.c, refv)?);
    }
    if rows.is_empty() {
        return config("mc needs mc.alpha with mc.samples, or mc.tolerances");
    }
    let dir = &cfg.output.dir;
    ensure_dir(dir)?;
    mc_table(&rows).write(&dir.join(TABLE_FILE))?;
    let mut meta = Metadata::new("mc", cfg);
    meta.rates = Some(rates);
    meta.reference = reference;
    meta.wall_seconds.push(start.elapsed().as_secs_f64());
    meta.write(&dir.join(METADATA_FILE))?;
    let mut summary = String::new();
    for r in &rows {
        summary.push_str(&format!(
            "alpha [{}] samples {}: mean {:.8e} se {:.3e} error {}\n",
            fmt_levels(&r.alpha),
            r.samples,
            r.mean,
            r.std_error,
            r.error.map_or("n/a".into(), |e| format!("{e:.3e}"))
        ));
    }
    Ok(Outcome::ok(summary))
}
