//! `misc`: adaptive runs over a tolerance schedule.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use misc_iga::adaptation::{run_misc, MiscConfig, MiscRun, RateModel, RunStatus};
use misc_iga::misc::{solves_by_alpha, Estimator};

use super::{backend, ensure_dir, resolve_rates, resolve_reference, Metadata, Outcome};
use crate::config::{ExperimentConfig, MiscSection};
use crate::error::{config, io_err, Result, EXIT_BUDGET, EXIT_OK};
use crate::table::{fmt_f64, fmt_levels, fmt_opt, Table};

pub const CONVERGENCE_FILE: &str = "misc_convergence.csv";
pub const ALLOCATION_FILE: &str = "misc_cost_allocation.csv";
pub const G_HISTORY_FILE: &str = "misc_g_history.csv";
pub const METADATA_FILE: &str = "misc_metadata.toml";

pub fn set_file(tol: f64) -> String {
    format!("misc_set_tol{}.txt", fmt_f64(tol))
}

pub fn order_file(tol: f64) -> String {
    format!("misc_order_tol{}.csv", fmt_f64(tol))
}

#[derive(Debug, Clone)]
pub struct MiscResult {
    pub tol: f64,
    pub run: MiscRun,
    pub error: Option<f64>,
    pub wall_seconds: f64,
}

/// One `run_misc` per tolerance, sharing the estimator cache.
pub fn run_schedule(
    est: &Estimator,
    model: &RateModel,
    section: &MiscSection,
    reference: Option<f64>,
) -> Result<Vec<MiscResult>> {
    let mut out = Vec::with_capacity(section.tolerances.len());
    for &tol in &section.tolerances {
        let mut mc = MiscConfig::new(tol);
        mc.w0 = section.w0;
        mc.max_solves = section.max_solves;
        mc.g_min = section.g_min;
        let start = Instant::now();
        let run = run_misc(est, model, &mc)?;
        out.push(MiscResult {
            tol,
            error: reference.map(|r| (run.estimate - r).abs()),
            run,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiscTables {
    pub convergence: Table,
    pub allocation: Table,
    pub g_history: Table,
}

pub fn tables(results: &[MiscResult], model: &RateModel) -> MiscTables {
    let d = model.spatial_dim();
    let n = model.stochastic_dim();
    let mut convergence = Table::new([
        "tol",
        "status",
        "estimate",
        "error",
        "margin_sum",
        "reduced_margin_sum",
        "set_size",
        "iterations",
        "solves",
        "work",
        "cost",
    ]);
    let mut allocation = Table::new(["tol", "total_refinement", "collocation_points", "work"]);
    let mut header: Vec<String> = [
        "tol",
        "iteration",
        "set_size",
        "estimate",
        "margin_sum",
        "solves",
        "work",
        "log2_scale",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=n).map(|k| format!("g{k}")));
    header.push("flags".into());
    let mut g_history = Table::new(header);

    for res in results {
        let last = res.run.last();
        convergence.push(vec![
            fmt_f64(res.tol),
            res.run.status.as_str().into(),
            fmt_f64(res.run.estimate),
            fmt_opt(res.error),
            fmt_f64(last.margin_sum),
            fmt_f64(last.reduced_margin_sum),
            last.set_size.to_string(),
            res.run.iterations.len().to_string(),
            last.solves.to_string(),
            fmt_f64(last.modeled_work),
            fmt_f64(last.cost),
        ]);

        let mut by_level: BTreeMap<u32, (usize, f64)> = BTreeMap::new();
        for (alpha, count) in solves_by_alpha(&res.run.set, d) {
            let t: u32 = alpha.iter().map(|a| a - 1).sum();
            let e = by_level.entry(t).or_default();
            e.0 += count;
            e.1 += count as f64 * model.solve_work(&alpha);
        }
        for (t, (points, work)) in by_level {
            allocation.push(vec![fmt_f64(res.tol), t.to_string(), points.to_string(), fmt_f64(work)]);
        }

        for rec in &res.run.iterations {
            let mut row = vec![
                fmt_f64(res.tol),
                rec.iteration.to_string(),
                rec.set_size.to_string(),
                fmt_f64(rec.estimate),
                fmt_f64(rec.margin_sum),
                rec.solves.to_string(),
                fmt_f64(rec.modeled_work),
                fmt_f64(rec.log2_scale),
            ];
            row.extend(rec.g.iter().map(|g| fmt_f64(*g)));
            row.push(
                rec.flags
                    .iter()
                    .map(|f| format!("{f:?}"))
                    .collect::<Vec<_>>()
                    .join(" "),
            );
            g_history.push(row);
        }
    }
    MiscTables {
        convergence,
        allocation,
        g_history,
    }
}

/// Indices in the order they entered the set; the initial set is step 0.
pub fn order_table(run: &MiscRun) -> Table {
    let mut t = Table::new(["step", "index"]);
    let mut later: Vec<&misc_iga::misc::MultiIndex> = Vec::new();
    for rec in &run.iterations {
        later.extend(rec.selected.iter());
    }
    for i in run.set.iter() {
        if !later.contains(&i) {
            t.push(vec!["0".into(), fmt_levels(i.components())]);
        }
    }
    for rec in &run.iterations {
        for i in &rec.selected {
            t.push(vec![(rec.iteration + 1).to_string(), fmt_levels(i.components())]);
        }
    }
    t
}

pub fn write_outputs(dir: &Path, results: &[MiscResult], model: &RateModel) -> Result<()> {
    ensure_dir(dir)?;
    let t = tables(results, model);
    t.convergence.write(&dir.join(CONVERGENCE_FILE))?;
    t.allocation.write(&dir.join(ALLOCATION_FILE))?;
    t.g_history.write(&dir.join(G_HISTORY_FILE))?;
    for res in results {
        let path = dir.join(set_file(res.tol));
        std::fs::write(&path, res.run.set.to_text()).map_err(io_err(&path))?;
        order_table(&res.run).write(&dir.join(order_file(res.tol)))?;
    }
    Ok(())
}

pub fn cmd_misc(cfg: &ExperimentConfig) -> Result<Outcome> {
    let b = backend(cfg)?;
    let (d, n) = (b.spatial_dim(), b.stochastic_dim());
    let rates = resolve_rates(cfg, d, n)?;
    let model = RateModel::new(rates.r.clone(), rates.c.clone(), rates.g.clone())
        .or_else(|e| config(format!("rates: {e}")))?;
    let est = Estimator::new(Arc::clone(&b));
    let reference = resolve_reference(cfg, &est)?;
    let results = run_schedule(&est, &model, &cfg.misc, reference.as_ref().map(|r| r.value))?;
    let dir = &cfg.output.dir;
    write_outputs(dir, &results, &model)?;

    let mut meta = Metadata::new("misc", cfg);
    meta.rates = Some(rates);
    meta.reference = reference;
    meta.wall_seconds = results.iter().map(|r| r.wall_seconds).collect();
    meta.write(&dir.join(METADATA_FILE))?;

    let mut summary = String::new();
    for r in &results {
        let last = r.run.last();
        summary.push_str(&format!(
            "tol {:e}: estimate {:.10e}, error {}, |set| {}, solves {}, work {:.3e}, {}\n",
            r.tol,
            r.run.estimate,
            r.error.map_or("n/a".to_string(), |e| format!("{e:.3e}")),
            last.set_size,
            last.solves,
            last.modeled_work,
            r.run.status.as_str()
        ));
    }
    let budget = results.iter().any(|r| r.run.status == RunStatus::Budget);
    Ok(Outcome {
        exit: if budget { EXIT_BUDGET } else { EXIT_OK },
        summary,
    })
}
