//! `convergence`: merged error-vs-work table and log-log slopes.

use std::path::Path;

use misc_iga::adaptation::linear_fit;
use misc_iga::misc::Estimator;
use misc_iga::quadrature::level_to_nodes;

use super::{backend, ensure_dir, mc, misc, solve_work, Metadata, Outcome};
use crate::config::ExperimentConfig;
use crate::error::{config, CliError, Result};
use crate::table::{fmt_f64, Table};

pub const TABLE_FILE: &str = "convergence.csv";
pub const SLOPES_FILE: &str = "slopes.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub method: String,
    pub parameter: String,
    pub error: f64,
    pub work: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slope {
    pub method: String,
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Least-squares slope of `log2 error` against `log2 work` per method.
pub fn slopes(points: &[Point]) -> Vec<Slope> {
    let mut methods: Vec<&str> = Vec::new();
    for p in points {
        if !methods.contains(&p.method.as_str()) {
            methods.push(&p.method);
        }
    }
    methods
        .into_iter()
        .filter_map(|m| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = points
                .iter()
                .filter(|p| p.method == m && p.error > 0.0 && p.work > 0.0)
                .map(|p| (p.work.log2(), p.error.log2()))
                .unzip();
            linear_fit(&xs, &ys).ok().map(|f| Slope {
                method: m.to_string(),
                slope: f.slope,
                intercept: f.intercept,
                points: xs.len(),
            })
        })
        .collect()
}

/// Errors of the isotropic full-tensor corners `(k, ..., k)`.
pub fn full_tensor_family(est: &Estimator, levels: &[u32], c: &[f64], reference: f64) -> Result<Vec<Point>> {
    let d = est.spatial_dim();
    let n = est.stochastic_dim();
    levels
        .iter()
        .map(|&k| {
            if k == 0 {
                return config("full-tensor levels must be >= 1");
            }
            let alpha = vec![k; d];
            let beta = vec![k; n];
            let value = est.full_tensor_value(&alpha, &beta)?;
            let nodes = level_to_nodes(k).pow(n as u32);
            Ok(Point {
                method: "full-tensor".into(),
                parameter: k.to_string(),
                error: (value - reference).abs(),
                work: nodes as f64 * solve_work(&alpha, c),
            })
        })
        .collect()
}

fn table_err(path: &Path) -> impl Fn(String) -> CliError + '_ {
    move |msg| CliError::Table {
        path: path.display().to_string(),
        msg,
    }
}

fn read_points(path: &Path, method: &str, parameter: &[&str]) -> Result<Vec<Point>> {
    let t = Table::read(path)?;
    let e = table_err(path);
    let mut out = Vec::with_capacity(t.len());
    for row in 0..t.len() {
        let error: f64 = t
            .get(row, "error")
            .map_err(&e)?
            .ok_or_else(|| e(format!("row {row}: no error; was a reference configured?")))?;
        let mut param = String::new();
        for col in parameter {
            if let Some(v) = t.get::<String>(row, col).map_err(&e)? {
                param = v;
                break;
            }
        }
        out.push(Point {
            method: method.into(),
            parameter: param,
            error,
            work: t.require(row, "work").map_err(&e)?,
        });
    }
    Ok(out)
}

pub fn cmd_convergence(cfg: &ExperimentConfig, misc_dir: &Path, mc_dir: &Path) -> Result<Outcome> {
    let misc_meta = Metadata::read(&misc_dir.join(misc::METADATA_FILE))?;
    let mc_meta = Metadata::read(&mc_dir.join(mc::METADATA_FILE))?;
    let here = cfg.problem.descriptor();
    if misc_meta.problem != mc_meta.problem || misc_meta.problem != here {
        return config("problem descriptors differ between the misc results, mc results and config");
    }
    let reference = match (&misc_meta.reference, &mc_meta.reference) {
        (Some(a), Some(b)) if a == b => a.clone(),
        (Some(_), Some(_)) => return config("misc and mc results use different references"),
        _ => return config("convergence needs results computed against a reference"),
    };
    let rates = misc_meta
        .rates
        .clone()
        .ok_or_else(|| CliError::Config("misc metadata lacks rates".into()))?;
    if mc_meta.rates.as_ref().map(|r| &r.c) != Some(&rates.c) {
        return config("misc and mc results use different cost rates");
    }

    let mut points = read_points(&misc_dir.join(misc::CONVERGENCE_FILE), "misc", &["tol"])?;
    points.extend(read_points(&mc_dir.join(mc::TABLE_FILE), "mc", &["tol", "samples"])?);
    if !cfg.convergence.full_tensor_levels.is_empty() {
        let est = Estimator::new(backend(cfg)?);
        points.extend(full_tensor_family(
            &est,
            &cfg.convergence.full_tensor_levels,
            &rates.c,
            reference.value,
        )?);
    }

    let mut table = Table::new(["method", "parameter", "error", "work"]);
    for p in &points {
        table.push(vec![p.method.clone(), p.parameter.clone(), fmt_f64(p.error), fmt_f64(p.work)]);
    }
    let fitted = slopes(&points);
    let mut st = Table::new(["method", "slope", "intercept", "points"]);
    for s in &fitted {
        st.push(vec![s.method.clone(), fmt_f64(s.slope), fmt_f64(s.intercept), s.points.to_string()]);
    }
    let dir = &cfg.output.dir;
    ensure_dir(dir)?;
    table.write(&dir.join(TABLE_FILE))?;
    st.write(&dir.join(SLOPES_FILE))?;
    let summary = fitted
        .iter()
        .map(|s| format!("{}: slope {:.3} over {} points\n", s.method, s.slope, s.points))
        .collect();
    Ok(Outcome::ok(summary))
}
