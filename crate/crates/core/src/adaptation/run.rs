//! Profit-driven adaptive construction of the index set.

use std::collections::BTreeMap;
use std::time::Instant;

use super::{build_total_degree, fit_g_rates, GFlag, RateModel};
use crate::error::{arg, Result};
use crate::misc::{new_points, solves_by_alpha, Estimator, IndexSet, MultiIndex};

#[derive(Debug, Clone, PartialEq)]
pub struct MiscConfig {
    /// Initial total-degree level; defaults to `d + N + 1` (root plus its neighbours).
    pub w0: Option<u32>,
    pub tol: f64,
    /// Cap on the number of distinct sample solves.
    pub max_solves: Option<usize>,
    pub max_iterations: usize,
    pub g_min: f64,
    /// Relative tolerance under which two profits count as tied.
    pub tie_rel: f64,
    /// Error contributions below `noise_floor * |estimate|` are left out of the g fit.
    pub noise_floor: f64,
}

impl MiscConfig {
    pub fn new(tol: f64) -> Self {
        Self {
            w0: None,
            tol,
            max_solves: None,
            max_iterations: 10_000,
            g_min: 0.05,
            tie_rel: 1e-12,
            noise_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    Budget,
    IterationLimit,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::Budget => "budget",
            RunStatus::IterationLimit => "iteration-limit",
        }
    }
}

/// Observed and modelled quantities of one index.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfitRecord {
    pub observed: Option<f64>,
    pub log2_e_tilde: f64,
    pub log2_w_tilde: f64,
}

impl ProfitRecord {
    pub fn e_tilde(&self) -> f64 {
        self.log2_e_tilde.exp2()
    }

    pub fn w_tilde(&self) -> f64 {
        self.log2_w_tilde.exp2()
    }

    pub fn profit(&self) -> f64 {
        (self.log2_e_tilde - self.log2_w_tilde).exp2()
    }
}

/// Records over the set and its margin.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfitLedger {
    pub records: BTreeMap<MultiIndex, ProfitRecord>,
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub set_size: usize,
    pub estimate: f64,
    pub margin_sum: f64,
    pub reduced_margin_sum: f64,
    pub solves: usize,
    /// `sum over solves of prod 2^{alpha_i c_i}`
    pub modeled_work: f64,
    /// Summed deterministic solver cost of the solves.
    pub cost: f64,
    pub g: Vec<f64>,
    pub log2_scale: f64,
    pub flags: Vec<GFlag>,
    /// Indices added after this iteration (empty on the last one).
    pub selected: Vec<MultiIndex>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct MiscRun {
    pub estimate: f64,
    pub set: IndexSet,
    pub model: RateModel,
    pub ledger: ProfitLedger,
    pub iterations: Vec<IterationRecord>,
    pub status: RunStatus,
}

impl MiscRun {
    pub fn last(&self) -> &IterationRecord {
        self.iterations.last().expect("at least one iteration")
    }
}

/// Candidates with the largest `E~/W~`, ties within `tie_rel` included.
pub fn select_profitable(candidates: &[MultiIndex], model: &RateModel, tie_rel: f64) -> Vec<MultiIndex> {
    let profits: Vec<f64> = candidates.iter().map(|i| model.log2_profit(i)).collect();
    let best = profits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = tie_rel * best.abs().max(1.0);
    candidates
        .iter()
        .zip(&profits)
        .filter(|(_, &p)| p >= best - slack)
        .map(|(i, _)| i.clone())
        .collect()
}

/// Adaptive loop: start from a total-degree set, refit `g` on observed
/// contributions, add the most profitable reduced-margin indices until the
/// modelled margin error drops below `tol`.
pub fn run_misc(estimator: &Estimator, model_init: &RateModel, config: &MiscConfig) -> Result<MiscRun> {
    let d = estimator.spatial_dim();
    let n = estimator.stochastic_dim();
    if model_init.spatial_dim() != d || model_init.stochastic_dim() != n {
        return arg("rate model does not match the estimator dimensions");
    }
    if !(config.tol > 0.0) {
        return arg("tolerance must be positive");
    }
    let dim = d + n;
    let w0 = config.w0.unwrap_or(dim as u32 + 1);
    let mut set = build_total_degree(&vec![1.0; d], &vec![1.0; n], w0 as f64)?
        .ok_or_else(|| crate::error::Error::Argument(format!("w0 = {w0} gives an empty set")))?;
    let mut model = model_init.clone();
    let mut iterations = Vec::new();
    let start = Instant::now();
    let status;
    loop {
        let estimate = estimator.misc_estimate(&set)?;
        let mut observations = Vec::with_capacity(set.len());
        for i in set.iter() {
            observations.push((i.clone(), estimator.error_contribution(i)?));
        }
        let fit = fit_g_rates(
            &observations,
            &model,
            config.g_min,
            config.noise_floor * estimate.abs(),
        )?;
        model.g = fit.g.clone();
        model.log2_scale = fit.log2_scale;

        let margin = set.margin();
        let reduced = set.reduced_margin();
        let margin_sum: f64 = margin
            .iter()
            .map(|i| {
                let (a, b) = i.split(d);
                model.e_tilde(a, b)
            })
            .sum();
        let reduced_margin_sum: f64 = reduced
            .iter()
            .map(|i| {
                let (a, b) = i.split(d);
                model.e_tilde(a, b)
            })
            .sum();

        let mut solves = 0;
        let mut modeled_work = 0.0;
        let mut cost = 0.0;
        for (alpha, count) in solves_by_alpha(&set, d) {
            solves += count;
            modeled_work += count as f64 * model.solve_work(&alpha);
            cost += count as f64 * estimator.solve_cost(&alpha)?;
        }
        let mut record = IterationRecord {
            iteration: iterations.len(),
            set_size: set.len(),
            estimate,
            margin_sum,
            reduced_margin_sum,
            solves,
            modeled_work,
            cost,
            g: model.g.clone(),
            log2_scale: model.log2_scale,
            flags: fit.flags.clone(),
            selected: Vec::new(),
            wall_seconds: start.elapsed().as_secs_f64(),
        };

        if margin_sum <= config.tol {
            iterations.push(record);
            status = RunStatus::Converged;
            break;
        }
        if iterations.len() + 1 >= config.max_iterations {
            iterations.push(record);
            status = RunStatus::IterationLimit;
            break;
        }
        let theta = select_profitable(&reduced, &model, config.tie_rel);
        if let Some(max) = config.max_solves {
            let extra: usize = theta.iter().map(|i| new_points(i.split(d).1)).sum();
            if solves + extra > max {
                iterations.push(record);
                status = RunStatus::Budget;
                break;
            }
        }
        set.extend(theta.iter().cloned())?;
        record.selected = theta;
        iterations.push(record);
    }

    let mut ledger = ProfitLedger::default();
    let observed: BTreeMap<MultiIndex, f64> = set
        .iter()
        .map(|i| Ok((i.clone(), estimator.error_contribution(i)?)))
        .collect::<Result<_>>()?;
    for i in set.iter().chain(set.margin().iter()) {
        let (a, b) = i.split(d);
        ledger.records.insert(
            i.clone(),
            ProfitRecord {
                observed: observed.get(i).copied(),
                log2_e_tilde: model.log2_e_tilde(a, b),
                log2_w_tilde: model.log2_w_tilde(a, b),
            },
        );
    }
    let estimate = iterations.last().map_or(0.0, |r| r.estimate);
    Ok(MiscRun {
        estimate,
        set,
        model,
        ledger,
        iterations,
        status,
    })
}
