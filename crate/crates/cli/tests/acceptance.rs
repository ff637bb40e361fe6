//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{bspline_pieces, q, Q};
use misc_cli::commands::convergence::{full_tensor_family, slopes, Point};
use misc_cli::commands::fit::fit_rates;
use misc_cli::commands::mc::mc_tolerances;
use misc_cli::commands::misc::{cmd_misc, run_schedule, ALLOCATION_FILE, CONVERGENCE_FILE, G_HISTORY_FILE};
use misc_cli::config::{ExperimentConfig, FitConfig, McConfig, RatesConfig};
use misc_iga::adaptation::{build_total_degree, fit_g_rates, RateModel};
use misc_iga::backend::{Backend, FnBackend};
use misc_iga::geometry::{quarter_annulus, unit_square};
use misc_iga::misc::{Estimator, IndexSet, MultiIndex};
use misc_iga::pde::{Coefficient, DiffusionProblem, Functional, Source, Test1Field};
use misc_iga::quadrature::{cc_nodes, cc_weights, level_to_nodes};
use misc_iga::splines::KnotVector;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_time(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    check(
        elapsed.as_secs() < limit_secs,
        format!("took {:.1}s, limit {limit_secs}s", elapsed.as_secs_f64()),
    )
}

fn desk_problem(modes: usize) -> DiffusionProblem {
    let mut field = Test1Field::standard(1.0, 2.0, None);
    field.amplitudes.truncate(modes);
    field.frequencies.truncate(modes);
    DiffusionProblem::new(
        quarter_annulus(1.0, 2.0).unwrap(),
        Coefficient::Test1(field),
        Source::Constant(1.0),
        Functional::DomainIntegral,
        modes,
        2,
        3.0,
    )
    .unwrap()
}

fn telescoping() -> Outcome {
    let start = Instant::now();
    let est = Estimator::new(Arc::new(desk_problem(2)));
    let mut worst = 0.0f64;
    let mut count = 0;
    for a0 in 1..=3 {
        for a1 in 1..=3 {
            for b0 in 1..=3 {
                for b1 in 1..=3 {
                    let corner = MultiIndex::new(vec![a0, a1, b0, b1]);
                    let rect = IndexSet::rectangle(&corner).map_err(|e| e.to_string())?;
                    let misc = est.misc_estimate(&rect).map_err(|e| e.to_string())?;
                    let full = est
                        .full_tensor_value(&[a0, a1], &[b0, b1])
                        .map_err(|e| e.to_string())?;
                    let mut telescoped = 0.0;
                    for i in rect.iter() {
                        telescoped += est.delta_mix(i).map_err(|e| e.to_string())?;
                    }
                    worst = worst
                        .max((misc - full).abs() / full.abs())
                        .max((telescoped - full).abs() / full.abs());
                    count += 1;
                }
            }
        }
    }
    check(worst <= 1e-12, format!("max relative deviation {worst:e}"))?;
    within_time(start.elapsed(), 60)?;
    Ok(format!(
        "{count} rectangles, combination and detail sums vs corner, max relative deviation {worst:.2e}"
    ))
}

fn random_downward_closed(rng: &mut ChaCha8Rng) -> IndexSet {
    let dim = rng.random_range(1..=5);
    let mut set = IndexSet::root(dim);
    for _ in 0..rng.random_range(0..40) {
        let margin = set.reduced_margin();
        let pick = margin[rng.random_range(0..margin.len())].clone();
        set.extend([pick]).unwrap();
    }
    set
}

fn combination_coefficients() -> Outcome {
    let td = build_total_degree(&[1.0], &[1.0], 3.0)
        .map_err(|e| e.to_string())?
        .ok_or("empty total-degree set")?;
    let c = td.combination_coefficients();
    let expected: Vec<(MultiIndex, i64)> = vec![
        (MultiIndex::new(vec![1, 1]), -1),
        (MultiIndex::new(vec![1, 2]), 1),
        (MultiIndex::new(vec![2, 1]), 1),
    ];
    check(
        c.clone().into_iter().collect::<Vec<_>>() == expected,
        format!("total-degree coefficients {c:?}"),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..100 {
        let set = random_downward_closed(&mut rng);
        let sum: i64 = set.combination_coefficients().values().sum();
        check(sum == 1, format!("random set {k} (dim {}) sums to {sum}", set.dim()))?;
    }
    Ok("total-degree example exact; 100 random sets sum to 1".into())
}

fn clenshaw_curtis() -> Outcome {
    let mut worst = 0.0f64;
    for beta in 1..=6u32 {
        let m = level_to_nodes(beta);
        let rule = if beta == 1 { 1 } else { (1 << (beta - 1)) + 1 };
        check(m == rule, format!("m({beta}) = {m}"))?;
        let nodes = cc_nodes(beta);
        let weights = cc_weights(beta);
        check(nodes.len() == m && weights.len() == m, format!("level {beta} sizes"))?;
        if beta < 6 {
            let finer = cc_nodes(beta + 1);
            check(
                nodes.iter().all(|x| finer.contains(x)),
                format!("level {beta} nodes not contained in level {}", beta + 1),
            )?;
        }
        let sum: f64 = weights.iter().sum();
        check((sum - 1.0).abs() <= 1e-13, format!("level {beta} weight sum {sum}"))?;
        for deg in 0..m as i32 {
            let got: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 0 { 1.0 / (deg + 1) as f64 } else { 0.0 };
            worst = worst.max((got - exact).abs());
        }
    }
    check(worst <= 1e-13, format!("exactness deviation {worst:e}"))?;
    Ok(format!("levels 1..6, max exactness deviation {worst:.2e}"))
}

fn random_knot_vector(rng: &mut ChaCha8Rng, dyadic: bool) -> KnotVector {
    let p = rng.random_range(1..=4);
    let mut breaks: Vec<f64> = (0..rng.random_range(0..6))
        .map(|_| {
            if dyadic {
                rng.random_range(1..64) as f64 / 64.0
            } else {
                rng.random_range(0.01..0.99)
            }
        })
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut knots = vec![0.0; p + 1];
    for z in breaks {
        for _ in 0..rng.random_range(1..=p) {
            knots.push(z);
        }
    }
    knots.extend(std::iter::repeat_n(1.0, p + 1));
    KnotVector::new(knots, p).unwrap()
}

fn splines() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pu = 0.0f64;
    for _ in 0..1000 {
        let kv = random_knot_vector(&mut rng, false);
        let x: f64 = rng.random_range(0.0..=1.0);
        let b = kv.eval_basis(x).map_err(|e| e.to_string())?;
        pu = pu.max((b.values.iter().sum::<f64>() - 1.0).abs());
    }
    check(pu <= 1e-12, format!("partition of unity deviation {pu:e}"))?;

    let mixed = KnotVector::new(
        vec![0., 0., 0., 0., 0., 0.25, 0.25, 0.25, 0.5, 0.5, 0.5, 0.5, 1., 1., 1., 1., 1.],
        4,
    )
    .map_err(|e| e.to_string())?;
    let c1 = mixed.continuity_at(0.25).map_err(|e| e.to_string())?;
    let c0 = mixed.continuity_at(0.5).map_err(|e| e.to_string())?;
    check(c1 == 1 && c0 == 0, format!("continuity {c1} at 0.25, {c0} at 0.5"))?;

    let mut oracle = 0.0f64;
    for _ in 0..300 {
        let kv = random_knot_vector(&mut rng, true);
        let x = rng.random_range(0..=256) as f64 / 256.0;
        let b = kv.eval_basis(x).map_err(|e| e.to_string())?;
        let knots: Vec<Q> = kv.knots().iter().map(|&k| q(k)).collect();
        let pieces = bspline_pieces(&knots, kv.degree(), b.span_index);
        let first = b.first_function();
        for (i, piece) in pieces.iter().enumerate() {
            let exact = piece.eval(q(x)).to_f64().unwrap();
            let got = if (first..=first + kv.degree()).contains(&i) {
                b.values[i - first]
            } else {
                0.0
            };
            oracle = oracle.max((got - exact).abs());
        }
    }
    check(oracle <= 1e-12, format!("rational oracle deviation {oracle:e}"))?;
    Ok(format!(
        "partition of unity {pu:.1e}, continuity C1/C0, oracle deviation {oracle:.1e}"
    ))
}

fn manufactured_rate(problem: &DiffusionProblem, exact: f64) -> Result<f64, String> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = (2..=5u32)
        .map(|k| {
            let v = problem.solve_sample(&[k, k], &[]).map_err(|e| e.to_string())?;
            Ok((k as f64, (v.value - exact).abs().log2()))
        })
        .collect::<Result<Vec<_>, String>>()?
        .into_iter()
        .unzip();
    let fit = misc_iga::adaptation::linear_fit(&xs, &ys).map_err(|e| e.to_string())?;
    Ok(-fit.slope)
}

fn solver_convergence() -> Outcome {
    let start = Instant::now();
    let mut rates = Vec::new();
    let cases = [
        (unit_square(), Source::ManufacturedSquare),
        (
            quarter_annulus(1.0, 2.0).unwrap(),
            Source::ManufacturedAnnulus { r_in: 1.0, r_out: 2.0 },
        ),
    ];
    for (patch, source) in cases {
        let exact = source.manufactured_integral().unwrap();
        let problem = DiffusionProblem::new(
            patch,
            Coefficient::Constant(1.0),
            source,
            Functional::DomainIntegral,
            0,
            2,
            1.0,
        )
        .map_err(|e| e.to_string())?;
        rates.push(manufactured_rate(&problem, exact)?);
    }
    check(
        rates.iter().all(|r| *r >= 2.7),
        format!("fitted rates {rates:.3?}"),
    )?;
    within_time(start.elapsed(), 300)?;
    Ok(format!("square r = {:.3}, annulus r = {:.3}", rates[0], rates[1]))
}

fn rate_fitting() -> Outcome {
    let planted = FnBackend::new(2, 1, vec![1.0, 1.0], |a, _| {
        1.0 + 0.3 * (-3.0 * a[0] as f64).exp2() + 0.8 * (-3.0 * a[1] as f64).exp2()
    });
    let fit = FitConfig {
        base: Some(vec![1, 1]),
        levels: vec![1, 2, 3, 4, 5, 6],
        y: None,
    };
    let (report, _) = fit_rates(&planted, &fit).map_err(|e| e.to_string())?;
    for i in 0..2 {
        check(
            (report.r[i] - 3.0).abs() < 0.1 && (report.c[i] - 1.0).abs() < 0.05,
            format!("spatial fit r {:?} c {:?}", report.r, report.c),
        )?;
    }

    let mut truth = RateModel::new(vec![2.5], vec![1.0], vec![1.0, 2.0]).map_err(|e| e.to_string())?;
    truth.log2_scale = 0.7;
    let set = build_total_degree(&[1.0], &[1.0, 1.0], 6.0)
        .map_err(|e| e.to_string())?
        .ok_or("empty set")?;
    let observations: Vec<(MultiIndex, f64)> = set
        .iter()
        .map(|i| {
            let (a, b) = i.split(1);
            (i.clone(), truth.e_tilde(a, b))
        })
        .collect();
    let prior = RateModel::new(vec![2.5], vec![1.0], vec![0.3, 0.3]).map_err(|e| e.to_string())?;
    let g = fit_g_rates(&observations, &prior, 0.05, 0.0).map_err(|e| e.to_string())?;
    check(
        (g.g[0] - 1.0).abs() < 1e-6 && (g.g[1] - 2.0).abs() < 1e-6,
        format!("g fit {:?}", g.g),
    )?;
    Ok(format!(
        "r {:.3?} c {:.3?}; g {:.8?}",
        report.r, report.c, g.g
    ))
}

/// Shared state of the desk-scale runs used by criteria 7-9.
struct Desk {
    cfg: ExperimentConfig,
    backend: Arc<dyn Backend>,
    est: Estimator,
    reference: f64,
    model: RateModel,
    setup_secs: f64,
}

fn desk() -> Result<Desk, String> {
    let start = Instant::now();
    let cfg = ExperimentConfig::desk_default();
    let backend: Arc<dyn Backend> = Arc::new(cfg.problem.build().map_err(|e| e.to_string())?);
    let (report, _) = fit_rates(backend.as_ref(), &cfg.fit).map_err(|e| e.to_string())?;
    let est = Estimator::new(Arc::clone(&backend));
    let r = cfg.reference.as_ref().unwrap();
    let reference = est
        .full_tensor_value(&r.alpha, &r.beta)
        .map_err(|e| e.to_string())?;
    let n = backend.stochastic_dim();
    let model = RateModel::new(report.r, report.c, vec![1.0; n]).map_err(|e| e.to_string())?;
    Ok(Desk {
        cfg,
        backend,
        est,
        reference,
        model,
        setup_secs: start.elapsed().as_secs_f64(),
    })
}

fn adaptive_loop(desk: &Desk, results: &[misc_cli::commands::misc::MiscResult], secs: f64) -> Outcome {
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for res in results.iter().take(3) {
        let err = res.error.unwrap();
        lines.push(format!("tol {:e}: error {:.3e}", res.tol, err));
        if err > 10.0 * res.tol {
            failures.push(format!("tol {:e}: error {:.3e} > {:.0e}", res.tol, err, 10.0 * res.tol));
        }
    }
    let g = &results[2].run.last().g;
    let largest = g
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap();
    if largest != g.len() - 1 {
        failures.push(format!("final g {g:.3?}: g{} is largest", largest + 1));
    }
    let total = desk.setup_secs + secs;
    if total >= 1800.0 {
        failures.push(format!("took {total:.0}s"));
    }
    let detail = format!(
        "rates r {:.3?} c {:.3?}; {}; final g {:.3?}; {:.0}s",
        desk.model.r,
        desk.model.c,
        lines.join(", "),
        g,
        total
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{}; {detail}", failures.join("; ")))
    }
}

fn complexity(desk: &Desk, results: &[misc_cli::commands::misc::MiscResult]) -> Outcome {
    let c = &desk.model.c;
    let mut points: Vec<Point> = results
        .iter()
        .map(|r| Point {
            method: "misc".into(),
            parameter: r.tol.to_string(),
            error: r.error.unwrap(),
            work: r.run.last().modeled_work,
        })
        .collect();
    points.extend(full_tensor_family(&desk.est, &[1, 2, 3, 4], c, desk.reference).map_err(|e| e.to_string())?);
    let mc = McConfig {
        tolerances: vec![1e-1, 3e-2, 1e-2, 5e-3],
        ..desk.cfg.mc.clone()
    };
    let rows = mc_tolerances(desk.backend.as_ref(), &mc, desk.cfg.seed, c, Some(desk.reference))
        .map_err(|e| e.to_string())?;
    points.extend(rows.iter().map(|r| Point {
        method: "mc".into(),
        parameter: r.tol.unwrap().to_string(),
        error: r.error.unwrap(),
        work: r.work,
    }));
    let s = slopes(&points);
    let get = |m: &str| s.iter().find(|x| x.method == m).cloned();
    let (misc, ft, mc) = (
        get("misc").ok_or("no misc slope")?,
        get("full-tensor").ok_or("no full-tensor slope")?,
        get("mc").ok_or("no mc slope")?,
    );
    let detail = format!(
        "slopes misc {:.3} ({} pts), full-tensor {:.3} ({} pts), mc {:.3} ({} pts)",
        misc.slope, misc.points, ft.slope, ft.points, mc.slope, mc.points
    );
    check(
        misc.points >= 4 && ft.points >= 4 && mc.points >= 4,
        format!("too few work levels; {detail}"),
    )?;
    check(misc.slope < ft.slope && misc.slope < mc.slope, detail.clone())?;
    Ok(detail)
}

fn determinism(desk: &Desk) -> Outcome {
    let mut cfg = desk.cfg.clone();
    cfg.rates = Some(RatesConfig {
        r: Some(desk.model.r.clone()),
        c: Some(desk.model.c.clone()),
        g: None,
        file: None,
    });
    cfg.reference.as_mut().unwrap().value = Some(desk.reference);
    cfg.misc.tolerances = vec![1e-1, 1e-2, 1e-3];
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        cfg.output.dir = dir.path().to_path_buf();
        cmd_misc(&cfg).map_err(|e| e.to_string())?;
        let mut files = Vec::new();
        for name in [CONVERGENCE_FILE, ALLOCATION_FILE, G_HISTORY_FILE] {
            files.push(std::fs::read(dir.path().join(name)).map_err(|e| e.to_string())?);
        }
        outputs.push(files);
    }
    check(outputs[0] == outputs[1], "CSV outputs differ between runs")?;
    Ok(format!("{} CSV files byte-identical", outputs[0].len()))
}

fn report(id: u32, name: &str, outcome: &Outcome, secs: f64) -> bool {
    match outcome {
        Ok(d) => println!("criterion {id} PASS {name}: {d} [{secs:.1}s]"),
        Err(d) => println!("criterion {id} FAIL {name}: {d} [{secs:.1}s]"),
    }
    outcome.is_ok()
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn main() {
    let mut all = true;
    let quick: [(u32, &str, Criterion); 6] = [
        (1, "telescoping identity", telescoping),
        (2, "combination coefficients", combination_coefficients),
        (3, "Clenshaw-Curtis suite", clenshaw_curtis),
        (4, "spline suite", splines),
        (5, "solver convergence", solver_convergence),
        (6, "rate fitting", rate_fitting),
    ];
    for (id, name, f) in quick {
        let (out, secs) = timed(f);
        all &= report(id, name, &out, secs);
    }

    match desk() {
        Ok(desk) => {
            let start = Instant::now();
            let results = run_schedule(&desk.est, &desk.model, &desk.cfg.misc, Some(desk.reference));
            let secs = start.elapsed().as_secs_f64();
            match results {
                Ok(results) => {
                    all &= report(7, "adaptive loop", &adaptive_loop(&desk, &results, secs), desk.setup_secs + secs);
                    let (out, secs) = timed(|| complexity(&desk, &results));
                    all &= report(8, "complexity ordering", &out, secs);
                }
                Err(e) => {
                    for (id, name) in [(7, "adaptive loop"), (8, "complexity ordering")] {
                        all &= report(id, name, &Err(e.to_string()), secs);
                    }
                }
            }
            let (out, secs) = timed(|| determinism(&desk));
            all &= report(9, "determinism", &out, secs);
        }
        Err(e) => {
            for (id, name) in [(7, "adaptive loop"), (8, "complexity ordering"), (9, "determinism")] {
                all &= report(id, name, &Err(format!("desk setup: {e}")), 0.0);
            }
        }
    }
    if !all {
        std::process::exit(1);
    }
}
