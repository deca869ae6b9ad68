//! Convergence, benchmark and singular-perturbation studies.

use std::time::Instant;

use crate::enrichment::{compare_with_reference, LayerReference, SingularSetup};
use crate::error::{Error, Result};
use crate::fem::FeFunction;
use crate::forcing::{Dataset, ForcingKind, Split};
use crate::harness::catalog::{Discretization, ProblemKind};
use crate::harness::config::{ExperimentConfig, StudyMode};
use crate::harness::report::{fit_slope, mean_std, Report, ReportRow};
use crate::mesh::{ElementOrder, Point};
use crate::opnet::{predict_solution, rel_l2_errors, train, TrainState};
use crate::oracle::{reference_solution, solve_system, OracleSolution};

/// Element count of the Shishkin reference used by the singular study.
pub const LAYER_REFERENCE_ELEMENTS: usize = 4096;

/// Relative drop `|u_ref - u0| <= LAYER_WIDTH_FRACTION |u0(-1)|` that marks
/// the edge of the layer in the width probe.
pub const LAYER_WIDTH_FRACTION: f64 = 0.01;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn base_row(cfg: &ExperimentConfig, d: &Discretization, epsilon: f64, enriched: bool) -> ReportRow {
    ReportRow {
        problem: cfg.problem.to_string(),
        mode: cfg.mode.to_string(),
        elements: d.mesh.element_count(),
        h: d.mesh.mesh_size(),
        order: cfg.order.to_string(),
        epsilon,
        enriched,
        m_train: if cfg.mode == StudyMode::Network { cfg.m_train } else { 0 },
        m_test: cfg.m_test,
        seed: None,
        train_loss: None,
        train_rel_l2: None,
        test_rel_l2: None,
        oracle_rel_l2: None,
        layer_error: None,
        layer_width: None,
        status: "ok".into(),
        wall_seconds: 0.0,
    }
}

fn oracle_all(d: &Discretization, ds: &Dataset) -> Result<Vec<OracleSolution>> {
    ds.loads
        .iter()
        .enumerate()
        .map(|(m, load)| solve_system(ds.system(&d.system, m), load))
        .collect()
}

fn fit_network(cfg: &ExperimentConfig, d: &Discretization, train_ds: &Dataset, seed: u64) -> Result<TrainState> {
    let net = cfg.network_config(d.input_dim(cfg)?, d.system.size(), seed);
    train(net, &d.system, train_ds, d.dofmap.dof_coords(), cfg.train_config(seed))
}

fn failed(row: &mut ReportRow, e: &Error) {
    row.status = format!("failed: {e}");
}

/// Error against a refined-mesh reference at each resolution, then the
/// log-log slope over the resolutions that succeeded.
pub fn run_convergence_study(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    if cfg.elements.len() < 3 {
        return Err(Error::invalid("a convergence study needs at least three resolutions"));
    }
    if cfg.input != ForcingKind::Forcing {
        return Err(Error::Unsupported("convergence studies with coefficient inputs".into()));
    }
    let mut report = Report::default();
    let mut fit_points = Vec::new();
    for &res in &cfg.elements {
        let d = Discretization::new(cfg, res, cfg.epsilon(), false)?;
        if d.mesh.element_count() < 4 {
            return Err(Error::invalid("every resolution needs at least four elements"));
        }
        let test = d.dataset(cfg, Split::Test)?;
        let start = Instant::now();
        let refs = test
            .samples
            .iter()
            .map(|s| reference_solution(&d.problem, &|p| s.eval(p), &d.mesh, cfg.order, cfg.reference_factor))
            .collect::<Result<Vec<_>>>()?;
        let oracle = oracle_all(&d, &test)?;
        let oracle_errs = oracle
            .iter()
            .zip(&refs)
            .map(|(o, r)| {
                let f = FeFunction::new(&d.mesh, &d.dofmap, d.system.expand(&o.alpha_star)?)?;
                r.rel_error(&f)
            })
            .collect::<Result<Vec<_>>>()?;
        let oracle_err = mean(&oracle_errs);
        let ref_seconds = start.elapsed().as_secs_f64();
        match cfg.mode {
            StudyMode::Oracle => {
                let mut row = base_row(cfg, &d, cfg.epsilon(), false);
                row.oracle_rel_l2 = Some(oracle_err);
                row.test_rel_l2 = Some(oracle_err);
                row.wall_seconds = ref_seconds;
                fit_points.push((row.elements as f64, oracle_err));
                report.rows.push(row);
            }
            StudyMode::Network => {
                let train_ds = d.dataset(cfg, Split::Train)?;
                let train_oracle: Vec<Vec<f64>> =
                    oracle_all(&d, &train_ds)?.into_iter().map(|o| o.alpha_star).collect();
                let mut errs = Vec::new();
                for &seed in &cfg.seeds {
                    let start = Instant::now();
                    let mut row = base_row(cfg, &d, cfg.epsilon(), false);
                    row.seed = Some(seed);
                    row.oracle_rel_l2 = Some(oracle_err);
                    let run = (|| -> Result<_> {
                        let state = fit_network(cfg, &d, &train_ds, seed)?;
                        let coords = d.dofmap.dof_coords();
                        let tr = rel_l2_errors(&state.network, &d.system, &train_ds, coords, &train_oracle)?;
                        let te = test
                            .samples
                            .iter()
                            .zip(&refs)
                            .map(|(s, r)| {
                                let c = predict_solution(&state.network, s, &d.system, coords)?;
                                r.rel_error(&FeFunction::new(&d.mesh, &d.dofmap, c)?)
                            })
                            .collect::<Result<Vec<_>>>()?;
                        Ok((state.best_loss, mean(&tr), mean(&te)))
                    })();
                    match run {
                        Ok((loss, tr, te)) => {
                            row.train_loss = Some(loss);
                            row.train_rel_l2 = Some(tr);
                            row.test_rel_l2 = Some(te);
                            errs.push(te);
                        }
                        Err(e) => failed(&mut row, &e),
                    }
                    row.wall_seconds = start.elapsed().as_secs_f64();
                    report.rows.push(row);
                }
                if !errs.is_empty() {
                    fit_points.push((d.mesh.element_count() as f64, mean(&errs)));
                }
            }
        }
    }
    if fit_points.len() >= 3 {
        let (k, e): (Vec<f64>, Vec<f64>) = fit_points.into_iter().unzip();
        report.slope = fit_slope(&k, &e).ok();
    }
    Ok(report)
}

/// Train once per seed at the first resolution and compare with the oracle
/// on the train and test sets.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let (eps, enriched) = (cfg.epsilon(), cfg.enriched[0]);
    let d = Discretization::new(cfg, cfg.elements[0], eps, enriched)?;
    let train_ds = d.dataset(cfg, Split::Train)?;
    let test_ds = d.dataset(cfg, Split::Test)?;
    let train_oracle = oracle_all(&d, &train_ds)?;
    let test_oracle = oracle_all(&d, &test_ds)?;
    let mut report = Report::default();
    if d.system.is_nonlinear() {
        let iters = train_oracle.iter().chain(&test_oracle).map(|o| o.newton_iters).max().unwrap_or(0);
        report.push_summary("newton_max_iters", iters as f64);
    }
    let train_star: Vec<Vec<f64>> = train_oracle.into_iter().map(|o| o.alpha_star).collect();
    let test_star: Vec<Vec<f64>> = test_oracle.into_iter().map(|o| o.alpha_star).collect();
    let coords = d.dofmap.dof_coords();
    let (mut tr_all, mut te_all, mut loss_all) = (Vec::new(), Vec::new(), Vec::new());
    for &seed in &cfg.seeds {
        let start = Instant::now();
        let mut row = base_row(cfg, &d, eps, enriched);
        row.seed = Some(seed);
        let run = (|| -> Result<_> {
            let state = fit_network(cfg, &d, &train_ds, seed)?;
            let tr = rel_l2_errors(&state.network, &d.system, &train_ds, coords, &train_star)?;
            let te = rel_l2_errors(&state.network, &d.system, &test_ds, coords, &test_star)?;
            Ok((state.best_loss, mean(&tr), mean(&te)))
        })();
        match run {
            Ok((loss, tr, te)) => {
                row.train_loss = Some(loss);
                row.train_rel_l2 = Some(tr);
                row.test_rel_l2 = Some(te);
                loss_all.push(loss);
                tr_all.push(tr);
                te_all.push(te);
            }
            Err(e) => failed(&mut row, &e),
        }
        row.wall_seconds = start.elapsed().as_secs_f64();
        report.rows.push(row);
    }
    if !te_all.is_empty() {
        let (tm, ts) = mean_std(&te_all);
        let (rm, rs) = mean_std(&tr_all);
        report.push_summary("test_rel_l2_mean", tm);
        report.push_summary("test_rel_l2_std", ts);
        report.push_summary("train_rel_l2_mean", rm);
        report.push_summary("train_rel_l2_std", rs);
        report.push_summary("train_loss_mean", mean(&loss_all));
        report.push_summary("gap_ratio", (tm - rm).abs() / rm);
    }
    Ok(report)
}

/// Width of the boundary layer of `-eps u'' + b u' = 1`: the smallest
/// distance from the outflow end at which the layer-resolved solution is
/// within [`LAYER_WIDTH_FRACTION`] of the reduced solution.
pub fn layer_width(problem: &crate::fem::ProblemSpec) -> Result<f64> {
    let reference = LayerReference::new(problem, &|_| 1.0, &SingularSetup::default())?;
    let b = problem.convection.eval([0.0, 0.0])[0];
    // reduced problem b u0' = 1 with the inflow value kept
    let (end, inward, u0): (f64, f64, Box<dyn Fn(f64) -> f64>) = if b < 0.0 {
        (-1.0, 1.0, Box::new(move |x| (x - 1.0) / b))
    } else {
        (1.0, -1.0, Box::new(move |x| (x + 1.0) / b))
    };
    let scale = LAYER_WIDTH_FRACTION * u0(end).abs();
    let field = reference.field();
    let gap = |d: f64| -> Result<f64> {
        let x = end + inward * d;
        Ok((field.eval([x, 0.0])? - u0(x)).abs())
    };
    // log-spaced scan from far inside the layer to the far end
    let steps = 4000;
    let (lo, hi) = (1e-9f64.ln(), 2f64.ln());
    let mut prev = 0.0;
    for s in 0..=steps {
        let d = (lo + (hi - lo) * s as f64 / steps as f64).exp();
        if gap(d)? <= scale {
            if s == 0 {
                return Ok(d);
            }
            // bisect the bracketing interval
            let (mut a, mut c) = (prev, d);
            for _ in 0..60 {
                let m = 0.5 * (a + c);
                if gap(m)? <= scale {
                    c = m;
                } else {
                    a = m;
                }
            }
            return Ok(c);
        }
        prev = d;
    }
    Err(Error::invalid("solution never approaches the reduced solution"))
}

/// Oracle and network errors against a layer-resolving reference for every
/// `(epsilon, enriched)` pair.
pub fn run_singular_study(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    if cfg.problem.dim() != 1 || cfg.input != ForcingKind::Forcing {
        return Err(Error::Unsupported("singular studies need a 1D problem with forcing inputs".into()));
    }
    let mut report = Report::default();
    let setup = SingularSetup {
        elements: cfg.elements[0],
        order: cfg.order,
        reference_elements: LAYER_REFERENCE_ELEMENTS,
        sigma: SingularSetup::default().sigma,
    };
    for &eps in &cfg.epsilons {
        let width = layer_width(&cfg.problem.spec(eps))?;
        report.push_summary(format!("layer_width_eps_{eps:e}"), width);
        let mut refs: Option<Vec<LayerReference>> = None;
        for &enriched in &cfg.enriched {
            let start = Instant::now();
            let d = Discretization::new(cfg, cfg.elements[0], eps, enriched)?;
            let test = d.dataset(cfg, Split::Test)?;
            let refs = match &refs {
                Some(r) => r,
                None => refs.insert(
                    test.samples
                        .iter()
                        .map(|s| LayerReference::new(&d.problem, &|p: Point| s.eval(p), &setup))
                        .collect::<Result<Vec<_>>>()?,
                ),
            };
            let corrector = d.system.corrector;
            let compare = |coeffs: &[Vec<f64>]| -> Result<(f64, f64)> {
                let (mut rel, mut layer) = (Vec::new(), 0.0f64);
                for (c, r) in coeffs.iter().zip(refs) {
                    let (e, m) = compare_with_reference(&d.mesh, &d.dofmap, c, corrector.as_ref(), r)?;
                    rel.push(e);
                    layer = layer.max(m / r.sup_norm());
                }
                Ok((mean(&rel), layer))
            };
            let test_oracle = oracle_all(&d, &test)?
                .iter()
                .map(|o| d.system.expand(&o.alpha_star))
                .collect::<Result<Vec<_>>>()?;
            let (oracle_rel, oracle_layer) = compare(&test_oracle)?;
            let mut row = base_row(cfg, &d, eps, enriched);
            row.oracle_rel_l2 = Some(oracle_rel);
            row.layer_width = Some(width);
            if cfg.mode == StudyMode::Oracle {
                row.layer_error = Some(oracle_layer);
                row.wall_seconds = start.elapsed().as_secs_f64();
                report.rows.push(row);
                continue;
            }
            let train_ds = d.dataset(cfg, Split::Train)?;
            let train_star: Vec<Vec<f64>> = oracle_all(&d, &train_ds)?.into_iter().map(|o| o.alpha_star).collect();
            let coords = d.dofmap.dof_coords();
            let setup_seconds = start.elapsed().as_secs_f64();
            for &seed in &cfg.seeds {
                let start = Instant::now();
                let mut row = row.clone();
                row.seed = Some(seed);
                let run = (|| -> Result<_> {
                    let state = fit_network(cfg, &d, &train_ds, seed)?;
                    let tr = rel_l2_errors(&state.network, &d.system, &train_ds, coords, &train_star)?;
                    let pred = test
                        .samples
                        .iter()
                        .map(|s| predict_solution(&state.network, s, &d.system, coords))
                        .collect::<Result<Vec<_>>>()?;
                    let (te, layer) = compare(&pred)?;
                    Ok((state.best_loss, mean(&tr), te, layer))
                })();
                match run {
                    Ok((loss, tr, te, layer)) => {
                        row.train_loss = Some(loss);
                        row.train_rel_l2 = Some(tr);
                        row.test_rel_l2 = Some(te);
                        row.layer_error = Some(layer);
                    }
                    Err(e) => failed(&mut row, &e),
                }
                row.wall_seconds = setup_seconds + start.elapsed().as_secs_f64();
                report.rows.push(row);
            }
        }
    }
    Ok(report)
}

/// Which study produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Converge,
    Bench,
    Singular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

fn opt_str(v: Option<f64>) -> String {
    v.map_or("missing".into(), |x| format!("{x:.4e}"))
}

/// Test-error bound of the benchmark for `problem`.
pub fn benchmark_bound(problem: ProblemKind) -> f64 {
    match problem {
        ProblemKind::Eq2 => 8e-2,
        _ => 5e-2,
    }
}

/// Assertions `--check` applies to a finished report.
pub fn acceptance_checks(kind: StudyKind, cfg: &ExperimentConfig, report: &Report) -> Vec<Check> {
    let mut checks = vec![Check::new(
        "no failed rows",
        report.failed_rows() == 0,
        format!("{} of {} rows failed", report.failed_rows(), report.rows.len()),
    )];
    match kind {
        StudyKind::Converge => {
            let slope = report.slope.map(|s| s.slope);
            let (lo, hi) = match (cfg.mode, cfg.order) {
                (StudyMode::Oracle, ElementOrder::P1) => (-2.15, -1.85),
                (StudyMode::Oracle, ElementOrder::P2) => (-3.2, -2.8),
                (StudyMode::Network, ElementOrder::P1) => (-2.3, -1.6),
                // no stated band for learned P2 fields; only require decay
                (StudyMode::Network, ElementOrder::P2) => (f64::NEG_INFINITY, 0.0),
            };
            checks.push(Check::new(
                "convergence slope",
                slope.is_some_and(|s| (lo..=hi).contains(&s)),
                format!("slope {} want [{lo}, {hi}]", opt_str(slope)),
            ));
        }
        StudyKind::Bench => {
            let bound = benchmark_bound(cfg.problem);
            let tm = report.summary_value("test_rel_l2_mean");
            checks.push(Check::new(
                "mean test error",
                tm.is_some_and(|v| v <= bound),
                format!("{} want <= {bound:e}", opt_str(tm)),
            ));
            let gap = report.summary_value("gap_ratio");
            checks.push(Check::new(
                "generalization gap",
                gap.is_some_and(|v| v <= 2.0),
                format!("|test - train| / train = {} want <= 2", opt_str(gap)),
            ));
            if let Some(it) = report.summary_value("newton_max_iters") {
                checks.push(Check::new("newton iterations", it <= 12.0, format!("{it} want <= 12")));
            }
        }
        StudyKind::Singular => {
            for r in &report.rows {
                if r.epsilon > 1e-3 {
                    continue;
                }
                let tag = format!("eps {:e} {}", r.epsilon, if r.enriched { "enriched" } else { "plain" });
                if r.seed.is_none() || r.seed == cfg.seeds.first().copied() {
                    let (ok, want) = if r.enriched {
                        (r.oracle_rel_l2.is_some_and(|v| v <= 2e-2), "<= 2e-2")
                    } else {
                        (r.oracle_rel_l2.is_some_and(|v| v >= 1e-1), ">= 1e-1")
                    };
                    checks.push(Check::new(
                        format!("{tag} oracle error"),
                        ok,
                        format!("{} want {want}", opt_str(r.oracle_rel_l2)),
                    ));
                }
                if r.enriched && r.seed.is_some() {
                    checks.push(Check::new(
                        format!("{tag} seed {} network error", r.seed.unwrap_or(0)),
                        r.test_rel_l2.is_some_and(|v| v <= 5e-2),
                        format!("{} want <= 5e-2", opt_str(r.test_rel_l2)),
                    ));
                    checks.push(Check::new(
                        format!("{tag} seed {} layer error", r.seed.unwrap_or(0)),
                        r.layer_error.is_some_and(|v| v <= 5e-2),
                        format!("{} want <= 5e-2 of max |u|", opt_str(r.layer_error)),
                    ));
                }
            }
            let mut eps: Vec<f64> = cfg.epsilons.clone();
            eps.sort_by(|a, b| b.total_cmp(a));
            let widths: Vec<Option<f64>> = eps
                .iter()
                .map(|e| report.summary_value(&format!("layer_width_eps_{e:e}")))
                .collect();
            if widths.len() > 1 {
                let shrinking = widths.windows(2).all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if b < a));
                checks.push(Check::new(
                    "layer width shrinks with eps",
                    shrinking,
                    format!("{widths:?} for eps {eps:?}"),
                ));
            }
        }
    }
    checks
}
