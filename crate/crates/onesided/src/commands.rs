//! One function per subcommand; each returns a [`Report`] and a status.

use rand::Rng;
use serde_json::Value;

use onesided_core::catalog::{self, ExampleModel};
use onesided_core::confidence::{self, EstimatorKind, EstimatorSpec};
use onesided_core::mc::{self, Executor};
use onesided_core::model::ProjectedInfluence;
use onesided_core::one_sided::{self, TestSpec};
use onesided_core::paths::{self, PathKind, PerturbedMeasure};
use onesided_core::ranks::{self, ScoreFunction};
use onesided_core::{cone, hilbert, BaseMeasure, Error as CoreError, LocalModel, ScalarFunction, TangentSet};

use crate::cli::{Command, ModelSource, RunConfig, ScoreChoice};
use crate::config::{ConfigError, ModelConfig};
use crate::report::{Cell, Report};

/// Largest acceptable deviation from a printed example value.
pub const PRINTED_TOLERANCE: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// A report and the exit status it implies (0, or 1 for a failed table check).
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub status: i32,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Self { report, status: 0 }
    }
}

/// A model ready for experiments.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model: LocalModel,
    pub anchor: f64,
    /// Echo of the model definition.
    pub echo: Value,
}

pub fn resolve_model(source: &ModelSource) -> Result<Resolved, RunError> {
    match source {
        ModelSource::Example { id, a } => {
            let ex: ExampleModel = if *id == 1 { catalog::build_example_1(*a)? } else { catalog::build_example_2(*a)? };
            let params: serde_json::Map<String, Value> = ex.params.iter().map(|(k, v)| (k.clone(), Cell::Num(*v).to_json())).collect();
            let echo = serde_json::json!({ "example": id, "params": params });
            Ok(Resolved { model: ex.model(TangentSet::Cone), anchor: 0.0, echo })
        }
        ModelSource::Config { path } => {
            let cfg = ModelConfig::load(path)?;
            let echo = serde_json::to_value(&cfg).expect("model config serializes");
            Ok(Resolved { model: cfg.build()?, anchor: cfg.anchor, echo })
        }
    }
}

/// Runs `cfg` on `exec`.
pub fn execute<E: Executor>(cfg: &RunConfig, exec: &E) -> Result<Outcome, RunError> {
    match cfg.command {
        Command::Example => example(cfg),
        Command::LemmaTv => Ok(lemma_tv(cfg, exec)?.into()),
        Command::Ranks => Ok(ranks_cmd(cfg, exec)?.into()),
        cmd => {
            let r = resolve_model(&cfg.model)?;
            let report = match cmd {
                Command::Project => project(cfg, &r)?,
                Command::Power => power(cfg, &r, exec)?,
                Command::Breakdown => breakdown(cfg, &r, exec)?,
                Command::Coverage => coverage(cfg, &r, exec)?,
                Command::Medianbias => median_bias(cfg, &r, exec)?,
                Command::Hajek => hajek(cfg, &r, exec)?,
                _ => unreachable!("handled above"),
            };
            Ok(report.into())
        }
    }
}

fn new_report(cfg: &RunConfig, model_echo: Option<&Value>, columns: &[&str]) -> Report {
    let mut echo = serde_json::to_value(cfg).expect("run config serializes");
    if let (Some(m), Value::Object(map)) = (model_echo, &mut echo) {
        map.insert("model_definition".to_string(), m.clone());
    }
    Report::new(cfg.command.name(), echo, columns)
}

/// `|mc − theory| ≤ max(k·se, slack)`.
fn agrees(mc: f64, se: f64, theory: f64, k: f64, slack: f64) -> bool {
    (mc - theory).abs() <= (k * se).max(slack)
}

/// Path direction from `--weights` or `--tangent`, if either was given.
fn chosen_direction(cfg: &RunConfig, model: &LocalModel) -> Result<Option<ScalarFunction>, CoreError> {
    let k = model.generators.len();
    if let Some(w) = &cfg.weights {
        if w.len() != k {
            return Err(CoreError::InvalidArgument(format!("--weights needs {k} values, got {}", w.len())));
        }
        return Ok(Some(ScalarFunction::linear_combination(w, &model.generators).with_label("g0")));
    }
    if let Some(i) = cfg.tangent {
        return model
            .generators
            .get(i)
            .cloned()
            .map(Some)
            .ok_or_else(|| CoreError::InvalidArgument(format!("--tangent {i} out of range (model has {k} generators)")));
    }
    Ok(None)
}

struct Projections {
    cone: ProjectedInfluence,
    span: Result<ProjectedInfluence, CoreError>,
}

fn projections(model: &LocalModel) -> Result<Projections, CoreError> {
    Ok(Projections { cone: model.cone_influence()?, span: model.span_influence() })
}

fn test_spec(infl: &ProjectedInfluence, alpha: f64) -> Result<TestSpec, CoreError> {
    TestSpec::with_norm(infl.function.clone(), infl.norm, alpha)
}

fn estimator(infl: &ProjectedInfluence, anchor: f64, kind: EstimatorKind) -> EstimatorSpec {
    EstimatorSpec { influence: infl.function.clone(), anchor, norm: infl.norm, kind, floor: None }
}

fn project(cfg: &RunConfig, r: &Resolved) -> Result<Report, RunError> {
    let sys = r.model.gram()?;
    let cone_p = cone::project_cone(&sys)?;
    let span_p = cone::project_span(&sys);
    let kkt = cone::verify_kkt(&sys, &cone_p, 1e-9);
    let mut rep = new_report(
        cfg,
        Some(&r.echo),
        &["generator", "label", "cross", "span_coeff", "cone_coeff", "multiplier", "active"],
    );
    for (i, g) in r.model.generators.iter().enumerate() {
        rep.push_row(vec![
            i.into(),
            g.label().into(),
            sys.cross[i].into(),
            span_p.as_ref().ok().map(|s| s.coeffs[i]).into(),
            cone_p.coeffs[i].into(),
            cone_p.multipliers[i].into(),
            cone_p.active_set.contains(&i).into(),
        ]);
    }
    for i in 0..sys.len() {
        for j in i..sys.len() {
            rep.summarize(&format!("gram_{i}_{j}"), sys.gram.get(i, j));
        }
    }
    rep.summarize("kappa_norm_sq", sys.kappa_norm_sq);
    match &span_p {
        Ok(s) => {
            rep.summarize("span_norm_sq", s.norm_sq);
            rep.summarize("span_to_cone_ratio", one_sided::sample_size_ratio(cone_p.norm_sq, s.norm_sq).ok());
        }
        Err(e) => rep.summarize("span_error", e.to_string()),
    }
    rep.summarize("cone_norm_sq", cone_p.norm_sq);
    rep.summarize("kkt_nonnegativity", kkt.nonnegativity);
    rep.summarize("kkt_slackness", kkt.slackness);
    rep.summarize("kkt_dual_feasibility", kkt.dual_feasibility);
    rep.summarize("kkt_norm_identity", kkt.norm_identity);
    rep.summarize("kkt_passed", kkt.passed);
    rep.refer("projection of the influence curve onto the tangent cone and its span");
    rep.refer("KKT conditions of the cone projection");
    Ok(rep)
}

fn power<E: Executor>(cfg: &RunConfig, r: &Resolved, exec: &E) -> Result<Report, RunError> {
    let p = &r.model.measure;
    let g = chosen_direction(cfg, &r.model)?.unwrap_or_else(|| r.model.generators[0].clone());
    let kg = hilbert::inner_product(&r.model.kappa, &g, p)?;
    let t = match cfg.t {
        Some(t) => t,
        None if kg > 0.0 => cfg.c / kg,
        None => {
            return Err(CoreError::InvalidArgument(format!(
                "⟨κ|{}⟩ = {kg:.6} is not positive; pass --t explicitly",
                g.label()
            ))
            .into())
        }
    };
    let proj = projections(&r.model)?;
    let path = paths::at_sample_size(&g, t, cfg.n as u64, PathKind::Quadratic, p)?;
    let base = PerturbedMeasure::unperturbed(p.clone());
    let mut rep = new_report(cfg, Some(&r.echo), &["test", "scenario", "t", "mc", "se", "theory", "agrees"]);
    let mut run = |name: &str, infl: &ProjectedInfluence| -> Result<(), CoreError> {
        let spec = test_spec(infl, cfg.alpha)?;
        // same seeds for both tests: common random numbers
        for (scenario, m, seed) in [("size", &base, mc::derive_seed(cfg.seed, 0)), ("path", &path, mc::derive_seed(cfg.seed, 1))] {
            let pr = one_sided::mc_power(&spec, m, cfg.n, cfg.replications, seed, exec)?;
            let t_col = if scenario == "size" { 0.0 } else { t };
            rep.push_row(vec![
                name.into(),
                scenario.into(),
                t_col.into(),
                pr.mc_estimate.into(),
                pr.mc_se.into(),
                pr.theory.into(),
                agrees(pr.mc_estimate, pr.mc_se, pr.theory, 2.0, 0.02).into(),
            ]);
        }
        Ok(())
    };
    run("cone", &proj.cone)?;
    if let Ok(span) = &proj.span {
        run("span", span)?;
    }
    rep.summarize("tangent", g.label());
    rep.summarize("kappa_g", kg);
    rep.summarize("separation", t * kg);
    rep.summarize("cone_norm", proj.cone.norm);
    if let Ok(span) = &proj.span {
        rep.summarize("span_norm", span.norm);
        rep.summarize("span_to_cone_ratio", (span.norm / proj.cone.norm).powi(2));
    }
    rep.refer("asymptotic power of the one-sided test along a path: Φ(−u_α + t⟨κ̂|g⟩/‖κ̂‖)");
    rep.refer("asymptotic size α under the base measure");
    Ok(rep)
}

fn breakdown<E: Executor>(cfg: &RunConfig, r: &Resolved, exec: &E) -> Result<Report, RunError> {
    let p = &r.model.measure;
    let proj = projections(&r.model)?;
    let spec = test_spec(&proj.cone, cfg.alpha)?;
    let g0 = match chosen_direction(cfg, &r.model)? {
        Some(g) => g,
        None => first_breakdown_direction(&r.model, &spec.influence)?,
    };
    let grid = cfg.t_grid.clone().unwrap_or_else(|| (1..=20).map(|i| 0.5 * i as f64).collect());
    let rows = one_sided::breakdown_curve(&spec, &r.model.kappa, &g0, &grid, cfg.n, cfg.replications, cfg.seed, p, exec)?;
    let mut rep = new_report(cfg, Some(&r.echo), &["t", "mc", "se", "theory"]);
    for pr in &rows {
        rep.push_row(vec![pr.t.into(), pr.mc_estimate.into(), pr.mc_se.into(), pr.theory.into()]);
    }
    let ig = hilbert::inner_product(&spec.influence, &g0, p)?;
    rep.summarize("tangent", g0.label());
    rep.summarize("kappa_g", hilbert::inner_product(&r.model.kappa, &g0, p)?);
    rep.summarize("cone_kappa_g", ig);
    rep.summarize("slope", ig / spec.norm);
    rep.refer("level breakdown of the cone test along tangents with ⟨κ|g⟩ ≤ 0 < ⟨κ̃|g⟩");
    Ok(rep)
}

/// First generator `g` with `⟨κ|g⟩ ≤ 0 < ⟨κ̃|g⟩`.
fn first_breakdown_direction(model: &LocalModel, cone_infl: &ScalarFunction) -> Result<ScalarFunction, CoreError> {
    for g in &model.generators {
        let kg = hilbert::inner_product(&model.kappa, g, &model.measure)?;
        let ig = hilbert::inner_product(cone_infl, g, &model.measure)?;
        if kg <= 0.0 && 0.0 < ig {
            return Ok(g.clone());
        }
    }
    Err(CoreError::ConditionNotMet("no generator g has ⟨κ|g⟩ ≤ 0 < ⟨κ̃|g⟩; pass --tangent or --weights".to_string()))
}

/// First generator `g` with `0 < ⟨κ|g⟩ < ⟨κ̃|g⟩`, else the first generator.
fn first_bias_direction(model: &LocalModel, cone_infl: &ScalarFunction) -> Result<ScalarFunction, CoreError> {
    for g in &model.generators {
        let kg = hilbert::inner_product(&model.kappa, g, &model.measure)?;
        let ig = hilbert::inner_product(cone_infl, g, &model.measure)?;
        if 0.0 < kg && kg < ig {
            return Ok(g.clone());
        }
    }
    Ok(model.generators[0].clone())
}

fn coverage<E: Executor>(cfg: &RunConfig, r: &Resolved, exec: &E) -> Result<Report, RunError> {
    let p = &r.model.measure;
    let proj = projections(&r.model)?;
    let m = match cfg.t {
        Some(t) => {
            let g = chosen_direction(cfg, &r.model)?.unwrap_or_else(|| r.model.generators[0].clone());
            paths::at_sample_size(&g, t, cfg.n as u64, PathKind::Quadratic, p)?
        }
        None => PerturbedMeasure::unperturbed(p.clone()),
    };
    let mut rep = new_report(
        cfg,
        Some(&r.echo),
        &["estimator", "kind", "t_lower", "t_upper", "empirical", "se", "theory", "agrees"],
    );
    let mut estimators = vec![("cone", estimator(&proj.cone, r.anchor, EstimatorKind::ConeEfficient))];
    if let Ok(span) = &proj.span {
        estimators.push(("span", estimator(span, r.anchor, EstimatorKind::SpanEfficient)));
    }
    let lower_seed = mc::derive_seed(cfg.seed, 0);
    for (name, spec) in &estimators {
        let cr = confidence::mc_coverage(spec, &r.model.kappa, &m, cfg.c, cfg.n, cfg.replications, lower_seed, exec)?;
        rep.push_row(vec![
            (*name).into(),
            "lower".into(),
            Cell::Missing,
            cr.t.into(),
            cr.empirical.into(),
            cr.mc_se.into(),
            cr.theory.into(),
            agrees(cr.empirical, cr.mc_se, cr.theory, 2.0, 0.02).into(),
        ]);
    }
    if let Some((name, spec)) = estimators.iter().find(|(n, _)| *n == "span") {
        let levels = [0.5 * cfg.c, cfg.c, 2.0 * cfg.c];
        for (i, &tl) in levels.iter().enumerate() {
            for (j, &tu) in levels.iter().enumerate() {
                let seed = mc::derive_seed(cfg.seed, 1 + (3 * i + j) as u64);
                let cr = confidence::mc_interval_coverage(spec, &r.model.kappa, &m, tl, tu, cfg.n, cfg.replications, seed, exec)?;
                rep.push_row(vec![
                    (*name).into(),
                    "interval".into(),
                    tl.into(),
                    tu.into(),
                    cr.empirical.into(),
                    cr.mc_se.into(),
                    cr.theory.into(),
                    agrees(cr.empirical, cr.mc_se, cr.theory, 2.0, 0.02).into(),
                ]);
            }
        }
    }
    rep.summarize("path_t", cfg.t);
    rep.refer("coverage of the lower confidence limit Sₙ − c/√n: Φ(c/‖κ̂‖) under the base measure");
    rep.refer("two-sided coverage of the span estimator: Φ(t″/‖κ̄‖) − Φ(−t′/‖κ̄‖)");
    Ok(rep)
}

fn median_bias<E: Executor>(cfg: &RunConfig, r: &Resolved, exec: &E) -> Result<Report, RunError> {
    let p = &r.model.measure;
    let proj = projections(&r.model)?;
    let g = match chosen_direction(cfg, &r.model)? {
        Some(g) => g,
        None => first_bias_direction(&r.model, &proj.cone.function)?,
    };
    let grid = cfg.t_grid.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0, 6.0, 8.0]);
    let mut rep = new_report(cfg, Some(&r.echo), &["estimator", "t", "prob_le", "se", "theory", "agrees"]);
    let mut estimators = vec![("cone", estimator(&proj.cone, r.anchor, EstimatorKind::ConeEfficient))];
    if let Ok(span) = &proj.span {
        estimators.push(("span", estimator(span, r.anchor, EstimatorKind::SpanEfficient)));
    }
    for (name, spec) in &estimators {
        let mb = confidence::median_bias_probe(spec, &r.model.kappa, &g, &grid, cfg.n, cfg.replications, cfg.seed, p, exec)?;
        for i in 0..mb.t_grid.len() {
            rep.push_row(vec![
                (*name).into(),
                mb.t_grid[i].into(),
                mb.prob_le[i].into(),
                mb.mc_se[i].into(),
                mb.theory[i].into(),
                agrees(mb.prob_le[i], mb.mc_se[i], mb.theory[i], 3.0, 0.03).into(),
            ]);
        }
        rep.summarize(&format!("{name}_breakdown_mode"), mb.breakdown_mode);
    }
    rep.summarize("tangent", g.label());
    rep.summarize("kappa_g", hilbert::inner_product(&r.model.kappa, &g, p)?);
    rep.summarize("cone_kappa_g", hilbert::inner_product(&proj.cone.function, &g, p)?);
    rep.refer("median bias of the cone estimator: Φ(−t⟨κ̃ − κ|g⟩/‖κ̃‖) when 0 < ⟨κ|g⟩ < ⟨κ̃|g⟩");
    rep.refer("median unbiasedness of the span estimator");
    Ok(rep)
}

fn hajek<E: Executor>(cfg: &RunConfig, r: &Resolved, exec: &E) -> Result<Report, RunError> {
    let p = &r.model.measure;
    let proj = projections(&r.model)?;
    let directions = match chosen_direction(cfg, &r.model)? {
        Some(g) => vec![g],
        None => r.model.generators.clone(),
    };
    let ts = cfg.t_grid.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0]);
    let grid: Vec<(f64, ScalarFunction)> = ts.iter().flat_map(|&t| directions.iter().map(move |g| (t, g.clone()))).collect();
    let probes = cfg.probe.clone().unwrap_or_else(|| vec![-1.0, 0.0, 1.0]);
    let mut rep = new_report(
        cfg,
        Some(&r.echo),
        &["estimator", "t", "tangent", "kappa_g", "cone_kappa_g", "max_deviation", "se", "within"],
    );
    let mut estimators = vec![("cone", estimator(&proj.cone, r.anchor, EstimatorKind::ConeEfficient))];
    if let Ok(span) = &proj.span {
        estimators.push(("span", estimator(span, r.anchor, EstimatorKind::SpanEfficient)));
    }
    for (name, spec) in &estimators {
        let table = confidence::hajek_probe(spec, &r.model.kappa, &grid, cfg.n, cfg.replications, cfg.seed, p, &probes, exec)?;
        for (row, (_, g)) in table.rows.iter().zip(&grid) {
            rep.push_row(vec![
                (*name).into(),
                row.t.into(),
                row.tangent.clone().into(),
                hilbert::inner_product(&r.model.kappa, g, p)?.into(),
                hilbert::inner_product(&proj.cone.function, g, p)?.into(),
                row.max_deviation.into(),
                row.mc_se.into(),
                (row.max_deviation <= (3.0 * row.mc_se).max(0.02)).into(),
            ]);
        }
        for (x, f) in table.probe_points.iter().zip(&table.base_cdf) {
            rep.summarize(&format!("{name}_base_cdf_at_{}", crate::report::format_float(*x)), *f);
        }
    }
    rep.refer("convolution structure of regular estimators over the span");
    rep.refer("shifted limit of the cone estimator along tangents with ⟨κ̃ − κ|g⟩ ≠ 0");
    Ok(rep)
}

fn ranks_cmd<E: Executor>(cfg: &RunConfig, exec: &E) -> Result<Report, RunError> {
    let rho = match cfg.scores {
        ScoreChoice::Normal => ScoreFunction::normal_scores(),
        ScoreChoice::Wilcoxon => ScoreFunction::wilcoxon(),
        ScoreChoice::Projected => catalog::example_1_span_scores(cfg.example_a())?,
    };
    let normal = BaseMeasure::standard_normal();
    let laplace = BaseMeasure::laplace(0.0, 1.0)?;
    let mut rep = new_report(cfg, None, &["measure", "check", "n", "value", "se", "theory", "agrees"]);
    if cfg.scores == ScoreChoice::Normal {
        let k = ranks::rank_influence_curve(&rho, &normal)?;
        let dev = (0..=1000).map(|i| -5.0 + 0.01 * i as f64).map(|x| (k.eval(x) - x).abs()).fold(0.0, f64::max);
        rep.push_row(vec![
            "normal".into(),
            "kappa_identity".into(),
            Cell::Missing,
            dev.into(),
            Cell::Missing,
            0.0.into(),
            (dev <= 1e-9).into(),
        ]);
    }
    for (i, (name, p)) in [("normal", &normal), ("laplace", &laplace)].into_iter().enumerate() {
        let pr = ranks::mc_rank_size(&rho, cfg.alpha, p, cfg.n, cfg.replications, mc::derive_seed(cfg.seed, i as u64), exec)?;
        rep.push_row(vec![
            name.into(),
            "size".into(),
            cfg.n.into(),
            pr.mc_estimate.into(),
            pr.mc_se.into(),
            pr.theory.into(),
            agrees(pr.mc_estimate, pr.mc_se, pr.theory, 2.0, 0.02).into(),
        ]);
    }
    let d = ranks::rank_disagreement(&rho, cfg.alpha, &normal, cfg.n, cfg.replications, mc::derive_seed(cfg.seed, 2), exec)?;
    rep.push_row(vec![
        "normal".into(),
        "disagreement".into(),
        cfg.n.into(),
        d.rate.into(),
        d.mc_se.into(),
        Cell::Missing,
        Cell::Missing,
    ]);
    rep.summarize("scores", rho.function().label());
    rep.summarize("norm_0", rho.norm_0());
    rep.refer("distribution-free size of the optimal signed rank test");
    rep.refer("normal-scores rank influence curve equals the identity under N(0,1)");
    rep.refer("asymptotic equivalence of the rank test and the test based on κ_P");
    Ok(rep)
}

fn example(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let a = cfg.example_a();
    let rows = catalog::reproduce_table(a)?;
    let mut rep = new_report(cfg, None, &["name", "printed", "computed", "deviation", "ok"]);
    let mut status = 0;
    for row in &rows {
        let ok = row.deviation.is_none_or(|d| d <= PRINTED_TOLERANCE);
        if !ok {
            status = 1;
        }
        rep.push_row(vec![row.name.clone().into(), row.printed.into(), row.computed.into(), row.deviation.into(), ok.into()]);
    }
    rep.summarize("a", a);
    rep.summarize("tolerance", PRINTED_TOLERANCE);
    rep.refer("numerical values of example 1 at a = 1");
    Ok(Outcome { report: rep, status })
}

/// Outcome of one random instance of the total-variation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvInstance {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Draws instance `index`: random `p`, `q` on 2 to 8 atoms (some atoms null
/// under one of them), the exact Neyman–Pearson test `τ*` at a random level,
/// and a competitor `τ` that is either arbitrary or a small perturbation of
/// `τ*`. `δ` is the exact loss of `τ` in size or power.
pub fn tv_instance(seed: u64, index: u64) -> Result<TvInstance, CoreError> {
    let mut rng = mc::replication_rng(seed, index);
    loop {
        let k = rng.random_range(2..=8);
        let mut p: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut q: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
        if k > 2 && rng.random_bool(0.3) {
            let i = rng.random_range(0..k);
            if rng.random_bool(0.5) {
                p[i] = 0.0;
            } else {
                q[i] = 0.0;
            }
        }
        let (sp, sq) = (p.iter().sum::<f64>(), q.iter().sum::<f64>());
        if sp == 0.0 || sq == 0.0 {
            continue;
        }
        p.iter_mut().for_each(|x| *x /= sp);
        q.iter_mut().for_each(|x| *x /= sq);
        let alpha = rng.random_range(0.01..0.5);
        let np = one_sided::np_test_discrete(&p, &q, alpha)?;
        let tau: Vec<f64> = if rng.random_bool(0.5) {
            (0..k).map(|_| rng.random_range(0.0..1.0)).collect()
        } else {
            let h = rng.random_range(0.0..0.2);
            np.tau.iter().map(|&t| (t + rng.random_range(-h..=h)).clamp(0.0, 1.0)).collect()
        };
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let delta = (dot(&tau, &p) - dot(&np.tau, &p)).max(dot(&np.tau, &q) - dot(&tau, &q)).max(0.0);
        let eps = rng.random_range(0.01..1.0);
        let b = one_sided::tv_uniqueness_bound(&p, &q, &tau, &np.tau, np.np_critical, delta, eps)?;
        return Ok(TvInstance { lhs: b.lhs, rhs: b.rhs, holds: b.holds });
    }
}

fn lemma_tv<E: Executor>(cfg: &RunConfig, exec: &E) -> Result<Report, RunError> {
    let results: Vec<TvInstance> = exec
        .map_replications(cfg.replications, |i| tv_instance(cfg.seed, i as u64))
        .into_iter()
        .collect::<Result<_, _>>()?;
    let violations = results.iter().filter(|r| !r.holds).count();
    let tight = results.iter().filter(|r| r.rhs > 0.0).map(|r| r.lhs / r.rhs).fold(0.0, f64::max);
    let mut rep = new_report(cfg, None, &["instances", "violations", "max_lhs_over_rhs"]);
    rep.push_row(vec![results.len().into(), violations.into(), tight.into()]);
    rep.refer("total-variation bound |ν_c|{|τ − τ*| > ε} ≤ (1 + c)δ/ε for near-optimal tests");
    Ok(rep)
}
