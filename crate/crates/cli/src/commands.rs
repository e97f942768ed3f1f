use std::io::Write;
use std::sync::Arc;

use rdindex_core::bdf::{solve_dae, DaeSolveConfig, MonitorWarning, StepRecord};
use rdindex_core::catalog;
use rdindex_core::collocation::{solve_iae, CollocationConfig, IaeModel, StepDiagnostic};
use rdindex_core::func::Interval;
use rdindex_core::index::{
    consistency_check, dae_to_iae, rank_degree_index, ChainOptions, ChainStatus, ConsistencyReport, IndexReport,
    DEFAULT_GRID_POINTS,
};
use rdindex_core::linearize::{
    classify, detect_critical_points, linearize_dae, linearize_iae, reference_trajectory, ClassifyConfig, IndexProfile,
};
use rdindex_core::problem::{LinearIae, Problem, SemiNonlinearDae, TrajectorySample};
use serde::Serialize;

use crate::output::{self, num};
use crate::reproduce;
use crate::{resolve, CliError, Command, Common, Format, Loaded};

/// Tolerance of the initial-value consistency conditions reported by `analyze`.
pub const CONSISTENCY_TOL: f64 = 1e-6;
/// Reference trajectory resolution for nonlinear problems.
const TRAJECTORY_POINTS: usize = 101;

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn span_of(common: &Common, p: &Problem) -> Result<Interval, CliError> {
    let dom = p.domain();
    let Some(v) = &common.interval else { return Ok(dom) };
    let span = Interval::new(v[0], v[1]).map_err(|e| CliError::Config(e.to_string()))?;
    if !(dom.contains(span.lo) && dom.contains(span.hi)) {
        return Err(CliError::Config(format!(
            "interval [{}, {}] is not inside the domain [{}, {}]",
            span.lo, span.hi, dom.lo, dom.hi
        )));
    }
    Ok(span)
}

fn config_err(e: rdindex_core::Error) -> CliError {
    match e {
        rdindex_core::Error::InvalidInput(m) => CliError::Config(m),
        other => CliError::Core(other),
    }
}

pub fn execute(cmd: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::List => {
            for name in catalog::NAMES {
                writeln!(out, "{name}  {}", catalog::describe(name).unwrap_or_default()).map_err(io)?;
            }
            Ok(())
        }
        Command::Analyze(common) => analyze(common, out),
        Command::Classify { common, eps, seed } => classify_cmd(common, *eps, *seed, out),
        Command::SolveDae { common, h, order } => solve_dae_cmd(common, *h, *order, out),
        Command::SolveIae { common, h, c } => solve_iae_cmd(common, *h, c, out),
        Command::Reproduce { target, out: dir, seed } => {
            for o in reproduce::run(*target, *seed)? {
                for (file, contents) in &o.files {
                    output::write(dir, file, contents)?;
                }
                let v = &o.summary.verdict;
                writeln!(
                    out,
                    "{}: {} criterion {} {}",
                    o.summary.figure,
                    o.summary.problem,
                    v.criterion,
                    if v.pass { "PASS" } else { "FAIL" }
                )
                .map_err(io)?;
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct AnalyzeOutput<'a> {
    problem: &'a str,
    kind: &'static str,
    interval: [f64; 2],
    /// Set for nonlinear problems: the chain belongs to the linearization.
    linearized_along: Option<&'static str>,
    report: &'a IndexReport,
    consistency: Option<ConsistencyReport>,
    consistency_error: Option<String>,
}

fn analyze(common: &Common, out: &mut dyn Write) -> Result<(), CliError> {
    let Loaded { name, problem } = resolve(common.problem_name())?;
    let span = span_of(common, &problem)?;
    if common.format == Format::Csv {
        return Err(CliError::Config("analyze supports --format text or json".into()));
    }
    let (lin, along): (LinearIae, Option<&'static str>) = match &problem {
        Problem::LinearIae(l) => (l.clone(), None),
        Problem::LinearDae(d) => (dae_to_iae(d)?, None),
        Problem::Dae(d) => {
            let traj = reference_trajectory(&problem, span, TRAJECTORY_POINTS)?;
            let along = if d.exact.is_some() { "exact solution" } else { "initial value" };
            (dae_to_iae(&linearize_dae(d, &traj)?)?, Some(along))
        }
        Problem::Iae(q) => {
            let traj = reference_trajectory(&problem, span, TRAJECTORY_POINTS)?;
            let along = if q.exact.is_some() { "exact solution" } else { "zero" };
            (linearize_iae(q, &traj)?, Some(along))
        }
    };
    let grid = span.uniform_grid(DEFAULT_GRID_POINTS);
    let report = rank_degree_index(&lin.a, &lin.k, &grid, &ChainOptions::default())?;
    let (consistency, consistency_error) = if along.is_none() && span.contains(lin.origin) {
        match consistency_check(&report, &lin.f, lin.origin, CONSISTENCY_TOL, None) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    let doc = AnalyzeOutput {
        problem: &name,
        kind: problem.kind(),
        interval: [span.lo, span.hi],
        linearized_along: along,
        report: &report,
        consistency,
        consistency_error,
    };
    if common.format == Format::Json {
        return out.write_all(output::json(&doc).as_bytes()).map_err(io);
    }
    match report.nu {
        Some(nu) => writeln!(out, "nu = {nu}"),
        None => writeln!(out, "nu undefined: {}", status_text(&report.status)),
    }
    .map_err(io)?;
    writeln!(out, "problem {name} ({}) on [{}, {}]", problem.kind(), span.lo, span.hi).map_err(io)?;
    if let Some(a) = along {
        writeln!(out, "chain of the linearization along the {a}").map_err(io)?;
    }
    for l in &report.levels {
        writeln!(out, "level {}: rank {}", l.level, l.rank).map_err(io)?;
    }
    if let Some(c) = &doc.consistency {
        writeln!(out, "consistency at t0 = {}: {}", c.t0, if c.pass { "pass" } else { "fail" }).map_err(io)?;
        for cond in &c.conditions {
            writeln!(out, "  level {}: residual {}", cond.level, num(cond.residual)).map_err(io)?;
        }
        if let Some(w) = &c.warning {
            writeln!(out, "warning: {w}").map_err(io)?;
        }
    }
    if let Some(e) = &doc.consistency_error {
        writeln!(out, "consistency not checked: {e}").map_err(io)?;
    }
    Ok(())
}

fn status_text(s: &ChainStatus) -> String {
    match s {
        ChainStatus::Ok => "ok".into(),
        ChainStatus::NonConstantRank { level, t } => format!("rank of A_{level} changes at t = {t}"),
        ChainStatus::ExceededMaxLevel => "no nonsingular A_i up to the maximal level".into(),
        ChainStatus::EvaluationFailed { level, t, message } => format!("level {level} at t = {t}: {message}"),
    }
}

#[derive(Serialize)]
struct ClassifyOutput<'a> {
    problem: &'a str,
    interval: [f64; 2],
    seed: u64,
    profile: &'a IndexProfile,
}

fn classify_cmd(common: &Common, eps: f64, seed: u64, out: &mut dyn Write) -> Result<(), CliError> {
    let Loaded { name, problem } = resolve(common.problem_name())?;
    let span = span_of(common, &problem)?;
    if !(eps > 0.0) {
        return Err(CliError::Config("--eps must be positive".into()));
    }
    let traj = reference_trajectory(&problem, span, TRAJECTORY_POINTS)?;
    let cfg = ClassifyConfig { eps, seed, ..ClassifyConfig::default() };
    let prof = classify(&problem, &traj, &span.uniform_grid(DEFAULT_GRID_POINTS), &cfg)?;
    match common.format {
        Format::Json => {
            let doc = ClassifyOutput { problem: &name, interval: [span.lo, span.hi], seed, profile: &prof };
            out.write_all(output::json(&doc).as_bytes()).map_err(io)
        }
        Format::Csv => {
            let mut s = String::from("t,nu\n");
            for (t, nu) in prof.times.iter().zip(&prof.nu_at) {
                s.push_str(&format!("{},{}\n", num(*t), nu.map(|v| v.to_string()).unwrap_or_default()));
            }
            out.write_all(s.as_bytes()).map_err(io)
        }
        Format::Text => {
            let index = prof.index.map_or("index varies".to_string(), |nu| format!("index {nu}"));
            writeln!(out, "{}, {index}", prof.classification.label()).map_err(io)?;
            for t in &prof.critical_points {
                writeln!(out, "critical point t = {t}").map_err(io)?;
            }
            Ok(())
        }
    }
}

fn as_dae(problem: &Problem) -> Result<SemiNonlinearDae, CliError> {
    match problem {
        Problem::Dae(d) => Ok(d.clone()),
        Problem::LinearDae(l) => {
            let b = l.b.clone();
            let bj = l.b.clone();
            Ok(SemiNonlinearDae {
                name: "linear-dae".into(),
                a: l.a.clone(),
                f_map: Arc::new(move |t, y| {
                    b.eval(t).map(|m| m.mul_vec(y)).unwrap_or_else(|_| vec![f64::NAN; y.len()])
                }),
                f_jac: Some(Arc::new(move |t, y| {
                    bj.eval(t).unwrap_or_else(|_| rdindex_core::Mat::from_fn(y.len(), y.len(), |_, _| f64::NAN))
                })),
                rhs: l.q.clone(),
                y0: l.y0.clone(),
                exact: None,
                critical: Vec::new(),
                t_start: l.t_start,
            })
        }
        _ => Err(CliError::Config("solve-dae needs a DAE problem".into())),
    }
}

#[derive(Serialize)]
struct DaeDiagnostics<'a> {
    problem: &'a str,
    interval: [f64; 2],
    h: f64,
    order: u8,
    completed: bool,
    accepted_steps: usize,
    newton_iterations: usize,
    max_error: Option<f64>,
    critical_points: Vec<f64>,
    warnings: &'a [MonitorWarning],
    failure: &'a Option<rdindex_core::bdf::DaeFailure>,
    steps: &'a [StepRecord],
}

fn solve_dae_cmd(common: &Common, h: f64, order: u8, out: &mut dyn Write) -> Result<(), CliError> {
    let Loaded { name, problem } = resolve(common.problem_name())?;
    let span = span_of(common, &problem)?;
    let p = as_dae(&problem)?;
    let cfg = DaeSolveConfig::new(h, order).with_monitor(p.critical.clone());
    cfg.validate().map_err(config_err)?;
    let r = solve_dae(&p, &cfg, span).map_err(config_err)?;
    let max_error = match &p.exact {
        Some(ex) => Some(r.max_error_on(ex, span.lo, span.hi)?),
        None => None,
    };
    let traj = TrajectorySample::new(r.times.clone(), r.values.clone())?;
    let crit = if r.times.len() >= 2 {
        detect_critical_points(&traj, &p.critical, true)?.into_iter().map(|c| c.t).collect()
    } else {
        Vec::new()
    };
    let diag = DaeDiagnostics {
        problem: &name,
        interval: [span.lo, span.hi],
        h,
        order,
        completed: r.completed(),
        accepted_steps: r.steps.len(),
        newton_iterations: r.steps.iter().map(|s| s.newton_iters).sum(),
        max_error,
        critical_points: crit,
        warnings: &r.warnings,
        failure: &r.failure,
        steps: &r.steps,
    };
    let csv = output::solution_csv(&r.times, &r.values, p.exact.as_ref())?;
    let json = output::json(&diag);
    emit(common, &name, &csv, &json, out, || {
        let mut s = format!("completed: {}, accepted steps: {}", r.completed(), r.steps.len());
        if let Some(e) = max_error {
            s.push_str(&format!(", max error {}", num(e)));
        }
        if let Some(f) = &r.failure {
            s.push_str(&format!(", failed at t = {}", f.t));
        }
        s.push_str(&format!(", monitor warnings: {}", r.warnings.len()));
        s
    })
}

#[derive(Serialize)]
struct IaeDiagnostics<'a> {
    problem: &'a str,
    interval: [f64; 2],
    h: f64,
    c: &'a [f64],
    completed: bool,
    max_residual: f64,
    max_error: Option<f64>,
    failure: &'a Option<rdindex_core::collocation::StepFailure>,
    steps: &'a [StepDiagnostic],
}

fn solve_iae_cmd(common: &Common, h: f64, c: &[f64], out: &mut dyn Write) -> Result<(), CliError> {
    let Loaded { name, problem } = resolve(common.problem_name())?;
    let span = span_of(common, &problem)?;
    let model: &dyn IaeModel = match &problem {
        Problem::Iae(q) => q,
        Problem::LinearIae(l) => l,
        _ => return Err(CliError::Config("solve-iae needs an IAE problem".into())),
    };
    let cfg = CollocationConfig::new(c.to_vec(), h);
    cfg.validate().map_err(config_err)?;
    let r = solve_iae(model, &cfg, span).map_err(config_err)?;
    let (times, values) = reproduce::nodes_in(&r, span);
    let exact = model.exact();
    let max_error = match exact {
        Some(ex) => Some(times.iter().zip(&values).try_fold(0.0f64, |m, (t, y)| {
            let z = ex.eval(*t)?;
            Ok::<f64, CliError>(y.iter().zip(&z).fold(m, |m, (a, b)| m.max((a - b).abs())))
        })?),
        None => None,
    };
    let diag = IaeDiagnostics {
        problem: &name,
        interval: [span.lo, span.hi],
        h,
        c,
        completed: r.completed(),
        max_residual: r.max_residual(),
        max_error,
        failure: &r.failure,
        steps: &r.steps,
    };
    let csv = output::solution_csv(&times, &values, exact)?;
    let json = output::json(&diag);
    emit(common, &name, &csv, &json, out, || {
        let mut s = format!("completed: {}, max residual {}", r.completed(), num(r.max_residual()));
        if let Some(e) = max_error {
            s.push_str(&format!(", max error {}", num(e)));
        }
        if let Some(f) = &r.failure {
            s.push_str(&format!(", failed at step {} (t = {}): {}", f.n, f.t, f.reason));
        }
        s
    })
}

/// Writes `<name>_solution.csv` and `<name>_diagnostics.json` and reports on stdout.
fn emit(
    common: &Common,
    name: &str,
    csv: &str,
    json: &str,
    out: &mut dyn Write,
    summary: impl FnOnce() -> String,
) -> Result<(), CliError> {
    let base = name.replace(['/', '\\'], "_");
    output::write(&common.out, &format!("{base}_solution.csv"), csv)?;
    output::write(&common.out, &format!("{base}_diagnostics.json"), json)?;
    match common.format {
        Format::Text => writeln!(out, "{}", summary()).map_err(io),
        Format::Json => out.write_all(json.as_bytes()).map_err(io),
        Format::Csv => out.write_all(csv.as_bytes()).map_err(io),
    }
}
