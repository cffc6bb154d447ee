//! Tables, convergence studies and timing curves over the registered problems.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::problems::{relative_error, ProblemDef};
use crate::solvers::{solve, step_once, BgTableau, Method, RootGuardConfig, Trajectory};
use crate::{Error, Result};

/// Grid points closer than this (in units of `h`) count as on the grid.
const GRID_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub x: f64,
    pub y_num: Vec<f64>,
    pub y_ref: Vec<f64>,
    pub rel_err: Vec<f64>,
}

impl ReportRow {
    pub fn max_abs_deviation(&self) -> f64 {
        self.y_num
            .iter()
            .zip(&self.y_ref)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub problem: String,
    pub method: Method,
    pub h: f64,
    pub n_steps: usize,
    pub rows: Vec<ReportRow>,
    /// Seconds spent in the solve loop.
    pub wall_time: f64,
    pub convergence_slope: Option<f64>,
}

impl BenchReport {
    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, |r| r.y_num.len())
    }

    pub fn row_at(&self, x: f64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| (r.x - x).abs() <= 1e-9 * x.abs().max(1.0))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Value of the numerical solution at `x`: the grid value when `x` is on the
/// grid, otherwise one extra step of the same method from the grid point
/// below `x`.
pub fn sample_at(
    def: &ProblemDef,
    traj: &Trajectory,
    tableau: &BgTableau,
    x: f64,
) -> Result<Vec<f64>> {
    let x0 = def.ivp.x0();
    let pos = (x - x0) / traj.h;
    let last = traj.len() - 1;
    if pos < -GRID_SNAP || pos > last as f64 + GRID_SNAP {
        return Err(Error::InvalidArgument(format!(
            "report point {x} outside the solved range [{x0}, {}]",
            traj.last().x
        )));
    }
    let nearest = pos.round();
    if (pos - nearest).abs() <= GRID_SNAP {
        return Ok(traj.points[nearest as usize].y.clone());
    }
    let base = &traj.points[pos.floor() as usize];
    let method = if traj.in_fallback(base.x) {
        Method::Rk4
    } else {
        traj.method
    };
    step_once(&def.ivp, method, tableau, base.x, &base.y, x - base.x)
}

/// Solve `def` with `method` and tabulate it against the exact solution, or
/// against a fine-step BRK4 reference when no exact solution is known.
pub fn run_table(
    def: &ProblemDef,
    method: Method,
    tableau: &BgTableau,
    h: f64,
    n_steps: usize,
    report_points: &[f64],
    guard: &RootGuardConfig,
) -> Result<BenchReport> {
    if report_points.is_empty() {
        return Err(Error::InvalidArgument("no report points requested".into()));
    }
    let start = Instant::now();
    let traj = solve(&def.ivp, method, tableau, h, n_steps, guard)?;
    let wall_time = start.elapsed().as_secs_f64();

    let reference = Reference::for_problem(def, report_points, guard)?;
    let mut rows = Vec::with_capacity(report_points.len());
    for &x in report_points {
        let y_num = sample_at(def, &traj, tableau, x)?;
        let y_ref = reference.at(def, x)?;
        let rel_err = y_num
            .iter()
            .zip(&y_ref)
            .map(|(n, r)| relative_error(*n, *r))
            .collect();
        rows.push(ReportRow {
            x,
            y_num,
            y_ref,
            rel_err,
        });
    }
    Ok(BenchReport {
        problem: def.name.clone(),
        method,
        h,
        n_steps,
        rows,
        wall_time,
        convergence_slope: None,
    })
}

enum Reference {
    Exact,
    Numerical {
        traj: Trajectory,
        tableau: BgTableau,
    },
}

impl Reference {
    fn for_problem(def: &ProblemDef, points: &[f64], guard: &RootGuardConfig) -> Result<Self> {
        if def.has_exact() {
            return Ok(Reference::Exact);
        }
        let h = def.reference_h.ok_or_else(|| {
            Error::Config(format!("{} has neither exact solution nor reference step", def.name))
        })?;
        let end = points.iter().copied().fold(def.ivp.x0(), f64::max);
        let tableau = BgTableau::classical();
        let traj = solve(&def.ivp, Method::Brk4, &tableau, h, def.steps_to(end, h), guard)?;
        Ok(Reference::Numerical { traj, tableau })
    }

    fn at(&self, def: &ProblemDef, x: f64) -> Result<Vec<f64>> {
        match self {
            Reference::Exact => Ok(def.ivp.exact().expect("checked")(x)),
            Reference::Numerical { traj, tableau } => sample_at(def, traj, tableau, x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub problem: String,
    pub method: Method,
    pub endpoint: f64,
    pub hs: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("slope fit needs two or more paired samples".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("slope fit needs positive samples".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("slope fit needs distinct abscissae".into()));
    }
    Ok(sxy / sxx)
}

fn steps_exactly(def: &ProblemDef, h: f64, endpoint: f64) -> Result<usize> {
    let n = (endpoint - def.ivp.x0()) / h;
    let rounded = n.round();
    if !(h > 0.0) || rounded < 1.0 || (n - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "h = {h} does not reach the endpoint {endpoint} in a whole number of steps"
        )));
    }
    Ok(rounded as usize)
}

/// Relative endpoint error for each `h` and the fitted order.
pub fn convergence_study(
    def: &ProblemDef,
    method: Method,
    tableau: &BgTableau,
    hs: &[f64],
    endpoint: f64,
) -> Result<ConvergenceStudy> {
    if hs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "convergence study needs at least 3 step sizes, got {}",
            hs.len()
        )));
    }
    let exact = def.ivp.exact().ok_or_else(|| {
        Error::InvalidArgument(format!("problem {} has no exact solution", def.name))
    })?;
    let reference = exact(endpoint);
    let mut errors = Vec::with_capacity(hs.len());
    for &h in hs {
        let n = steps_exactly(def, h, endpoint)?;
        let traj = solve(&def.ivp, method, tableau, h, n, &RootGuardConfig::default())?;
        let err = traj
            .last()
            .y
            .iter()
            .zip(&reference)
            .map(|(a, b)| relative_error(*a, *b))
            .fold(0.0, f64::max);
        errors.push(err);
    }
    let slope = log_log_slope(hs, &errors)?;
    Ok(ConvergenceStudy {
        problem: def.name.clone(),
        method,
        endpoint,
        hs: hs.to_vec(),
        errors,
        slope,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingPoint {
    pub method: Method,
    pub h: f64,
    pub n_steps: usize,
    /// Median over the repeats, seconds.
    pub wall_time: f64,
    /// Relative error at the endpoint.
    pub error: f64,
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

/// Median wall time of `repeats` solves from `x0` to `endpoint`.
pub fn timed_solve(
    def: &ProblemDef,
    method: Method,
    tableau: &BgTableau,
    h: f64,
    n_steps: usize,
    repeats: usize,
) -> Result<(Trajectory, f64)> {
    if repeats < 3 {
        return Err(Error::InvalidArgument(format!("timing needs at least 3 repeats, got {repeats}")));
    }
    let guard = RootGuardConfig::default();
    let mut times = Vec::with_capacity(repeats);
    let mut traj = None;
    for _ in 0..repeats {
        let start = Instant::now();
        let t = solve(&def.ivp, method, tableau, h, n_steps, &guard)?;
        times.push(start.elapsed());
        traj = Some(t);
    }
    Ok((traj.expect("repeats >= 3"), median(times).as_secs_f64()))
}

/// `(median wall time, endpoint relative error)` for every method and step.
///
/// The endpoint error is taken against the exact solution, or against the
/// problem's fine-step reference. A step that does not land on `endpoint`
/// is completed by one partial step.
pub fn time_vs_error(
    def: &ProblemDef,
    methods: &[Method],
    hs: &[f64],
    endpoint: f64,
    repeats: usize,
) -> Result<Vec<TimingPoint>> {
    if hs.is_empty() || methods.is_empty() {
        return Err(Error::InvalidArgument("need at least one method and one step size".into()));
    }
    let reference = Reference::for_problem(def, &[endpoint], &RootGuardConfig::default())?;
    let y_ref = reference.at(def, endpoint)?;
    let mut out = Vec::with_capacity(methods.len() * hs.len());
    for &method in methods {
        let tableau = method.default_tableau();
        for &h in hs {
            let n = def.steps_to(endpoint, h);
            let (traj, wall_time) = timed_solve(def, method, &tableau, h, n, repeats)?;
            let y = sample_at(def, &traj, &tableau, endpoint)?;
            let error = y
                .iter()
                .zip(&y_ref)
                .map(|(a, b)| relative_error(*a, *b))
                .fold(0.0, f64::max);
            out.push(TimingPoint {
                method,
                h,
                n_steps: n,
                wall_time,
                error,
            });
        }
    }
    Ok(out)
}

/// Plot-ready CSV for a timing study.
pub fn timing_csv(points: &[TimingPoint]) -> String {
    let mut s = String::from("method,h,n_steps,wall_time_s,rel_error\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{:e},{:e}", p.method, p.h, p.n_steps, p.wall_time, p.error);
    }
    s
}

pub fn convergence_csv(study: &ConvergenceStudy) -> String {
    let mut s = String::from("h,rel_error\n");
    for (h, e) in study.hs.iter().zip(&study.errors) {
        let _ = writeln!(s, "{h},{e:e}");
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Markdown,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(Error::InvalidArgument(format!(
                "unknown format `{other}` (expected csv, json or markdown)"
            ))),
        }
    }
}

fn column_names(prefix: &str, dim: usize) -> Vec<String> {
    if dim == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=dim).map(|i| format!("{prefix}_{i}")).collect()
    }
}

/// CSV with columns `x, y_num[_i], y_ref[_i], rel_err[_i]`.
pub fn to_csv(report: &BenchReport) -> String {
    let dim = report.dim();
    let mut header = vec!["x".to_string()];
    for prefix in ["y_num", "y_ref", "rel_err"] {
        header.extend(column_names(prefix, dim));
    }
    let mut s = header.join(",");
    s.push('\n');
    for row in &report.rows {
        let fields: Vec<String> = std::iter::once(row.x)
            .chain(row.y_num.iter().copied())
            .chain(row.y_ref.iter().copied())
            .chain(row.rel_err.iter().copied())
            .map(|v| format!("{v}"))
            .collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

/// Table with one `y_ref | y_method | relative error` group per component.
pub fn to_markdown(report: &BenchReport) -> String {
    let dim = report.dim();
    let label = report.method.as_str().to_ascii_uppercase();
    let suffix = |i: usize| if dim == 1 { String::new() } else { format!("[{}]", i + 1) };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{}: {}, h = {}, {} steps\n",
        report.problem, label, report.h, report.n_steps
    );
    let mut header = String::from("| x |");
    let mut rule = String::from("|---|");
    for i in 0..dim {
        let _ = write!(header, " y_ref{0} | y_{1}{0} | relative error{0} |", suffix(i), label);
        rule.push_str("---|---|---|");
    }
    let _ = writeln!(s, "{header}\n{rule}");
    for row in &report.rows {
        let _ = write!(s, "| {} |", row.x);
        for i in 0..dim {
            let _ = write!(
                s,
                " {:.6} | {:.6} | {:.6e} |",
                row.y_ref[i], row.y_num[i], row.rel_err[i]
            );
        }
        s.push('\n');
    }
    let _ = writeln!(s, "\nwall time: {:.3e} s", report.wall_time);
    if let Some(slope) = report.convergence_slope {
        let _ = writeln!(s, "convergence slope: {slope:.4}");
    }
    s
}

pub fn render(report: &BenchReport, format: Format) -> Result<String> {
    if report.rows.is_empty() {
        return Err(Error::InvalidArgument("report has no rows".into()));
    }
    Ok(match format {
        Format::Csv => to_csv(report),
        Format::Json => serde_json::to_string_pretty(report)?,
        Format::Markdown => to_markdown(report),
    })
}

/// Write `report` to `path`. Empty reports are rejected before touching the
/// file system.
pub fn emit(report: &BenchReport, format: Format, path: &Path) -> Result<()> {
    let text = render(report, format)?;
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
