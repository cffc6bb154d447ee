use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bigeo::bench::{self, BenchReport, Format};
use bigeo::problems::{problem_with_params, ProblemDef, PROBLEM_NAMES};
use bigeo::solvers::{BgTableau, Method, RootGuardConfig};
use bigeo::{Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bgode", version, about = "Bigeometric Runge-Kutta benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem and tabulate it against the reference solution.
    Run(RunArgs),
    /// Fit the global error order over a ladder of step sizes.
    Converge(ConvergeArgs),
    /// Median wall time against endpoint error for several methods.
    Timevserror(TimingArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// One of log_example, sqrt_example, tumor.
    #[arg(long, default_value = "log_example")]
    problem: String,
    /// Parameter override, repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_param)]
    params: Vec<(String, f64)>,
}

impl ProblemArgs {
    fn load(&self) -> Result<ProblemDef> {
        let overrides: BTreeMap<String, f64> = self.params.iter().cloned().collect();
        problem_with_params(&self.problem, &overrides)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value = "brk4")]
    method: Method,
    /// Step size; defaults to the problem's.
    #[arg(long)]
    h: Option<f64>,
    /// Number of steps; defaults to the problem's, or enough to reach the last report point.
    #[arg(long)]
    steps: Option<usize>,
    /// Tableau file with one key=value per line.
    #[arg(long)]
    tableau: Option<PathBuf>,
    /// Comma-separated report points.
    #[arg(long, value_delimiter = ',')]
    report: Option<Vec<f64>>,
    /// Disable the RK4 fallback near roots.
    #[arg(long)]
    no_guard: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "markdown")]
    format: Format,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value = "brk4")]
    method: Method,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.25,0.125,0.0625")]
    h: Vec<f64>,
    /// Defaults to the last report point of the problem.
    #[arg(long)]
    endpoint: Option<f64>,
    #[arg(long)]
    tableau: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "markdown")]
    format: Format,
}

#[derive(Args)]
struct TimingArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_delimiter = ',', default_value = "brk4,rk4")]
    methods: Vec<Method>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.5,0.25,0.1,0.05,0.025,0.01,0.005,0.0025,0.001"
    )]
    h: Vec<f64>,
    #[arg(long)]
    endpoint: Option<f64>,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("`{}` is not a number", v.trim()))?;
    Ok((k.trim().to_string(), v))
}

fn load_tableau(path: Option<&Path>, method: Method) -> Result<BgTableau> {
    match path {
        None => Ok(method.default_tableau()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                path: p.to_path_buf(),
                source,
            })?;
            BgTableau::parse_kv(&text)
        }
    }
}

fn write_output(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn default_endpoint(def: &ProblemDef) -> f64 {
    def.report_points.last().copied().unwrap_or(def.ivp.x0())
}

fn run(args: RunArgs) -> Result<()> {
    let def = args.problem.load()?;
    let tableau = load_tableau(args.tableau.as_deref(), args.method)?;
    let h = args.h.unwrap_or(def.default_h);
    let points = args.report.unwrap_or_else(|| def.report_points.clone());
    let steps = match (args.steps, args.h) {
        (Some(n), _) => n,
        (None, None) => def.default_steps,
        (None, Some(h)) => def.steps_to(points.iter().copied().fold(def.ivp.x0(), f64::max), h),
    };
    let guard = if args.no_guard {
        RootGuardConfig::disabled()
    } else {
        RootGuardConfig::default()
    };
    let report: BenchReport = bench::run_table(&def, args.method, &tableau, h, steps, &points, &guard)?;
    match args.out {
        Some(p) => bench::emit(&report, args.format, &p),
        None => write_output(&bench::render(&report, args.format)?, None),
    }
}

fn converge(args: ConvergeArgs) -> Result<()> {
    let def = args.problem.load()?;
    let tableau = load_tableau(args.tableau.as_deref(), args.method)?;
    let endpoint = args.endpoint.unwrap_or_else(|| default_endpoint(&def));
    let study = bench::convergence_study(&def, args.method, &tableau, &args.h, endpoint)?;
    let text = match args.format {
        Format::Csv => bench::convergence_csv(&study),
        Format::Json => serde_json::to_string_pretty(&study)?,
        Format::Markdown => {
            let mut s = format!(
                "{}: {}, endpoint {}\n\n| h | relative error |\n|---|---|\n",
                study.problem,
                study.method.as_str().to_ascii_uppercase(),
                study.endpoint
            );
            for (h, e) in study.hs.iter().zip(&study.errors) {
                s.push_str(&format!("| {h} | {e:.6e} |\n"));
            }
            s.push_str(&format!("\nfitted slope: {:.4}\n", study.slope));
            s
        }
    };
    write_output(&text, args.out.as_deref())
}

fn timevserror(args: TimingArgs) -> Result<()> {
    let def = args.problem.load()?;
    let endpoint = args.endpoint.unwrap_or_else(|| default_endpoint(&def));
    let points = bench::time_vs_error(&def, &args.methods, &args.h, endpoint, args.repeats)?;
    write_output(&bench::timing_csv(&points), args.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) => run(a),
        Command::Converge(a) => converge(a),
        Command::Timevserror(a) => timevserror(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Error::UnknownProblem(_) = e {
                eprintln!("bgode: error: {e} (known: {})", PROBLEM_NAMES.join(", "));
            } else {
                eprintln!("bgode: error: {e}");
            }
            ExitCode::FAILURE
        }
    }
}
