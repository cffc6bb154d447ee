//! Benchmark initial value problems.

use std::collections::BTreeMap;

use crate::solvers::{IvpSpec, OrdinaryRhs, RhsLog, Trajectory};
use crate::{Error, Result};

pub const PROBLEM_NAMES: [&str; 3] = ["log_example", "sqrt_example", "tumor"];

/// Step size of the self-generated tumor reference trajectory.
pub const TUMOR_REFERENCE_H: f64 = 0.005;

#[derive(Debug, Clone)]
pub struct ProblemDef {
    pub name: String,
    pub ivp: IvpSpec,
    pub default_h: f64,
    pub default_steps: usize,
    pub params: BTreeMap<String, f64>,
    /// Abscissae tabulated by default.
    pub report_points: Vec<f64>,
    /// Step of the BRK4 run that stands in for the exact solution when none
    /// is known.
    pub reference_h: Option<f64>,
}

impl ProblemDef {
    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    pub fn has_exact(&self) -> bool {
        self.ivp.exact().is_some()
    }

    /// Number of steps of size `h` needed to reach `end` from `x0`.
    pub fn steps_to(&self, end: f64, h: f64) -> usize {
        ((end - self.ivp.x0()) / h - 1e-9).ceil().max(0.0) as usize
    }
}

/// Look up a problem with its default parameters.
pub fn problem(name: &str) -> Result<ProblemDef> {
    problem_with_params(name, &BTreeMap::new())
}

/// Look up a problem and override named parameters.
///
/// `log_example` and `sqrt_example` take no parameters. `tumor` accepts
/// `r1, r2, K, b, a, alpha` and the initial populations `x_init`, `y_init`
/// at `t = t0` (default 1).
pub fn problem_with_params(name: &str, overrides: &BTreeMap<String, f64>) -> Result<ProblemDef> {
    match name {
        "log_example" => {
            reject_params(name, overrides)?;
            log_example()
        }
        "sqrt_example" => {
            reject_params(name, overrides)?;
            sqrt_example()
        }
        "tumor" => tumor(overrides),
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}

fn reject_params(name: &str, overrides: &BTreeMap<String, f64>) -> Result<()> {
    match overrides.keys().next() {
        Some(k) => Err(Error::InvalidArgument(format!("{name} has no parameter `{k}`"))),
        None => Ok(()),
    }
}

/// `y' = 1 - 1/x`, `y(1) = 1`; `y = x - ln x`.
fn log_example() -> Result<ProblemDef> {
    let ivp = IvpSpec::new(
        RhsLog::new(1, |x, y, out| out[0] = (x - 1.0) / y[0]),
        1.0,
        vec![1.0],
    )?
    .with_ordinary(OrdinaryRhs::new(1, |x, _, out| out[0] = 1.0 - 1.0 / x))?
    .with_exact(|x| vec![x - x.ln()]);
    Ok(ProblemDef {
        name: "log_example".into(),
        ivp,
        default_h: 0.5,
        default_steps: 6,
        params: BTreeMap::new(),
        report_points: (0..=6).map(|k| 1.0 + 0.5 * k as f64).collect(),
        reference_h: None,
    })
}

/// `y' = 1/(2y)`, `y(4) = √5`; `y = √(1+x)`.
fn sqrt_example() -> Result<ProblemDef> {
    let ivp = IvpSpec::new(
        RhsLog::new(1, |x, y, out| out[0] = x / (2.0 * y[0] * y[0])),
        4.0,
        vec![5f64.sqrt()],
    )?
    .with_ordinary(OrdinaryRhs::new(1, |_, y, out| out[0] = 1.0 / (2.0 * y[0])))?
    .with_exact(|x| vec![(1.0 + x).sqrt()]);
    Ok(ProblemDef {
        name: "sqrt_example".into(),
        ivp,
        default_h: 1.0,
        default_steps: 6,
        params: BTreeMap::new(),
        report_points: (4..=10).map(f64::from).collect(),
        reference_h: None,
    })
}

const TUMOR_KEYS: [&str; 9] = ["r1", "r2", "K", "b", "a", "alpha", "x_init", "y_init", "t0"];

/// Uninfected (`x`) and infected (`y`) tumor cells under oncolytic virus
/// therapy:
///
/// ```text
/// x' = r1 x (1 - (x+y)/K) - b x y / (x+y+a)
/// y' = r2 y (1 - (x+y)/K) + b x y / (x+y+a) - alpha y
/// ```
///
/// The bigeometric form carries `t` times the per-capita rates.
fn tumor(overrides: &BTreeMap<String, f64>) -> Result<ProblemDef> {
    let mut params: BTreeMap<String, f64> = [
        ("r1", 40.0),
        ("r2", 2.0),
        ("K", 100.0),
        ("b", 0.02),
        ("a", 0.05),
        ("alpha", 0.03),
        // x(t0) is not part of the published setup; 10 is a documented choice.
        ("x_init", 10.0),
        ("y_init", 0.1),
        ("t0", 1.0),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    for (k, v) in overrides {
        if !TUMOR_KEYS.contains(&k.as_str()) {
            return Err(Error::InvalidArgument(format!(
                "tumor has no parameter `{k}` (expected one of {})",
                TUMOR_KEYS.join(", ")
            )));
        }
        params.insert(k.clone(), *v);
    }
    for (k, v) in &params {
        if !(*v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "tumor parameter {k} = {v} must be finite and non-negative"
            )));
        }
    }
    let p = |k: &str| params[k];
    let (r1, r2, cap, b, a, alpha) = (p("r1"), p("r2"), p("K"), p("b"), p("a"), p("alpha"));
    if cap <= 0.0 {
        return Err(Error::InvalidArgument("carrying capacity K must be positive".into()));
    }
    let rhs_log = RhsLog::new(2, move |t, v, out| {
        let (x, y) = (v[0], v[1]);
        let crowd = 1.0 - (x + y) / cap;
        let contact = b / (x + y + a);
        out[0] = t * (r1 * crowd - contact * y);
        out[1] = t * (r2 * crowd + contact * x - alpha);
    });
    let rhs_ordinary = OrdinaryRhs::new(2, move |_, v, out| {
        let (x, y) = (v[0], v[1]);
        let crowd = 1.0 - (x + y) / cap;
        let infection = b * x * y / (x + y + a);
        out[0] = r1 * x * crowd - infection;
        out[1] = r2 * y * crowd + infection - alpha * y;
    });
    let t0 = p("t0");
    let ivp = IvpSpec::new(rhs_log, t0, vec![p("x_init"), p("y_init")])?.with_ordinary(rhs_ordinary)?;
    let default_h = 0.091;
    let horizon = 1000.0;
    let mut report_points = vec![t0];
    report_points.extend((1..=10).map(|k| 100.0 * k as f64).filter(|t| *t > t0));
    let default_steps = ((horizon - t0) / default_h - 1e-9).ceil() as usize;
    Ok(ProblemDef {
        name: "tumor".into(),
        ivp,
        default_h,
        default_steps,
        params,
        report_points,
        reference_h: Some(TUMOR_REFERENCE_H),
    })
}

/// `|y_num - y_exact| / |y_exact|` at every trajectory point, taking the
/// largest component error for systems.
pub fn exact_error(def: &ProblemDef, traj: &Trajectory) -> Result<Vec<(f64, f64)>> {
    let exact = def.ivp.exact().ok_or_else(|| {
        Error::InvalidArgument(format!("problem {} has no exact solution", def.name))
    })?;
    Ok(traj
        .points
        .iter()
        .map(|p| {
            let reference = exact(p.x);
            let err = p
                .y
                .iter()
                .zip(&reference)
                .map(|(num, ex)| relative_error(*num, *ex))
                .fold(0.0, f64::max);
            (p.x, err)
        })
        .collect())
}

/// `|num - exact| / |exact|`; zero when both vanish.
pub fn relative_error(num: f64, exact: f64) -> f64 {
    let diff = (num - exact).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / exact.abs()
    }
}
