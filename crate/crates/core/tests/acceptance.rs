//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use bigeo::bench::{convergence_study, log_log_slope, run_table, timed_solve, BenchReport};
use bigeo::calculus::{bg_derivative_stack, geometric_from_bigeometric, ScalarFn, DEFAULT_H0};
use bigeo::problems::{problem, problem_with_params, ProblemDef};
use bigeo::solvers::{solve, BgTableau, IvpSpec, Method, RhsLog, RootGuardConfig};
use bigeo::stirling::stirling_log_series;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

struct Outcome {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self {
            pass,
            detail,
            notes: Vec::new(),
        }
    }

    fn note(mut self, s: String) -> Self {
        self.notes.push(s);
        self
    }
}

const LOG_EXAMPLE_X: [f64; 6] = [1.5, 2.0, 2.5, 3.0, 3.5, 4.0];
const LOG_EXAMPLE_Y: [f64; 6] = [1.10029, 1.31299, 1.58865, 1.90483, 2.24927, 2.61451];
const LOG_EXAMPLE_ERR: [f64; 6] = [0.00525979, 0.00469842, 0.0031184, 0.00181087, 0.000905399, 0.000307448];

const SQRT_EXAMPLE_X: [f64; 6] = [5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
const SQRT_EXAMPLE_Y: [f64; 6] = [2.44953, 2.64582, 2.82851, 3.0001, 3.16239, 3.31674];
const SQRT_EXAMPLE_ERR: [f64; 6] = [1.75e-5, 2.58e-5, 3.03e-5, 3.29e-5, 3.45e-5, 3.55e-5];

const LADDER: [f64; 4] = [0.5, 0.25, 0.125, 0.0625];

fn table(def: &ProblemDef, method: Method, h: f64, n: usize, points: &[f64]) -> BenchReport {
    run_table(def, method, &method.default_tableau(), h, n, points, &RootGuardConfig::default()).unwrap()
}

/// Worst absolute value and relative-error mismatch against a published column.
fn compare(report: &BenchReport, xs: &[f64], ys: &[f64], errs: &[f64]) -> (f64, f64) {
    let mut dy = 0.0f64;
    let mut de = 0.0f64;
    for ((x, y), e) in xs.iter().zip(ys).zip(errs) {
        let row = report.row_at(*x).unwrap();
        dy = dy.max((row.y_num[0] - y).abs());
        de = de.max((row.rel_err[0] - e).abs());
    }
    (dy, de)
}

fn criterion_1() -> Outcome {
    let def = problem("log_example").unwrap();
    let report = table(&def, Method::Brk4, 0.5, 6, &LOG_EXAMPLE_X);
    let (dy, de) = compare(&report, &LOG_EXAMPLE_X, &LOG_EXAMPLE_Y, &LOG_EXAMPLE_ERR);
    let mut times: Vec<f64> = (0..5).map(|_| table(&def, Method::Brk4, 0.5, 6, &LOG_EXAMPLE_X).wall_time).collect();
    times.sort_by(f64::total_cmp);
    let t = times[2];
    Outcome::new(
        dy <= 5e-5 && de <= 1e-6 && t < 1e-3,
        format!("max |dy| = {dy:.2e} (tol 5e-5), max |d rel err| = {de:.2e} (tol 1e-6), solve {t:.2e} s (< 1e-3)"),
    )
}

fn criterion_2() -> Outcome {
    let def = problem("sqrt_example").unwrap();
    let report = table(&def, Method::Brk4, 1.0, 6, &SQRT_EXAMPLE_X);
    let (dy, de) = compare(&report, &SQRT_EXAMPLE_X, &SQRT_EXAMPLE_Y, &SQRT_EXAMPLE_ERR);
    let at = |x: f64| report.row_at(x).unwrap().y_num[0];
    Outcome::new(
        dy <= 5e-5 && de <= 2e-6,
        format!("max |dy| = {dy:.2e} (tol 5e-5), max |d rel err| = {de:.2e} (tol 2e-6)"),
    )
    .note(format!(
        "y(5) = {:.6} (published 2.44953), y(10) = {:.6} (published 3.31674)",
        at(5.0),
        at(10.0)
    ))
}

fn criterion_3() -> Outcome {
    let def = problem("log_example").unwrap();
    let report = table(&def, Method::Brk4, 0.05, 60, &[4.0]);
    let row = &report.rows[0];
    let (y, e) = (row.y_num[0], row.rel_err[0]);
    Outcome::new(
        (y - 2.613727).abs() <= 5e-7 && (e - 8.19e-6).abs() <= 5e-7,
        format!("y(4) = {y:.7}, relative error = {e:.6e} (target 2.613727, 8.19e-6 +- 5e-7)"),
    )
}

/// Classical RK4 in `theta = ln x` on `d ln y / d theta = ln F`.
fn log_consistent_brk4(ivp: &IvpSpec, h: f64, n: usize) -> f64 {
    let rhs: &RhsLog = ivp.rhs_log();
    let (mut x, mut y) = (ivp.x0(), ivp.y0()[0]);
    for _ in 0..n {
        let l = (1.0 + h / x).ln();
        let xm = x * (0.5 * l).exp();
        let g = |x: f64, y: f64| rhs.eval(x, &[y]).unwrap()[0];
        let k1 = g(x, y);
        let k2 = g(xm, y * (0.5 * l * k1).exp());
        let k3 = g(xm, y * (0.5 * l * k2).exp());
        let k4 = g(x + h, y * (l * k3).exp());
        y *= (l * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0).exp();
        x += h;
    }
    y
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, end) in [("log_example", 4.0), ("sqrt_example", 10.0)] {
        let def = problem(name).unwrap();
        for (method, lo, hi) in [
            (Method::Brk4, 3.7, 4.3),
            (Method::Brk2, 1.7, 2.3),
            (Method::Rk4, 3.7, 4.3),
        ] {
            let s = convergence_study(&def, method, &method.default_tableau(), &LADDER, end).unwrap();
            let ok = s.slope >= lo && s.slope <= hi;
            pass &= ok;
            parts.push(format!("{name}/{method} {:.2}{}", s.slope, if ok { "" } else { "!" }));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < 1.0;
    let mut out = Outcome::new(pass, format!("slopes [{}], {elapsed:.2} s", parts.join(", ")));

    let fine = [0.05, 0.025, 0.0125, 0.00625];
    for (name, end) in [("log_example", 4.0), ("sqrt_example", 10.0)] {
        let def = problem(name).unwrap();
        let exact = def.ivp.exact().unwrap()(end)[0];
        let errs: Vec<f64> = LADDER
            .iter()
            .map(|h| {
                let n = ((end - def.ivp.x0()) / h).round() as usize;
                (log_consistent_brk4(&def.ivp, *h, n) - exact).abs() / exact
            })
            .collect();
        let fine_brk4 = convergence_study(&def, Method::Brk4, &BgTableau::classical(), &fine, end).unwrap();
        let fine_brk2 = convergence_study(&def, Method::Brk2, &BgTableau::euler(), &fine, end).unwrap();
        out = out.note(format!(
            "{name}: log-abscissa stage variant slope {:.2}; h 0.05..0.00625 slopes BRK4 {:.2}, BRK2 {:.2}",
            log_log_slope(&LADDER, &errs).unwrap(),
            fine_brk4.slope,
            fine_brk2.slope
        ));
    }
    out
}

fn run_cases<S: proptest::strategy::Strategy>(
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases: 100,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    for (name, rule) in common::RULES {
        let res = run_cases(common::samples(), |s| {
            let (lhs, rhs) = rule(s);
            if common::rel(lhs, rhs) < 1e-6 {
                Ok(())
            } else {
                Err(TestCaseError::fail(format!("{lhs} vs {rhs}")))
            }
        });
        if let Err(e) = res {
            failures.push(format!("{name}: {e}"));
        }
    }
    let mut worst_geo = 0.0f64;
    for case in &common::GEO_CASES {
        let f = ScalarFn::new(case.f);
        for &x in &common::GEO_POINTS {
            let stack = bg_derivative_stack(&f, x, 3, DEFAULT_H0).unwrap();
            for n in 1..=3 {
                let got = geometric_from_bigeometric(&stack, n).unwrap();
                worst_geo = worst_geo.max(common::rel(got, (case.log_derivative)(n, x).exp()));
            }
        }
    }
    let mut worst_series = 0.0f64;
    for m in 1..=3usize {
        for u in [-0.5, -0.25, 0.05, 0.1, 0.25, 0.4, 0.5f64] {
            let target = u.ln_1p().powi(m as i32) / (1..=m).product::<usize>() as f64;
            worst_series = worst_series.max((stirling_log_series(m, u, 30).unwrap() - target).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && worst_geo <= 1e-5 && worst_series <= 1e-9 && elapsed < 1.0;
    let mut out = Outcome::new(
        pass,
        format!(
            "7 rules x 100 samples: {} failing; geometric max rel {worst_geo:.1e} (1e-5); series max abs {worst_series:.1e} (1e-9); {elapsed:.2} s",
            failures.len()
        ),
    );
    for f in failures {
        out = out.note(f);
    }
    out
}

fn criterion_6() -> Outcome {
    let mut worst = 0.0f64;
    for k in [-1.3, 0.5, 1.7, 3.0] {
        for (x0, h) in [(1.0, 0.5), (2.0, 1.0), (4.0, 0.25)] {
            let rhs = RhsLog::new(1, move |_, _, out| out[0] = k);
            let ivp = IvpSpec::new(rhs, x0, vec![1.5]).unwrap();
            for m in [Method::Brk2, Method::Brk4] {
                let t = solve(&ivp, m, &m.default_tableau(), h, 12, &RootGuardConfig::disabled()).unwrap();
                let last = t.last();
                let exact = 1.5 * (last.x / x0).powf(k);
                worst = worst.max(common::rel(last.y[0], exact));
            }
        }
    }
    Outcome::new(worst < 1e-12, format!("max endpoint relative error {worst:.1e} (< 1e-12), h/x0 up to 0.5"))
}

fn tumor_deviation(def: &ProblemDef, method: Method, h: f64, points: &[f64]) -> BenchReport {
    let n = def.steps_to(*points.last().unwrap(), h);
    table(def, method, h, n, points)
}

fn max_y_deviation(r: &BenchReport) -> f64 {
    r.rows.iter().map(|row| (row.y_num[1] - row.y_ref[1]).abs()).fold(0.0, f64::max)
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let def = problem("tumor").unwrap();
    let points: Vec<f64> = (1..=7).map(|i| 100.0 * i as f64).collect();
    let brk4 = tumor_deviation(&def, Method::Brk4, 0.091, &points);
    let rk4 = tumor_deviation(&def, Method::Rk4, 0.0705, &[300.0]);
    let dev = max_y_deviation(&brk4);
    let at300 = |r: &BenchReport| {
        let row = r.row_at(300.0).unwrap();
        (row.y_num[1] - row.y_ref[1]).abs()
    };
    let (b300, r300) = (at300(&brk4), at300(&rk4));
    let elapsed = start.elapsed().as_secs_f64();
    let pass = dev <= 1.0 && r300 >= 1.5 * b300 && elapsed < 30.0;
    let mut out = Outcome::new(
        pass,
        format!(
            "alpha = {}: BRK4 max |dy| t=100..700 {dev:.3e} (<= 1.0); at t=300 RK4 {r300:.3e} vs BRK4 {b300:.3e} (ratio >= 1.5); {elapsed:.1} s",
            def.param("alpha").unwrap()
        ),
    );
    let mut slow = BTreeMap::new();
    slow.insert("alpha".to_string(), 0.003);
    let plateau = problem_with_params("tumor", &slow).unwrap();
    let b = tumor_deviation(&plateau, Method::Brk4, 0.091, &points);
    let r = tumor_deviation(&plateau, Method::Rk4, 0.0705, &[300.0]);
    out = out.note(format!(
        "alpha = 0.003 (plateau run): BRK4 max |dy| {:.3}, y_ref(700) = {:.4}, at t=300 RK4 {:.3} vs BRK4 {:.3}",
        max_y_deviation(&b),
        b.row_at(700.0).unwrap().y_ref[1],
        at300(&r),
        at300(&b)
    ));
    out
}

fn criterion_8() -> Outcome {
    let def = problem("sqrt_example").unwrap();
    let report = table(&def, Method::Rk4, 1.0, 6, &[5.0, 10.0]);
    let y5 = report.row_at(5.0).unwrap().y_num[0];
    Outcome::new(
        (y5 - 2.44949).abs() <= 1e-5,
        format!("RK4 y(5) = {y5:.7} (2.44949 +- 1e-5)"),
    )
    .note(format!(
        "published RK4 value 2.44037 differs by {:.2e}; RK4 y(10) = {:.6} vs published 3.28202",
        (y5 - 2.44037).abs(),
        report.row_at(10.0).unwrap().y_num[0]
    ))
}

fn criterion_9() -> Outcome {
    let def = problem("tumor").unwrap();
    let points: Vec<f64> = (1..=10).map(|i| 100.0 * i as f64).collect();
    let end = 1000.0;
    let (nb, nr) = (def.steps_to(end, 0.091), def.steps_to(end, 0.0705));
    let (_, tb) = timed_solve(&def, Method::Brk4, &BgTableau::classical(), 0.091, nb, 5).unwrap();
    let (_, tr) = timed_solve(&def, Method::Rk4, &BgTableau::classical(), 0.0705, nr, 5).unwrap();
    let db = max_y_deviation(&tumor_deviation(&def, Method::Brk4, 0.091, &points));
    let dr = max_y_deviation(&tumor_deviation(&def, Method::Rk4, 0.0705, &points));
    let ratio = tb / tr;
    Outcome::new(
        (ratio - 1.0).abs() <= 0.25 && db < dr,
        format!(
            "median wall time BRK4 {tb:.3e} s ({nb} steps) vs RK4 {tr:.3e} s ({nr} steps), ratio {ratio:.2} (0.75..1.25); max |dy| t=100..1000 BRK4 {db:.3e} vs RK4 {dr:.3e}"
        ),
    )
    .note(format!(
        "build profile: {}",
        if cfg!(debug_assertions) { "debug" } else { "release" }
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("log_example BRK4 h = 0.5 column", criterion_1),
        ("sqrt_example BRK4 h = 1 column", criterion_2),
        ("h = 0.05 refinement at x = 4", criterion_3),
        ("convergence orders", criterion_4),
        ("calculus property suite", criterion_5),
        ("power-law exactness", criterion_6),
        ("tumor model consistency", criterion_7),
        ("RK4 oracle on sqrt_example", criterion_8),
        ("tumor timing at matched accuracy", criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let out = run();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {tag}: {name}: {}", i + 1, out.detail);
        for n in &out.notes {
            println!("    {n}");
        }
        if !out.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
