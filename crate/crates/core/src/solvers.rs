//! Bigeometric Runge-Kutta methods.
//!
//! A bigeometric initial value problem `y^π(x) = F(x, y)` is stored through
//! `g = ln F`, so that every stage is a linear combination of `g` values:
//!
//! ```text
//! y_i     = y ⊙ exp((h/x) Σ_j A_ij g_j)
//! g_i     = g(x + c_i h, y_i)
//! y(x+h) ≈ y ⊙ exp(ln(1 + h/x) Σ_i w_i g_i)
//! ```
//!
//! The ordinary form `y' = y g / x` is used by the classical RK4 reference and
//! by the root guard, which steps across zeros of the solution where the
//! bigeometric derivative does not exist.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance applied to every order condition.
pub const ORDER_CONDITION_TOL: f64 = 1e-12;

/// Default threshold below which the root guard takes over.
pub const DEFAULT_GUARD_EPSILON: f64 = 1e-8;

type VectorField = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;

/// Logarithm of a bigeometric right-hand side: component `i` of the output is
/// `ln F_i(x, y)`.
#[derive(Clone)]
pub struct RhsLog {
    dim: usize,
    g: Arc<VectorField>,
}

impl RhsLog {
    /// `g` writes `ln F(x, y)` into its output slice.
    pub fn new<G>(dim: usize, g: G) -> Self
    where
        G: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        assert!(dim > 0, "right-hand side dimension must be positive");
        Self { dim, g: Arc::new(g) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: f64, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, y.len())?;
        let mut out = vec![0.0; self.dim];
        (self.g)(x, y, &mut out);
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::Domain(format!("ln F is not finite at x = {x}, y = {y:?}")))
        }
    }

    #[inline]
    fn eval_into(&self, x: f64, y: &[f64], out: &mut [f64]) -> bool {
        (self.g)(x, y, out);
        out.iter().all(|v| v.is_finite())
    }
}

impl fmt::Debug for RhsLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RhsLog").field("dim", &self.dim).finish_non_exhaustive()
    }
}

/// Ordinary right-hand side `y' = f(x, y)`.
#[derive(Clone)]
pub struct OrdinaryRhs {
    dim: usize,
    f: Arc<VectorField>,
}

impl OrdinaryRhs {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        assert!(dim > 0, "right-hand side dimension must be positive");
        Self { dim, f: Arc::new(f) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: f64, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, y.len())?;
        let mut out = vec![0.0; self.dim];
        (self.f)(x, y, &mut out);
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::Domain(format!("f is not finite at x = {x}, y = {y:?}")))
        }
    }

    #[inline]
    fn eval_into(&self, x: f64, y: &[f64], out: &mut [f64]) -> bool {
        (self.f)(x, y, out);
        out.iter().all(|v| v.is_finite())
    }
}

impl fmt::Debug for OrdinaryRhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OrdinaryRhs").field("dim", &self.dim).finish_non_exhaustive()
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "state has {got} components, right-hand side expects {expected}"
        )))
    }
}

/// `g(x, y) = x f(x, y) / y`, i.e. `F = exp(x y'/y)`.
///
/// A zero component of `y` makes the result non-finite, which evaluation
/// rejects.
pub fn convert_ordinary_to_bg(f: &OrdinaryRhs) -> RhsLog {
    let inner = f.f.clone();
    RhsLog::new(f.dim, move |x, y, out| {
        inner(x, y, out);
        for (o, yi) in out.iter_mut().zip(y) {
            *o = if *yi == 0.0 { f64::NAN } else { x * *o / yi };
        }
    })
}

/// `f(x, y) = y g(x, y) / x`. Undefined at `x = 0`.
pub fn convert_bg_to_ordinary(rhs: &RhsLog) -> OrdinaryRhs {
    let inner = rhs.g.clone();
    OrdinaryRhs::new(rhs.dim, move |x, y, out| {
        inner(x, y, out);
        for (o, yi) in out.iter_mut().zip(y) {
            *o = if x == 0.0 { f64::NAN } else { yi * *o / x };
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableauOrder {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "4")]
    Four,
}

/// Parameters of a bigeometric Runge-Kutta scheme.
///
/// ```text
///  0  |
///  p  | q
///  p1 | q1  q2
///  p2 | q3  q4  q5
/// ----+----------------
///     | a   b   c   d
/// ```
///
/// The second-order scheme uses `a, b, p, q` only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BgTableau {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub p: f64,
    pub q: f64,
    pub p1: f64,
    pub p2: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub q5: f64,
    pub order: TableauOrder,
}

const TABLEAU_KEYS: [&str; 13] = [
    "a", "b", "c", "d", "p", "q", "p1", "p2", "q1", "q2", "q3", "q4", "q5",
];

impl BgTableau {
    /// Weights 1/6, 1/3, 1/3, 1/6 with midpoint stages.
    pub fn classical() -> Self {
        Self {
            a: 1.0 / 6.0,
            b: 1.0 / 3.0,
            c: 1.0 / 3.0,
            d: 1.0 / 6.0,
            p: 0.5,
            q: 0.5,
            p1: 0.5,
            p2: 1.0,
            q1: 0.0,
            q2: 0.5,
            q3: 0.0,
            q4: 0.0,
            q5: 1.0,
            order: TableauOrder::Four,
        }
    }

    /// Second-order scheme with `a = b = 1/2`, `p = q = 1`.
    pub fn euler() -> Self {
        Self::order2(0.5, 0.5, 1.0, 1.0)
    }

    /// Unvalidated second-order parameter set.
    pub fn order2(a: f64, b: f64, p: f64, q: f64) -> Self {
        Self {
            a,
            b,
            c: 0.0,
            d: 0.0,
            p,
            q,
            p1: 0.0,
            p2: 0.0,
            q1: 0.0,
            q2: 0.0,
            q3: 0.0,
            q4: 0.0,
            q5: 0.0,
            order: TableauOrder::Two,
        }
    }

    /// Validated constructor.
    pub fn checked(self) -> Result<Self> {
        let report = validate_tableau(&self);
        if report.passed() {
            Ok(self)
        } else {
            Err(Error::Tableau(report.failure_summary()))
        }
    }

    /// Parse `key=value` lines (`#` starts a comment). An optional `order`
    /// key selects 2 or 4 (default 4). Order 4 needs all 13 parameters;
    /// order 2 needs `a`, `b`, `p` and `q`.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut values: [Option<f64>; 13] = [None; 13];
        let mut order = TableauOrder::Four;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Tableau(format!("line {}: expected key=value, got `{line}`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "order" {
                order = match value {
                    "2" => TableauOrder::Two,
                    "4" => TableauOrder::Four,
                    other => {
                        return Err(Error::Tableau(format!("order must be 2 or 4, got `{other}`")))
                    }
                };
                continue;
            }
            let slot = TABLEAU_KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| Error::Tableau(format!("unknown tableau key `{key}`")))?;
            let parsed: f64 = value.parse().map_err(|_| {
                Error::Tableau(format!("line {}: `{value}` is not a number", lineno + 1))
            })?;
            if values[slot].replace(parsed).is_some() {
                return Err(Error::Tableau(format!("duplicate key `{key}`")));
            }
        }
        let required: &[&str] = match order {
            TableauOrder::Four => &TABLEAU_KEYS,
            TableauOrder::Two => &["a", "b", "p", "q"],
        };
        let get = |key: &str| -> Result<f64> {
            let slot = TABLEAU_KEYS.iter().position(|k| *k == key).unwrap();
            match values[slot] {
                Some(v) => Ok(v),
                None if required.contains(&key) => {
                    Err(Error::Tableau(format!("missing tableau key `{key}`")))
                }
                None => Ok(0.0),
            }
        };
        Ok(Self {
            a: get("a")?,
            b: get("b")?,
            c: get("c")?,
            d: get("d")?,
            p: get("p")?,
            q: get("q")?,
            p1: get("p1")?,
            p2: get("p2")?,
            q1: get("q1")?,
            q2: get("q2")?,
            q3: get("q3")?,
            q4: get("q4")?,
            q5: get("q5")?,
            order,
        })
    }

    fn stages(&self) -> StageCoefficients {
        match self.order {
            TableauOrder::Two => StageCoefficients {
                count: 2,
                nodes: [0.0, self.p, 0.0, 0.0],
                coupling: [[0.0; 3], [self.q, 0.0, 0.0], [0.0; 3], [0.0; 3]],
                weights: [self.a, self.b, 0.0, 0.0],
            },
            TableauOrder::Four => StageCoefficients {
                count: 4,
                nodes: [0.0, self.p, self.p1, self.p2],
                coupling: [
                    [0.0; 3],
                    [self.q, 0.0, 0.0],
                    [self.q1, self.q2, 0.0],
                    [self.q3, self.q4, self.q5],
                ],
                weights: [self.a, self.b, self.c, self.d],
            },
        }
    }
}

impl Default for BgTableau {
    fn default() -> Self {
        Self::classical()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderCondition {
    pub name: &'static str,
    /// `|lhs - rhs|`.
    pub residual: f64,
}

impl OrderCondition {
    pub fn holds(&self) -> bool {
        self.residual < ORDER_CONDITION_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableauReport {
    pub order: TableauOrder,
    pub conditions: Vec<OrderCondition>,
}

impl TableauReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(OrderCondition::holds)
    }

    pub fn condition(&self, name: &str) -> Option<&OrderCondition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &OrderCondition> {
        self.conditions.iter().filter(|c| !c.holds())
    }

    fn failure_summary(&self) -> String {
        self.failures()
            .map(|c| format!("{} (residual {:.3e})", c.name, c.residual))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Evaluate the order conditions of `t`. Never fails; the report carries
/// the residual of every condition.
pub fn validate_tableau(t: &BgTableau) -> TableauReport {
    let cond = |name, lhs: f64, rhs: f64| OrderCondition {
        name,
        residual: (lhs - rhs).abs(),
    };
    let conditions = match t.order {
        TableauOrder::Two => vec![
            cond("a+b=1", t.a + t.b, 1.0),
            cond("p*b=1/2", t.p * t.b, 0.5),
            cond("q*b=1/2", t.q * t.b, 0.5),
        ],
        TableauOrder::Four => vec![
            cond("p=q", t.p, t.q),
            cond("p1=q1+q2", t.p1, t.q1 + t.q2),
            cond("p2=q3+q4+q5", t.p2, t.q3 + t.q4 + t.q5),
            cond("a+b+c+d=1", t.a + t.b + t.c + t.d, 1.0),
            cond("b*p+c*p1+d*p2=1/2", t.b * t.p + t.c * t.p1 + t.d * t.p2, 0.5),
            cond(
                "b*p^2+c*p1^2+d*p2^2=1/3",
                t.b * t.p * t.p + t.c * t.p1 * t.p1 + t.d * t.p2 * t.p2,
                1.0 / 3.0,
            ),
        ],
    };
    TableauReport {
        order: t.order,
        conditions,
    }
}

#[derive(Debug, Clone, Copy)]
struct StageCoefficients {
    count: usize,
    nodes: [f64; 4],
    coupling: [[f64; 3]; 4],
    weights: [f64; 4],
}

/// Scratch buffers so the fixed-step loop does not allocate per stage.
#[derive(Debug, Clone)]
struct Workspace {
    stages: [Vec<f64>; 4],
    scratch: Vec<f64>,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        Self {
            stages: std::array::from_fn(|_| vec![0.0; dim]),
            scratch: vec![0.0; dim],
        }
    }
}

fn check_bg_point(x: f64, y: &[f64], h: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("bigeometric step needs x > 0, got {x}")));
    }
    if !(1.0 + h / x > 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!("1 + h/x must be positive, got h = {h}, x = {x}")));
    }
    if let Some(v) = y.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Domain(format!("bigeometric step needs y > 0, got component {v}")));
    }
    Ok(())
}

/// One bigeometric step with `ws.stages[0]` already holding `g(x, y)`.
/// On failure returns the failing stage index (`count` for the update).
fn bg_step_prepared(
    rhs: &RhsLog,
    coeffs: &StageCoefficients,
    x: f64,
    y: &[f64],
    h: f64,
    ws: &mut Workspace,
    out: &mut [f64],
) -> std::result::Result<(), (usize, f64)> {
    let hx = h / x;
    for i in 1..coeffs.count {
        let (done, rest) = ws.stages.split_at_mut(i);
        for (k, slot) in ws.scratch.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, g) in done.iter().enumerate() {
                s += coeffs.coupling[i][j] * g[k];
            }
            *slot = y[k] * (hx * s).exp();
        }
        let xi = x + coeffs.nodes[i] * h;
        if !rhs.eval_into(xi, &ws.scratch, &mut rest[0]) {
            return Err((i, xi));
        }
    }
    let l = hx.ln_1p();
    for (k, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for i in 0..coeffs.count {
            s += coeffs.weights[i] * ws.stages[i][k];
        }
        *o = y[k] * (l * s).exp();
    }
    if out.iter().all(|v| v.is_finite() && *v > 0.0) {
        Ok(())
    } else {
        Err((coeffs.count, x + h))
    }
}

fn bg_step(rhs: &RhsLog, t: &BgTableau, x: f64, y: &[f64], h: f64) -> Result<Vec<f64>> {
    check_dim(rhs.dim, y.len())?;
    check_bg_point(x, y, h)?;
    let mut ws = Workspace::new(rhs.dim);
    if !rhs.eval_into(x, y, &mut ws.stages[0]) {
        return Err(Error::StageFailure { stage: 0, x });
    }
    let mut out = vec![0.0; rhs.dim];
    bg_step_prepared(rhs, &t.stages(), x, y, h, &mut ws, &mut out)
        .map_err(|(stage, x)| Error::StageFailure { stage, x })?;
    Ok(out)
}

/// Second-order bigeometric Runge-Kutta step from `(x, y)` to `x + h`.
pub fn brk2_step(rhs: &RhsLog, t: &BgTableau, x: f64, y: &[f64], h: f64) -> Result<Vec<f64>> {
    if t.order != TableauOrder::Two {
        return Err(Error::Tableau("brk2_step needs an order-2 tableau".into()));
    }
    bg_step(rhs, t, x, y, h)
}

/// Fourth-order-ansatz bigeometric Runge-Kutta step from `(x, y)` to `x + h`.
pub fn brk4_step(rhs: &RhsLog, t: &BgTableau, x: f64, y: &[f64], h: f64) -> Result<Vec<f64>> {
    if t.order != TableauOrder::Four {
        return Err(Error::Tableau("brk4_step needs an order-4 tableau".into()));
    }
    bg_step(rhs, t, x, y, h)
}

#[derive(Debug, Clone)]
struct Rk4Workspace {
    k: [Vec<f64>; 4],
    scratch: Vec<f64>,
}

impl Rk4Workspace {
    fn new(dim: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            scratch: vec![0.0; dim],
        }
    }
}

fn rk4_step_into(
    f: &OrdinaryRhs,
    x: f64,
    y: &[f64],
    h: f64,
    ws: &mut Rk4Workspace,
    out: &mut [f64],
) -> std::result::Result<(), (usize, f64)> {
    let [k1, k2, k3, k4] = &mut ws.k;
    if !f.eval_into(x, y, k1) {
        return Err((0, x));
    }
    let xm = x + 0.5 * h;
    for (s, (yi, ki)) in ws.scratch.iter_mut().zip(y.iter().zip(k1.iter())) {
        *s = yi + 0.5 * h * ki;
    }
    if !f.eval_into(xm, &ws.scratch, k2) {
        return Err((1, xm));
    }
    for (s, (yi, ki)) in ws.scratch.iter_mut().zip(y.iter().zip(k2.iter())) {
        *s = yi + 0.5 * h * ki;
    }
    if !f.eval_into(xm, &ws.scratch, k3) {
        return Err((2, xm));
    }
    for (s, (yi, ki)) in ws.scratch.iter_mut().zip(y.iter().zip(k3.iter())) {
        *s = yi + h * ki;
    }
    if !f.eval_into(x + h, &ws.scratch, k4) {
        return Err((3, x + h));
    }
    for (i, o) in out.iter_mut().enumerate() {
        *o = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if out.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err((4, x + h))
    }
}

/// Classical RK4 step `y + h/6 (k1 + 2k2 + 2k3 + k4)`.
pub fn rk4_reference_step(f: &OrdinaryRhs, x: f64, y: &[f64], h: f64) -> Result<Vec<f64>> {
    check_dim(f.dim, y.len())?;
    let mut ws = Rk4Workspace::new(f.dim);
    let mut out = vec![0.0; f.dim];
    rk4_step_into(f, x, y, h, &mut ws, &mut out)
        .map_err(|(stage, x)| Error::StageFailure { stage, x })?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Brk2,
    Brk4,
    Rk4,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Brk2, Method::Brk4, Method::Rk4];

    pub fn is_bigeometric(self) -> bool {
        matches!(self, Method::Brk2 | Method::Brk4)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Brk2 => "brk2",
            Method::Brk4 => "brk4",
            Method::Rk4 => "rk4",
        }
    }

    /// Tableau used when the caller does not supply one.
    pub fn default_tableau(self) -> BgTableau {
        match self {
            Method::Brk2 => BgTableau::euler(),
            Method::Brk4 | Method::Rk4 => BgTableau::classical(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "brk2" => Ok(Method::Brk2),
            "brk4" => Ok(Method::Brk4),
            "rk4" => Ok(Method::Rk4),
            other => Err(Error::InvalidArgument(format!(
                "unknown method `{other}` (expected brk2, brk4 or rk4)"
            ))),
        }
    }
}

pub type ExactSolution = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// `y^π = F(x, y)`, `y(x0) = y0` with `x0 > 0` and `y0 > 0`.
#[derive(Clone)]
pub struct IvpSpec {
    rhs_log: RhsLog,
    rhs_ordinary: Option<OrdinaryRhs>,
    x0: f64,
    y0: Vec<f64>,
    exact: Option<ExactSolution>,
}

impl IvpSpec {
    pub fn new(rhs_log: RhsLog, x0: f64, y0: Vec<f64>) -> Result<Self> {
        check_dim(rhs_log.dim, y0.len())?;
        if !(x0 > 0.0) || !x0.is_finite() {
            return Err(Error::Domain(format!("initial point x0 = {x0} must be positive")));
        }
        if let Some(v) = y0.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("initial value component {v} must be positive")));
        }
        Ok(Self {
            rhs_log,
            rhs_ordinary: None,
            x0,
            y0,
            exact: None,
        })
    }

    pub fn with_ordinary(mut self, f: OrdinaryRhs) -> Result<Self> {
        check_dim(self.rhs_log.dim, f.dim)?;
        self.rhs_ordinary = Some(f);
        Ok(self)
    }

    pub fn with_exact<E>(mut self, exact: E) -> Self
    where
        E: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        self.exact = Some(Arc::new(exact));
        self
    }

    pub fn dim(&self) -> usize {
        self.rhs_log.dim
    }

    pub fn rhs_log(&self) -> &RhsLog {
        &self.rhs_log
    }

    pub fn rhs_ordinary(&self) -> Option<&OrdinaryRhs> {
        self.rhs_ordinary.as_ref()
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    pub fn exact(&self) -> Option<&ExactSolution> {
        self.exact.as_ref()
    }

    /// The registered ordinary form, or the one derived from `ln F`.
    pub fn ordinary_form(&self) -> OrdinaryRhs {
        self.rhs_ordinary
            .clone()
            .unwrap_or_else(|| convert_bg_to_ordinary(&self.rhs_log))
    }
}

impl fmt::Debug for IvpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IvpSpec")
            .field("dim", &self.dim())
            .field("x0", &self.x0)
            .field("y0", &self.y0)
            .field("has_ordinary", &self.rhs_ordinary.is_some())
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

/// Hybrid fallback for solutions that approach or cross zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootGuardConfig {
    pub enabled: bool,
    pub epsilon: f64,
    /// Derive the ordinary form from `ln F` when the problem has none.
    pub allow_conversion: bool,
}

impl Default for RootGuardConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            epsilon: DEFAULT_GUARD_EPSILON,
            allow_conversion: true,
        }
    }
}

impl RootGuardConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub x: f64,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub h: f64,
    pub method: Method,
    /// Intervals advanced by the classical RK4 fallback.
    pub fallback_spans: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> &TrajectoryPoint {
        self.points.last().expect("a trajectory always holds its initial point")
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.x)
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.y[i]).collect()
    }

    /// Whether `x` lies inside a fallback span (end points included).
    pub fn in_fallback(&self, x: f64) -> bool {
        self.fallback_spans.iter().any(|(a, b)| x >= *a && x <= *b)
    }
}

/// Fixed-step march `x_k = x0 + k h`, `k = 0..=n_steps`.
///
/// For the bigeometric methods the root guard is consulted before every
/// step: when a component is below `guard.epsilon`, or the Euler predictor
/// `y_i (1 + h g_i / x)` of the ordinary form is not positive, two classical
/// RK4 steps cover `[x_k, x_k + 2h]` and the span is recorded.
pub fn solve(
    ivp: &IvpSpec,
    method: Method,
    tableau: &BgTableau,
    h: f64,
    n_steps: usize,
    guard: &RootGuardConfig,
) -> Result<Trajectory> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("step size h = {h} must be positive")));
    }
    let dim = ivp.dim();
    let x0 = ivp.x0;
    let mut points = Vec::with_capacity(n_steps + 1);
    points.push(TrajectoryPoint {
        x: x0,
        y: ivp.y0.clone(),
    });
    let mut fallback_spans: Vec<(f64, f64)> = Vec::new();
    let mut y = ivp.y0.clone();
    let mut next = vec![0.0; dim];

    let step_err = |step: usize| move |(stage, x): (usize, f64)| Error::StepFailure { step, stage, x };

    if method == Method::Rk4 {
        let f = ivp.ordinary_form();
        let mut ws = Rk4Workspace::new(dim);
        for k in 0..n_steps {
            let x = x0 + k as f64 * h;
            rk4_step_into(&f, x, &y, h, &mut ws, &mut next).map_err(step_err(k))?;
            std::mem::swap(&mut y, &mut next);
            points.push(TrajectoryPoint {
                x: x0 + (k + 1) as f64 * h,
                y: y.clone(),
            });
        }
        return Ok(Trajectory {
            points,
            h,
            method,
            fallback_spans,
        });
    }

    let expected = if method == Method::Brk2 {
        TableauOrder::Two
    } else {
        TableauOrder::Four
    };
    if tableau.order != expected {
        return Err(Error::Tableau(format!(
            "{method} needs an order-{} tableau",
            if expected == TableauOrder::Two { 2 } else { 4 }
        )));
    }
    let report = validate_tableau(tableau);
    if !report.passed() {
        return Err(Error::Tableau(report.failure_summary()));
    }
    let coeffs = tableau.stages();
    let rhs = &ivp.rhs_log;
    let mut ws = Workspace::new(dim);
    let mut fallback: Option<(OrdinaryRhs, Rk4Workspace)> = None;

    let mut k = 0;
    while k < n_steps {
        let x = x0 + k as f64 * h;
        let mut trigger = guard.enabled && y.iter().any(|v| *v < guard.epsilon);
        if !trigger {
            if y.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Domain(format!(
                    "step {k}: non-positive state {y:?} at x = {x} with the root guard disabled"
                )));
            }
            if !rhs.eval_into(x, &y, &mut ws.stages[0]) {
                return Err(Error::StepFailure { step: k, stage: 0, x });
            }
            let hx = h / x;
            trigger = guard.enabled && ws.stages[0].iter().any(|g| 1.0 + hx * g <= 0.0);
        }
        if trigger {
            if fallback.is_none() {
                let f = match (&ivp.rhs_ordinary, guard.allow_conversion) {
                    (Some(f), _) => f.clone(),
                    (None, true) => convert_bg_to_ordinary(rhs),
                    (None, false) => {
                        return Err(Error::Config(format!(
                            "root guard triggered at x = {x} but the problem has no ordinary form"
                        )))
                    }
                };
                fallback = Some((f, Rk4Workspace::new(dim)));
            }
            let (f, rk_ws) = fallback.as_mut().unwrap();
            let span = (n_steps - k).min(2);
            for s in 0..span {
                let xs = x0 + (k + s) as f64 * h;
                rk4_step_into(f, xs, &y, h, rk_ws, &mut next).map_err(step_err(k + s))?;
                std::mem::swap(&mut y, &mut next);
                points.push(TrajectoryPoint {
                    x: x0 + (k + s + 1) as f64 * h,
                    y: y.clone(),
                });
            }
            let end = x0 + (k + span) as f64 * h;
            match fallback_spans.last_mut() {
                Some(last) if last.1 == x => last.1 = end,
                _ => fallback_spans.push((x, end)),
            }
            k += span;
            continue;
        }
        if !(1.0 + h / x > 0.0) {
            return Err(Error::Domain(format!("1 + h/x must be positive at x = {x}")));
        }
        bg_step_prepared(rhs, &coeffs, x, &y, h, &mut ws, &mut next).map_err(step_err(k))?;
        std::mem::swap(&mut y, &mut next);
        points.push(TrajectoryPoint {
            x: x0 + (k + 1) as f64 * h,
            y: y.clone(),
        });
        k += 1;
    }
    Ok(Trajectory {
        points,
        h,
        method,
        fallback_spans,
    })
}

/// A single step of `method` from `(x, y)`; bigeometric methods fall back to
/// RK4 on the ordinary form when `y` is not positive.
pub fn step_once(
    ivp: &IvpSpec,
    method: Method,
    tableau: &BgTableau,
    x: f64,
    y: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    match method {
        Method::Brk2 | Method::Brk4 if y.iter().all(|v| *v > 0.0) => {
            bg_step(&ivp.rhs_log, tableau, x, y, h)
        }
        _ => rk4_reference_step(&ivp.ordinary_form(), x, y, h),
    }
}
