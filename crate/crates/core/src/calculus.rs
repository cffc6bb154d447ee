//! Bigeometric and geometric derivatives of positive scalar functions.
//!
//! The bigeometric derivative is `f^π(x) = exp(x (ln f)'(x))`. Because the
//! operator `x d/dx` is the derivative with respect to `ln x`, every quantity
//! here is handled as a logarithm and exponentiated only when returned.

use crate::stirling::StirlingTable;
use crate::{Error, Result};

/// Default relative half-width of the multiplicative difference stencil.
pub const DEFAULT_H0: f64 = 1e-5;

/// A positive function on an open interval `(lower, upper)` with `lower >= 0`.
#[derive(Clone)]
pub struct ScalarFn<F> {
    eval: F,
    lower: f64,
    upper: f64,
}

impl<F: Fn(f64) -> f64> ScalarFn<F> {
    /// Function defined on the whole positive half-line.
    pub fn new(eval: F) -> Self {
        Self {
            eval,
            lower: 0.0,
            upper: f64::INFINITY,
        }
    }

    pub fn with_domain(eval: F, lower: f64, upper: f64) -> Result<Self> {
        if !(lower >= 0.0) || !(upper > lower) {
            return Err(Error::InvalidArgument(format!(
                "domain ({lower}, {upper}) must be a non-empty interval of the positive axis"
            )));
        }
        Ok(Self { eval, lower, upper })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// `ln f(x)`, rejecting points outside the domain and non-positive values.
    pub fn ln_at(&self, x: f64) -> Result<f64> {
        if !(x > self.lower && x < self.upper) {
            return Err(Error::Domain(format!(
                "x = {x} outside ({}, {})",
                self.lower, self.upper
            )));
        }
        let v = (self.eval)(x);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("f({x}) = {v} is not a finite positive value")));
        }
        Ok(v.ln())
    }
}

/// `f(x)` together with its first `order` bigeometric derivatives at `x`.
///
/// Stored as logarithms `ln f^{π(i)}(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BgDerivStack {
    x: f64,
    log_values: Vec<f64>,
}

impl BgDerivStack {
    /// Build from the values `[f(x), f^π(x), ...]`; all entries must be positive.
    pub fn new(x: f64, values: &[f64]) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("stack entry {bad} is not positive")));
        }
        Self::from_log_values(x, values.iter().map(|v| v.ln()).collect())
    }

    pub fn from_log_values(x: f64, log_values: Vec<f64>) -> Result<Self> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("stack abscissa x = {x} must be positive")));
        }
        if log_values.is_empty() {
            return Err(Error::InvalidArgument("stack needs at least f(x)".into()));
        }
        if log_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("stack logarithms must be finite".into()));
        }
        Ok(Self { x, log_values })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn order(&self) -> usize {
        self.log_values.len() - 1
    }

    /// `f^{π(i)}(x)`.
    pub fn value(&self, i: usize) -> Option<f64> {
        self.log_values.get(i).map(|v| v.exp())
    }

    pub fn values(&self) -> Vec<f64> {
        self.log_values.iter().map(|v| v.exp()).collect()
    }

    pub fn log_value(&self, i: usize) -> Option<f64> {
        self.log_values.get(i).copied()
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }
}

fn check_stencil(x: f64, h0: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("x = {x} must be positive")));
    }
    if !(h0 > 0.0 && h0 < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "stencil width h0 = {h0} must lie in (0, 1)"
        )));
    }
    Ok(())
}

/// `ln f^{π(order)}(x)` by nesting the central difference
/// `x d/dx L(x) ≈ [L(x(1+δ)) - L(x(1-δ))] / (2δ)`.
fn nested_log_derivative<F: Fn(f64) -> f64>(
    f: &ScalarFn<F>,
    x: f64,
    order: usize,
    delta: f64,
) -> Result<f64> {
    if order == 0 {
        return f.ln_at(x);
    }
    let up = nested_log_derivative(f, x * (1.0 + delta), order - 1, delta)?;
    let down = nested_log_derivative(f, x * (1.0 - delta), order - 1, delta)?;
    Ok((up - down) / (2.0 * delta))
}

/// Stencil width used for entry `order` of a derivative stack.
///
/// Widening with the order keeps rounding noise, which grows like
/// `eps / δ^order`, below the `O(δ²)` truncation error.
pub fn stack_step(h0: f64, order: usize) -> f64 {
    h0 * 10f64.powf(order as f64 / 2.0)
}

/// Bigeometric derivative `f^π(x)` by a central difference of `ln f` on the
/// abscissae `x(1 ± h0)`. The error is `O(h0²)`.
pub fn bg_derivative<F: Fn(f64) -> f64>(f: &ScalarFn<F>, x: f64, h0: f64) -> Result<f64> {
    check_stencil(x, h0)?;
    f.ln_at(x)?;
    Ok(nested_log_derivative(f, x, 1, h0)?.exp())
}

/// `[f(x), f^π(x), ..., f^{π(order)}(x)]` at `x`.
pub fn bg_derivative_stack<F: Fn(f64) -> f64>(
    f: &ScalarFn<F>,
    x: f64,
    order: usize,
    h0: f64,
) -> Result<BgDerivStack> {
    check_stencil(x, h0)?;
    let mut logs = Vec::with_capacity(order + 1);
    logs.push(f.ln_at(x)?);
    for i in 1..=order {
        let delta = stack_step(h0, i);
        if delta >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "stencil for order {i} has width {delta} >= 1; use a smaller h0"
            )));
        }
        logs.push(nested_log_derivative(f, x, i, delta)?);
    }
    BgDerivStack::from_log_values(x, logs)
}

/// `ln f^{*(n)}(x) = (ln f)^{(n)}(x)` assembled from bigeometric derivatives:
/// `x^{-n} Σ_j (-1)^{n-j} s(n,j) ln f^{π(j)}(x)`.
pub fn geometric_log_from_bigeometric(stack: &BgDerivStack, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("geometric derivative order must be >= 1".into()));
    }
    if n > stack.order() {
        return Err(Error::InvalidArgument(format!(
            "order {n} exceeds stack order {}",
            stack.order()
        )));
    }
    let table = StirlingTable::new(n)?;
    let mut exponent = 0.0;
    for j in 1..=n {
        let sign = if (n - j) % 2 == 0 { 1.0 } else { -1.0 };
        exponent += sign * table.get(n, j)? as f64 * stack.log_values[j];
    }
    Ok(exponent / stack.x.powi(n as i32))
}

/// The `n`-th geometric (multiplicative) derivative `f^{*(n)}(x)`.
pub fn geometric_from_bigeometric(stack: &BgDerivStack, n: usize) -> Result<f64> {
    Ok(geometric_log_from_bigeometric(stack, n)?.exp())
}

/// Degree-`n` bigeometric Taylor polynomial at `x + h`, with `n = stack.order()`:
/// `Π_i (f^{π(i)}(x))^{(ln(1+h/x))^i / i!}`. The remainder factor is not
/// included.
pub fn bg_taylor_eval(stack: &BgDerivStack, h: f64) -> Result<f64> {
    let ratio = h / stack.x;
    if !(ratio > -1.0) || !ratio.is_finite() {
        return Err(Error::Domain(format!(
            "1 + h/x must be positive, got h = {h}, x = {}",
            stack.x
        )));
    }
    let l = ratio.ln_1p();
    let mut weight = 1.0; // l^i / i!
    let mut exponent = 0.0;
    for (i, lv) in stack.log_values.iter().enumerate() {
        if i > 0 {
            weight *= l / i as f64;
        }
        exponent += lv * weight;
    }
    Ok(exponent.exp())
}
