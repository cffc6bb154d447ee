//! Identities shared by the calculus rule tests and the acceptance run.
#![allow(dead_code)]

use bigeo::calculus::{bg_derivative, ScalarFn, DEFAULT_H0};
use proptest::prelude::*;

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn bg(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    bg_derivative(&ScalarFn::new(f), x, DEFAULT_H0).unwrap()
}

/// Random point and shape parameters for the test functions below.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub x: f64,
    pub a: f64,
    pub b: f64,
    pub k: f64,
    pub c: f64,
    pub scale: f64,
}

pub fn samples() -> impl Strategy<Value = Sample> {
    (0.3f64..3.0, 0.5f64..3.0, -1.0f64..1.0, 0.5f64..2.0, 0.2f64..2.0, 0.1f64..10.0).prop_map(
        |(x, a, b, k, c, scale)| Sample {
            x,
            a,
            b,
            k,
            c,
            scale,
        },
    )
}

// f = a + x^2, g = e^{bx}(1 + x), e = 1 + sin(kx)/2, h = 1 + c x^2

fn f(s: Sample) -> impl Fn(f64) -> f64 {
    move |x| s.a + x * x
}

fn g(s: Sample) -> impl Fn(f64) -> f64 {
    move |x| (s.b * x).exp() * (1.0 + x)
}

fn g_prime(s: Sample, x: f64) -> f64 {
    (s.b * x).exp() * (s.b * (1.0 + x) + 1.0)
}

fn e(s: Sample) -> impl Fn(f64) -> f64 {
    move |x| 1.0 + 0.5 * (s.k * x).sin()
}

fn e_prime(s: Sample, x: f64) -> f64 {
    0.5 * s.k * (s.k * x).cos()
}

fn h(s: Sample) -> impl Fn(f64) -> f64 {
    move |x| 1.0 + s.c * x * x
}

fn h_prime(s: Sample, x: f64) -> f64 {
    2.0 * s.c * x
}

/// Each rule yields `(lhs, rhs)`, both computed with `bg_derivative`.
pub type Rule = fn(Sample) -> (f64, f64);

pub fn constant_multiple(s: Sample) -> (f64, f64) {
    let f = f(s);
    (bg(|x| s.scale * f(x), s.x), bg(&f, s.x))
}

pub fn product(s: Sample) -> (f64, f64) {
    let (f, g) = (f(s), g(s));
    (bg(|x| f(x) * g(x), s.x), bg(&f, s.x) * bg(&g, s.x))
}

pub fn quotient(s: Sample) -> (f64, f64) {
    let (f, g) = (f(s), g(s));
    (bg(|x| f(x) / g(x), s.x), bg(&f, s.x) / bg(&g, s.x))
}

pub fn power(s: Sample) -> (f64, f64) {
    let (f, e) = (f(s), e(s));
    let x = s.x;
    let rhs = bg(&f, x).powf(e(x)) * f(x).powf(x * e_prime(s, x));
    (bg(|t| f(t).powf(e(t)), x), rhs)
}

/// `(f o h)^pi(x) = f^pi(h(x))^{x h'(x) / h(x)}`.
pub fn chain(s: Sample) -> (f64, f64) {
    let (f, h) = (f(s), h(s));
    let x = s.x;
    let rhs = bg(&f, h(x)).powf(x * h_prime(s, x) / h(x));
    (bg(|t| f(h(t)), x), rhs)
}

/// The chain rule with exponent `h'(x)` alone, which does not hold in general.
pub fn chain_literal(s: Sample) -> (f64, f64) {
    let (f, h) = (f(s), h(s));
    let x = s.x;
    (bg(|t| f(h(t)), x), bg(&f, h(x)).powf(h_prime(s, x)))
}

pub fn sum(s: Sample) -> (f64, f64) {
    let (f, g) = (f(s), g(s));
    let x = s.x;
    let (fx, gx) = (f(x), g(x));
    let rhs = bg(&f, x).powf(fx / (fx + gx)) * bg(&g, x).powf(gx / (fx + gx));
    (bg(|t| f(t) + g(t), x), rhs)
}

/// `F(y, z) = y^2 z + a sqrt(z)` along `y = h(t)`, `z = g(t)`:
/// `(F_y^pi)^{t y'/y} (F_z^pi)^{t z'/z}` with partial bigeometric derivatives.
pub fn two_variable_chain(s: Sample) -> (f64, f64) {
    let big_f = move |y: f64, z: f64| y * y * z + s.a * z.sqrt();
    let (y, z) = (h(s), g(s));
    let t = s.x;
    let (yt, zt) = (y(t), z(t));
    let fy = bg(|u| big_f(u, zt), yt);
    let fz = bg(|u| big_f(yt, u), zt);
    let rhs = fy.powf(t * h_prime(s, t) / yt) * fz.powf(t * g_prime(s, t) / zt);
    (bg(|u| big_f(y(u), z(u)), t), rhs)
}

pub const RULES: [(&str, Rule); 7] = [
    ("constant multiple", constant_multiple),
    ("product", product),
    ("quotient", quotient),
    ("power", power),
    ("chain", chain),
    ("sum", sum),
    ("two-variable chain", two_variable_chain),
];

/// A positive test function with hand-derived `(ln f)^{(n)}` for `n = 1..=3`.
pub struct GeoCase {
    pub name: &'static str,
    pub f: fn(f64) -> f64,
    pub log_derivative: fn(usize, f64) -> f64,
}

pub const GEO_CASES: [GeoCase; 4] = [
    GeoCase {
        name: "e^x",
        f: f64::exp,
        log_derivative: |n, _| if n == 1 { 1.0 } else { 0.0 },
    },
    GeoCase {
        name: "x^2.5",
        f: |x| x.powf(2.5),
        log_derivative: |n, x| match n {
            1 => 2.5 / x,
            2 => -2.5 / (x * x),
            _ => 5.0 / x.powi(3),
        },
    },
    GeoCase {
        name: "x - ln x",
        f: |x| x - x.ln(),
        log_derivative: |n, x| {
            let u = x - x.ln();
            let (u1, u2, u3) = (1.0 - 1.0 / x, 1.0 / (x * x), -2.0 / x.powi(3));
            match n {
                1 => u1 / u,
                2 => u2 / u - (u1 / u).powi(2),
                _ => u3 / u - 3.0 * u1 * u2 / (u * u) + 2.0 * (u1 / u).powi(3),
            }
        },
    },
    GeoCase {
        name: "sqrt(1+x)",
        f: |x| (1.0 + x).sqrt(),
        log_derivative: |n, x| match n {
            1 => 0.5 / (1.0 + x),
            2 => -0.5 / (1.0 + x).powi(2),
            _ => 1.0 / (1.0 + x).powi(3),
        },
    },
];

pub const GEO_POINTS: [f64; 4] = [0.7, 1.5, 2.0, 3.3];
