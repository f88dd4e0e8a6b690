//! One-dimensional integrators for the three spherical coordinate
//! directions, and their tensor products.
//!
//! * theta: equally spaced trapezoid on a grid offset from the cut. Spectrally
//!   accurate for smooth periodic integrands; the error estimate compares
//!   against the half grid (a subset of the nodes, so no extra evaluations).
//! * phi: the substitution `x = tan(phi/2)` (folded at `phi = pi/2` so both
//!   endpoints map to `x = 0`) followed by `x = u^q` with `q` chosen from the
//!   declared endpoint exponents, then adaptive Gauss-Legendre bisection.
//! * r: truncation of `(0, inf)` at a radius where the decay envelope bounds
//!   the tail, then adaptive Gauss-Legendre on the finite interval.
//!
//! Adaptive error estimates are by local extrapolation: each interval is
//! integrated whole and as two halves, and their difference is the estimate.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use serde::Serialize;

use crate::domain::{AngularPoint, ComplexValue, Point3D};
use crate::error::{Error, Result};

const GL_ORDER: usize = 10;
const MAX_SEGMENTS: usize = 4000;
const DEFAULT_N_THETA: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

/// Endpoint behavior of a phi integrand: it is assumed to behave like
/// `tan(phi/2)^(2a) * sin(phi)` near each endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiSingularity {
    exponent_at_0: f64,
    exponent_at_pi: f64,
}

impl PhiSingularity {
    pub fn new(exponent_at_0: f64, exponent_at_pi: f64) -> Result<Self> {
        if exponent_at_0 > -1.0 && exponent_at_pi < 1.0 {
            Ok(Self {
                exponent_at_0,
                exponent_at_pi,
            })
        } else {
            Err(Error::InvalidArgument(format!(
                "phi integrand tan(phi/2)^(2a) sin(phi) is not integrable for a0={exponent_at_0}, api={exponent_at_pi}"
            )))
        }
    }

    /// Both endpoints regular (`a0 = api = 0`).
    pub fn regular() -> Self {
        Self {
            exponent_at_0: 0.0,
            exponent_at_pi: 0.0,
        }
    }

    /// Same exponent `a` at both ends, as for `|tan(phi/2)^a|^2`.
    pub fn symmetric(a: f64) -> Result<Self> {
        Self::new(a, a)
    }

    pub fn exponent_at_0(&self) -> f64 {
        self.exponent_at_0
    }

    pub fn exponent_at_pi(&self) -> f64 {
        self.exponent_at_pi
    }
}

fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        (0..n)
            .map(|i| {
                let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for j in 2..=n {
                        let jf = j as f64;
                        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    })
}

fn gl_panel<F>(f: &mut F, piece: usize, a: f64, b: f64) -> Result<f64>
where
    F: FnMut(usize, f64) -> Result<f64>,
{
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for &(x, w) in gauss_legendre() {
        let y = f(piece, mid + half * x)?;
        if !y.is_finite() {
            return Err(Error::NonFinite { op: "integrand" });
        }
        sum += w * y;
    }
    Ok(sum * half)
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    piece: usize,
    a: f64,
    b: f64,
    whole: f64,
    left: f64,
    right: f64,
    splittable: bool,
}

impl Segment {
    fn value(&self) -> f64 {
        self.left + self.right
    }

    fn error(&self) -> f64 {
        (self.whole - self.value()).abs()
    }
}

fn make_segment<F>(f: &mut F, piece: usize, a: f64, b: f64, whole: f64) -> Result<Segment>
where
    F: FnMut(usize, f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    Ok(Segment {
        piece,
        a,
        b,
        whole,
        left: gl_panel(f, piece, a, m)?,
        right: gl_panel(f, piece, m, b)?,
        splittable: m > a && m < b && (b - a) > 4.0 * f64::EPSILON * a.abs().max(b.abs()),
    })
}

/// Globally adaptive bisection over a set of intervals, each with its own
/// integrand `f(piece, x)`. Stops when the summed error estimate is within
/// `max(rel_tol * |value|, abs_tol)`.
fn adaptive<F>(mut f: F, pieces: &[(f64, f64)], rel_tol: f64, abs_tol: f64) -> Result<QuadratureResult>
where
    F: FnMut(usize, f64) -> Result<f64>,
{
    let mut evals = 0usize;
    let per_panel = GL_ORDER;
    let mut segs = Vec::with_capacity(64);
    for (i, &(a, b)) in pieces.iter().enumerate() {
        let whole = gl_panel(&mut f, i, a, b)?;
        segs.push(make_segment(&mut f, i, a, b, whole)?);
        evals += 3 * per_panel;
    }
    loop {
        let (value, err) = totals(&segs);
        let target = (rel_tol * value.abs()).max(abs_tol);
        if err <= target {
            return Ok(QuadratureResult {
                value,
                abs_error_estimate: err,
                evaluations: evals,
            });
        }
        let worst = segs
            .iter()
            .enumerate()
            .filter(|(_, s)| s.splittable)
            .max_by(|(_, x), (_, y)| x.error().total_cmp(&y.error()))
            .map(|(i, _)| i);
        let Some(worst) = worst.filter(|_| segs.len() < MAX_SEGMENTS) else {
            return Err(Error::NoConvergence(QuadratureResult {
                value,
                abs_error_estimate: err,
                evaluations: evals,
            }));
        };
        let s = segs.swap_remove(worst);
        let m = 0.5 * (s.a + s.b);
        segs.push(make_segment(&mut f, s.piece, s.a, m, s.left)?);
        segs.push(make_segment(&mut f, s.piece, m, s.b, s.right)?);
        evals += 4 * per_panel;
    }
}

/// Sums in a fixed interval order so results do not depend on the
/// refinement history.
fn totals(segs: &[Segment]) -> (f64, f64) {
    let mut order: Vec<&Segment> = segs.iter().collect();
    order.sort_by(|x, y| x.piece.cmp(&y.piece).then(x.a.total_cmp(&y.a)));
    order
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value(), e + s.error()))
}

/// Trapezoid weights and nodes `theta_j = (j + 1/2) 2pi/n`.
fn theta_nodes(n: usize) -> impl Iterator<Item = f64> {
    let step = TAU / n as f64;
    (0..n).map(move |j| (j as f64 + 0.5) * step)
}

fn theta_rule<F>(mut f: F, n_nodes: usize) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    if n_nodes < 4 {
        return Err(Error::InvalidArgument(format!(
            "theta rule needs at least 4 nodes, got {n_nodes}"
        )));
    }
    // The even-indexed nodes form the coarse grid; with odd n the coarse
    // grid is not equally spaced, so round up to even.
    let n = n_nodes + n_nodes % 2;
    let step = TAU / n as f64;
    let (mut fine, mut coarse, mut inner_err) = (0.0, 0.0, 0.0);
    for (j, theta) in theta_nodes(n).enumerate() {
        let (y, e) = f(theta)?;
        fine += y;
        inner_err += e;
        if j % 2 == 0 {
            coarse += y;
        }
    }
    let fine = fine * step;
    let coarse = coarse * 2.0 * step;
    Ok(QuadratureResult {
        value: fine,
        abs_error_estimate: (fine - coarse).abs() + inner_err * step,
        evaluations: n,
    })
}

/// Integral of a 2pi-periodic `f` over (0, 2pi) with `n_nodes` equally
/// spaced nodes offset from the cut.
pub fn integrate_theta(f: impl Fn(f64) -> f64, n_nodes: usize) -> Result<QuadratureResult> {
    theta_rule(|t| Ok((f(t), 0.0)), n_nodes)
}

/// Smallest integer `q` in `1..=64` with `q (beta + 1)` within 1e-9 of an
/// integer `>= 1`; otherwise the smallest `q` making the transformed
/// integrand vanish at 0.
fn grading_power(beta: f64) -> u32 {
    let s = beta + 1.0;
    for q in 1..=64u32 {
        let v = q as f64 * s;
        if v >= 1.0 - 1e-9 && (v - v.round()).abs() < 1e-9 {
            return q;
        }
    }
    (2.0 / s).ceil().clamp(1.0, 64.0) as u32
}

/// `f` receives `phi` and `t = tan(phi/2)`; on the south piece `t` is the
/// exact reciprocal of the substituted variable.
fn phi_rule<F>(mut f: F, sing: PhiSingularity, tol: f64) -> Result<QuadratureResult>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    // near x = 0 the folded integrand behaves like x^beta
    let beta_0 = 2.0 * sing.exponent_at_0 + 1.0;
    let beta_pi = 1.0 - 2.0 * sing.exponent_at_pi;
    let q = [grading_power(beta_0), grading_power(beta_pi)];
    adaptive(
        |piece, u| {
            let qf = q[piece] as f64;
            let x = u.powi(q[piece] as i32);
            let jac = qf * u.powi(q[piece] as i32 - 1) * 2.0 / (1.0 + x * x);
            if !(x > 0.0) {
                return Ok(0.0);
            }
            let (phi, t) = if piece == 0 {
                (2.0 * x.atan(), x)
            } else {
                (PI - 2.0 * x.atan(), 1.0 / x)
            };
            if !t.is_finite() {
                return Ok(0.0);
            }
            Ok(f(phi, t)? * jac)
        },
        &[(0.0, 1.0), (0.0, 1.0)],
        tol,
        0.0,
    )
}

/// Integral of `f` over (0, pi) for integrands with power-law endpoint
/// behavior described by `sing`. `f` includes any `sin(phi)` weight.
pub fn integrate_phi_singular(
    f: impl Fn(f64) -> f64,
    sing: PhiSingularity,
    tol: f64,
) -> Result<QuadratureResult> {
    // phi itself rounds to an endpoint long before t does
    phi_rule(|phi, _| Ok(if phi > 0.0 && phi < PI { f(phi) } else { 0.0 }), sing, tol)
}

/// As [`integrate_phi_singular`], with the integrand written in terms of
/// `t = tan(phi/2)` (the measure is still `dphi`). Near `phi = pi` this
/// avoids recovering `t` from a rounded `phi`.
pub fn integrate_phi_singular_tan(
    f: impl Fn(f64) -> f64,
    sing: PhiSingularity,
    tol: f64,
) -> Result<QuadratureResult> {
    phi_rule(|_, t| Ok(f(t)), sing, tol)
}

/// Tail of the envelope `c r^2 e^{-lambda r}` beyond `big_r`.
fn envelope_tail(c: f64, lambda: f64, big_r: f64) -> f64 {
    c * (-lambda * big_r).exp()
        * (big_r * big_r / lambda + 2.0 * big_r / (lambda * lambda) + 2.0 / lambda.powi(3))
}

fn radial_rule<F>(mut f: F, decay_rate: f64, tol: f64) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(decay_rate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "decay rate must be positive, got {decay_rate}"
        )));
    }
    let scale = 1.0 / decay_rate;
    let start = scale.max(1.0);
    // envelope constant from samples in the asymptotic region, doubled
    let mut c = 0.0f64;
    let mut evals = 0;
    for j in 0..16 {
        let r = start * (1.0 + 0.5 * j as f64);
        let y = f(r)?;
        evals += 1;
        c = c.max(y.abs() / (r * r * (-decay_rate * r).exp()));
    }
    c *= 2.0;
    if c == 0.0 {
        // identically zero in the sampled region; integrate a fixed window
        let q = adaptive(|_, r| f(r), &[(0.0, 40.0 * start)], tol, 0.0)?;
        return Ok(QuadratureResult {
            evaluations: q.evaluations + evals,
            ..q
        });
    }
    let mut reference = c * 2.0 / decay_rate.powi(3);
    for _ in 0..4 {
        let target = 0.5 * tol * reference;
        let mut big_r = start;
        while envelope_tail(c, decay_rate, big_r) > target && big_r < 1e6 * start {
            big_r *= 1.1;
        }
        let tail = envelope_tail(c, decay_rate, big_r);
        let q = adaptive(|_, r| f(r), &[(0.0, big_r)], 0.5 * tol, 0.0)?;
        evals += q.evaluations;
        if tail <= 0.5 * tol * q.value.abs() || q.value == 0.0 {
            return Ok(QuadratureResult {
                value: q.value,
                abs_error_estimate: q.abs_error_estimate + tail,
                evaluations: evals,
            });
        }
        reference = q.value.abs();
    }
    Err(Error::NoConvergence(QuadratureResult {
        value: f64::NAN,
        abs_error_estimate: f64::INFINITY,
        evaluations: evals,
    }))
}

/// Integral of `f` over (0, inf), where `|f(r)| <= C r^2 e^{-decay_rate r}`
/// for large `r`.
pub fn integrate_radial(f: impl Fn(f64) -> f64, decay_rate: f64, tol: f64) -> Result<QuadratureResult> {
    radial_rule(|r| Ok(f(r)), decay_rate, tol)
}

fn sphere_rule<F>(mut big_f: F, sing: PhiSingularity, n_theta: usize, tol: f64) -> Result<QuadratureResult>
where
    F: FnMut(AngularPoint) -> Result<f64>,
{
    let mut evals = 0;
    let mut q = theta_rule(
        |theta| {
            let inner = phi_rule(
                |_, t| {
                    let p = AngularPoint::from_tan_half(theta, t)?;
                    Ok(big_f(p)? * p.sin_phi())
                },
                sing,
                tol,
            )?;
            evals += inner.evaluations;
            Ok((inner.value, inner.abs_error_estimate))
        },
        n_theta,
    )?;
    q.evaluations = evals;
    Ok(q)
}

/// Integral of `F` over the sphere against `sin(phi) dphi dtheta`.
pub fn sphere_integral(
    big_f: impl Fn(AngularPoint) -> f64,
    sing: PhiSingularity,
    n_theta: usize,
    tol: f64,
) -> Result<QuadratureResult> {
    sphere_rule(|p| Ok(big_f(p)), sing, n_theta, tol)
}

/// Squared L^2 norm of `g` over R^3 with `n_theta` theta nodes.
///
/// `decay_rate` is the exponential decay rate of `|g|` itself; the radial
/// integrand `|g|^2 r^2` decays at twice that rate.
pub fn r3_norm_sq_with(
    g: impl Fn(Point3D) -> ComplexValue,
    sing: PhiSingularity,
    decay_rate: f64,
    tol: f64,
    n_theta: usize,
) -> Result<QuadratureResult> {
    let mut inner_err = 0.0f64;
    let mut evals = 0;
    let mut q = radial_rule(
        |r| {
            let s = sphere_rule(
                |p| Ok(g(Point3D::from_parts(r, p)?).norm_sqr()),
                sing,
                n_theta,
                0.25 * tol,
            )?;
            evals += s.evaluations;
            // relative inner error carried to the outer integral
            if s.value != 0.0 {
                inner_err = inner_err.max(s.abs_error_estimate / s.value.abs());
            }
            Ok(s.value * r * r)
        },
        2.0 * decay_rate,
        0.5 * tol,
    )?;
    q.abs_error_estimate += inner_err * q.value.abs();
    q.evaluations = evals;
    Ok(q)
}

/// [`r3_norm_sq_with`] using 16 theta nodes.
pub fn r3_norm_sq(
    g: impl Fn(Point3D) -> ComplexValue,
    sing: PhiSingularity,
    decay_rate: f64,
    tol: f64,
) -> Result<QuadratureResult> {
    r3_norm_sq_with(g, sing, decay_rate, tol, DEFAULT_N_THETA)
}
