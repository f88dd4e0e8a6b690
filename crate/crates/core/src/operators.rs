//! Differential operators on the cut sphere.
//!
//! Every operator has two evaluation paths: central finite differences on a
//! black-box function, and exact evaluation from the second-order jet of an
//! [`Expr`]. The finite-difference path refuses stencils whose reach exceeds
//! half the distance to the cut or to a pole.

use serde::Serialize;

use crate::domain::{AngularPoint, ComplexValue, Point3D};
use crate::error::{Error, Result};
use crate::expr::Expr;

const I: ComplexValue = ComplexValue::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StencilOrder {
    Second,
    Fourth,
}

impl StencilOrder {
    /// Nominal convergence order.
    pub fn nominal(self) -> f64 {
        match self {
            StencilOrder::Second => 2.0,
            StencilOrder::Fourth => 4.0,
        }
    }

    fn reach_steps(self) -> f64 {
        match self {
            StencilOrder::Second => 1.0,
            StencilOrder::Fourth => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilSpec {
    pub order: StencilOrder,
    pub h_theta: f64,
    pub h_phi: f64,
}

impl StencilSpec {
    pub fn new(order: StencilOrder, h_theta: f64, h_phi: f64) -> Result<Self> {
        if h_theta > 0.0 && h_phi > 0.0 && h_theta.is_finite() && h_phi.is_finite() {
            Ok(Self {
                order,
                h_theta,
                h_phi,
            })
        } else {
            Err(Error::InvalidArgument(format!(
                "stencil steps must be positive, got h_theta={h_theta}, h_phi={h_phi}"
            )))
        }
    }

    pub fn uniform(order: StencilOrder, h: f64) -> Result<Self> {
        Self::new(order, h, h)
    }

    /// Fails unless `nesting` stacked stencils around `p` stay within half of
    /// the clearance to the domain boundary in both directions.
    fn check(&self, p: AngularPoint, nesting: f64) -> Result<()> {
        let steps = self.order.reach_steps() * nesting;
        let reach_t = steps * self.h_theta;
        let reach_p = steps * self.h_phi;
        if reach_t <= 0.5 * p.theta_clearance() && reach_p <= 0.5 * p.phi_clearance() {
            Ok(())
        } else {
            Err(Error::StencilOutsideDomain {
                theta: p.theta(),
                phi: p.phi(),
                reach: reach_t.max(reach_p),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Theta,
    Phi,
}

fn shifted(p: AngularPoint, axis: Axis, d: f64) -> Result<AngularPoint> {
    match axis {
        Axis::Theta => p.offset(d, 0.0),
        Axis::Phi => p.offset(0.0, d),
    }
}

fn step(s: &StencilSpec, axis: Axis) -> f64 {
    match axis {
        Axis::Theta => s.h_theta,
        Axis::Phi => s.h_phi,
    }
}

fn first<T, F>(f: &F, p: AngularPoint, axis: Axis, s: &StencilSpec) -> Result<T>
where
    T: FdValue,
    F: Fn(AngularPoint) -> Result<T>,
{
    let h = step(s, axis);
    let at = |k: f64| f(shifted(p, axis, k * h)?);
    Ok(match s.order {
        StencilOrder::Second => (at(1.0)? - at(-1.0)?).scale(1.0 / (2.0 * h)),
        StencilOrder::Fourth => {
            let num = at(1.0)?.scale(8.0) - at(-1.0)?.scale(8.0) - at(2.0)? + at(-2.0)?;
            num.scale(1.0 / (12.0 * h))
        }
    })
}

fn second<T, F>(f: &F, p: AngularPoint, axis: Axis, s: &StencilSpec) -> Result<T>
where
    T: FdValue,
    F: Fn(AngularPoint) -> Result<T>,
{
    let h = step(s, axis);
    let at = |k: f64| f(shifted(p, axis, k * h)?);
    let f0 = f(p)?;
    Ok(match s.order {
        StencilOrder::Second => (at(1.0)? + at(-1.0)? - f0.scale(2.0)).scale(1.0 / (h * h)),
        StencilOrder::Fourth => {
            let num = (at(1.0)? + at(-1.0)?).scale(16.0) - f0.scale(30.0) - at(2.0)? - at(-2.0)?;
            num.scale(1.0 / (12.0 * h * h))
        }
    })
}

/// Values the difference stencils can act on.
trait FdValue: Copy + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> {
    fn scale(self, c: f64) -> Self;
}

impl FdValue for f64 {
    fn scale(self, c: f64) -> Self {
        self * c
    }
}

impl FdValue for ComplexValue {
    fn scale(self, c: f64) -> Self {
        self * c
    }
}

/// Finite-difference `(d/dtheta + i sin(phi) d/dphi) f`.
pub fn apply_d<F>(f: F, p: AngularPoint, s: &StencilSpec) -> Result<ComplexValue>
where
    F: Fn(AngularPoint) -> Result<ComplexValue>,
{
    s.check(p, 1.0)?;
    d_unchecked(&f, p, s, 1.0)
}

/// Finite-difference `(d/dtheta - i sin(phi) d/dphi) f`.
pub fn apply_dbar<F>(f: F, p: AngularPoint, s: &StencilSpec) -> Result<ComplexValue>
where
    F: Fn(AngularPoint) -> Result<ComplexValue>,
{
    s.check(p, 1.0)?;
    d_unchecked(&f, p, s, -1.0)
}

fn d_unchecked<F>(f: &F, p: AngularPoint, s: &StencilSpec, sign: f64) -> Result<ComplexValue>
where
    F: Fn(AngularPoint) -> Result<ComplexValue>,
{
    let dt = first(f, p, Axis::Theta, s)?;
    let dp = first(f, p, Axis::Phi, s)?;
    Ok(dt + sign * I * p.phi().sin() * dp)
}

/// Direct three-term evaluation of
/// `(1/sin^2 phi) d^2/dtheta^2 + d^2/dphi^2 + cot(phi) d/dphi`.
pub fn angular_laplacian<F>(f: F, p: AngularPoint, s: &StencilSpec) -> Result<ComplexValue>
where
    F: Fn(AngularPoint) -> Result<ComplexValue>,
{
    s.check(p, 1.0)?;
    angular_laplacian_unchecked(&f, p, s)
}

fn angular_laplacian_unchecked<T, F>(f: &F, p: AngularPoint, s: &StencilSpec) -> Result<T>
where
    T: FdValue,
    F: Fn(AngularPoint) -> Result<T>,
{
    let (sn, cs) = p.phi().sin_cos();
    let tt = second(f, p, Axis::Theta, s)?;
    let pp = second(f, p, Axis::Phi, s)?;
    let d_p = first(f, p, Axis::Phi, s)?;
    Ok(tt.scale(1.0 / (sn * sn)) + pp + d_p.scale(cs / sn))
}

/// `(1/sin^2 phi) Dbar(D f)` by nesting the first-order stencils.
pub fn factorized_laplacian<F>(f: F, p: AngularPoint, s: &StencilSpec) -> Result<ComplexValue>
where
    F: Fn(AngularPoint) -> Result<ComplexValue>,
{
    s.check(p, 2.0)?;
    let inner = |q: AngularPoint| d_unchecked(&f, q, s, 1.0);
    let sn = p.phi().sin();
    Ok(d_unchecked(&inner, p, s, -1.0)? / (sn * sn))
}

/// `grad a . grad b` in the unit-sphere metric:
/// `d_phi a d_phi b + (1/sin^2 phi) d_theta a d_theta b`.
pub fn gradient_dot<A, B>(a: A, b: B, p: AngularPoint, s: &StencilSpec) -> Result<f64>
where
    A: Fn(AngularPoint) -> Result<f64>,
    B: Fn(AngularPoint) -> Result<f64>,
{
    s.check(p, 1.0)?;
    let sn = p.phi().sin();
    let at = first(&a, p, Axis::Theta, s)?;
    let ap = first(&a, p, Axis::Phi, s)?;
    let bt = first(&b, p, Axis::Theta, s)?;
    let bp = first(&b, p, Axis::Phi, s)?;
    Ok(ap * bp + at * bt / (sn * sn))
}

/// A radial profile with its first two derivatives at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Laplacian of the separable product `g(r) h(theta, phi)`:
/// `h (g'' + (2/r) g') + (g / r^2) Lambda h`, with exact radial derivatives
/// and a finite-difference angular Laplacian.
pub fn laplacian3d_separable<G, H>(g: G, h: H, q: Point3D, s: &StencilSpec) -> Result<ComplexValue>
where
    G: Fn(f64) -> RadialJet,
    H: Fn(AngularPoint) -> Result<ComplexValue>,
{
    let r = q.r();
    let gj = g(r);
    let hv = h(q.angles())?;
    let lam = angular_laplacian(&h, q.angles(), s)?;
    Ok(hv * (gj.d2 + 2.0 * gj.d1 / r) + lam * (gj.value / (r * r)))
}

/// The operators that have both a stencil and an exact-jet evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Operator {
    D,
    Dbar,
    AngularLaplacian,
    FactorizedLaplacian,
}

impl Operator {
    /// Highest derivative order the operator involves.
    pub fn derivative_order(self) -> i32 {
        match self {
            Operator::D | Operator::Dbar => 1,
            Operator::AngularLaplacian | Operator::FactorizedLaplacian => 2,
        }
    }

    pub fn apply_fd<F>(self, f: F, p: AngularPoint, s: &StencilSpec) -> Result<ComplexValue>
    where
        F: Fn(AngularPoint) -> Result<ComplexValue>,
    {
        match self {
            Operator::D => apply_d(f, p, s),
            Operator::Dbar => apply_dbar(f, p, s),
            Operator::AngularLaplacian => angular_laplacian(f, p, s),
            Operator::FactorizedLaplacian => factorized_laplacian(f, p, s),
        }
    }

    pub fn apply_exact(self, e: &Expr, p: AngularPoint) -> Result<ComplexValue> {
        let jet = e.eval_jet(p)?;
        let phi = p.phi();
        Ok(match self {
            Operator::D => jet.d_operator(phi),
            Operator::Dbar => jet.dbar_operator(phi),
            Operator::AngularLaplacian => jet.angular_laplacian(phi),
            Operator::FactorizedLaplacian => jet.factorized_laplacian(phi),
        })
    }
}

/// Exact `grad u . grad v` for `e = u + i v`.
pub fn gradient_dot_exact(e: &Expr, p: AngularPoint) -> Result<f64> {
    let j = e.eval_jet(p)?;
    let s = p.phi().sin();
    Ok(j.d_phi.re * j.d_phi.im + j.d_theta.re * j.d_theta.im / (s * s))
}

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn fitted_slope(hs: &[f64], errs: &[f64]) -> f64 {
    let n = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Validates a step sequence: at least three steps, each half the previous.
pub fn check_halving(hs: &[f64]) -> Result<()> {
    if hs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 step sizes, got {}",
            hs.len()
        )));
    }
    for w in hs.windows(2) {
        if !(w[0] > 0.0) || ((w[1] / w[0]) - 0.5).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "step sequence must halve: {} -> {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Observed order of the stencil version of `op` applied to `e` at `p`,
/// measured against the exact-jet value over uniform steps `hs`.
pub fn convergence_order(
    op: Operator,
    order: StencilOrder,
    e: &Expr,
    p: AngularPoint,
    hs: &[f64],
) -> Result<f64> {
    check_halving(hs)?;
    let exact = op.apply_exact(e, p)?;
    let scale = 1.0 + exact.norm() + e.eval(p)?.norm();
    let mut errs = Vec::with_capacity(hs.len());
    for &h in hs {
        // rounding in a d-th difference grows like eps / h^d
        let floor = 1e3 * f64::EPSILON * scale / h.powi(op.derivative_order());
        let s = StencilSpec::uniform(order, h)?;
        let approx = op.apply_fd(|q| e.eval(q), p, &s)?;
        let err = (approx - exact).norm();
        if err <= floor {
            return Err(Error::DegenerateSequence(format!(
                "error {err:e} at h={h} is at the rounding floor {floor:e}"
            )));
        }
        errs.push(err);
    }
    Ok(fitted_slope(hs, &errs))
}
