//! The individual checks. Each returns a [`CheckReport`]; numerical failures
//! inside a check become `status = error` rather than propagating.
//!
//! Exact-jet metrics are residuals scaled by `1 + |f|` (squared for the
//! bilinear gradient product), so that large but valid values near the cut
//! and poles are judged relative to their own rounding level.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::random::{random_point, TreeGen};
use super::{CheckReport, GridSpec};
use crate::domain::{AngularPoint, ComplexValue, Point3D};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::family::{self, FamilyIndex, RadialParams};
use crate::operators::{self, fitted_slope, RadialJet, StencilOrder, StencilSpec};
use crate::quadrature;

/// Below this modulus an inverse is not evaluated.
const INVERSE_SKIP: f64 = 1e-8;
/// Angular distance to the negative real axis that counts as touching the
/// principal log branch.
const LOG_BRANCH_ANGLE: f64 = 1e-6;
/// Quadrature targets never go below this, so a zero tolerance still
/// produces a verdict.
const QUAD_TOL_FLOOR: f64 = 1e-13;

/// Worst point of a sweep over a grid.
#[derive(Debug, Clone, Copy)]
struct Sweep {
    max: f64,
    raw_at_max: f64,
    at: Option<AngularPoint>,
    tested: usize,
    skipped: usize,
}

impl Sweep {
    fn location(&self) -> String {
        match self.at {
            Some(p) => format!("(theta={:.6}, phi={:.6})", p.theta(), p.phi()),
            None => "-".to_string(),
        }
    }
}

/// `f` returns `(scaled, raw)` or `None` to skip the point.
fn sweep<F>(points: &[AngularPoint], mut f: F) -> Result<Sweep>
where
    F: FnMut(AngularPoint) -> Result<Option<(f64, f64)>>,
{
    let mut s = Sweep {
        max: 0.0,
        raw_at_max: 0.0,
        at: None,
        tested: 0,
        skipped: 0,
    };
    for &p in points {
        match f(p)? {
            Some((scaled, raw)) => {
                s.tested += 1;
                // a NaN, once seen, stays the maximum
                let worse = scaled > s.max || scaled.is_nan() || s.at.is_none();
                if worse && !s.max.is_nan() {
                    s.max = scaled;
                    s.raw_at_max = raw;
                    s.at = Some(p);
                }
            }
            None => s.skipped += 1,
        }
    }
    Ok(s)
}

fn or_error(name: &str, tol: f64, r: Result<CheckReport>) -> CheckReport {
    r.unwrap_or_else(|e| CheckReport::error(name.to_string(), tol, e.to_string()))
}

/// Componentwise residuals `du/dtheta - sin(phi) dv/dphi` and
/// `dv/dtheta + sin(phi) du/dphi` from exact partials.
pub fn cr_residuals(f: &Expr, p: AngularPoint) -> Result<(f64, f64)> {
    let j = f.eval_jet(p)?;
    let s = p.phi().sin();
    let r1 = j.d_theta.re - s * j.d_phi.im;
    let r2 = j.d_theta.im + s * j.d_phi.re;
    Ok((r1, r2))
}

fn cr_sweep(f: &Expr, grid: &GridSpec) -> Result<Sweep> {
    sweep(&grid.points(), |p| {
        let (r1, r2) = cr_residuals(f, p)?;
        let raw = r1.abs().max(r2.abs());
        Ok(Some((raw / (1.0 + f.eval(p)?.norm()), raw)))
    })
}

fn cr_report(name: String, f: &Expr, grid: &GridSpec, tol: f64) -> CheckReport {
    let r = cr_sweep(f, grid).map(|s| {
        CheckReport::from_metric(
            name.clone(),
            s.max,
            tol,
            s.tested,
            format!(
                "max CR residual / (1+|f|) at {}; unscaled residual there {:e}",
                s.location(),
                s.raw_at_max
            ),
        )
    });
    or_error(&name, tol, r)
}

/// Both Cauchy-Riemann residuals over the grid.
pub fn check_cr(f: &Expr, grid: &GridSpec, tol: f64) -> CheckReport {
    let name = format!("cr/{f}");
    if !f.is_holomorphic() {
        return CheckReport::not_applicable(name, tol);
    }
    cr_report(name, f, grid, tol)
}

/// Same sweep without the holomorphy gate; used for negative controls.
pub fn check_cr_ungated(f: &Expr, grid: &GridSpec, tol: f64) -> CheckReport {
    cr_report(format!("cr/{f}"), f, grid, tol)
}

/// CR on `f * g`, plus the component identities
/// `Re(fg) = uu' - vv'` and `Im(fg) = uv' + u'v`.
pub fn check_product_closure(f: &Expr, g: &Expr, grid: &GridSpec, tol: f64) -> CheckReport {
    let prod = f.clone() * g.clone();
    let name = format!("product/{prod}");
    if !prod.is_holomorphic() {
        return CheckReport::not_applicable(name, tol);
    }
    let r = (|| {
        let cr = cr_sweep(&prod, grid)?;
        let comp = sweep(&grid.points(), |p| {
            let a = f.eval(p)?;
            let b = g.eval(p)?;
            let fg = prod.eval(p)?;
            let du = fg.re - (a.re * b.re - a.im * b.im);
            let dv = fg.im - (a.re * b.im + b.re * a.im);
            let raw = du.abs().max(dv.abs());
            Ok(Some((raw / (1.0 + fg.norm()), raw)))
        })?;
        Ok(CheckReport::from_metric(
            name.clone(),
            cr.max.max(comp.max),
            tol,
            cr.tested,
            format!(
                "CR residual {:e} at {}; component identity residual {:e} at {}",
                cr.max,
                cr.location(),
                comp.max,
                comp.location()
            ),
        ))
    })();
    or_error(&name, tol, r)
}

/// CR on `1/f`, skipping grid points where `|f| < 1e-8`.
pub fn check_inverse_closure(f: &Expr, grid: &GridSpec, tol: f64) -> CheckReport {
    let inv = f.inv();
    let name = format!("inverse/{inv}");
    if !f.is_holomorphic() {
        return CheckReport::not_applicable(name, tol);
    }
    let r = sweep(&grid.points(), |p| {
        if f.eval(p)?.norm() < INVERSE_SKIP {
            return Ok(None);
        }
        let (r1, r2) = cr_residuals(&inv, p)?;
        let raw = r1.abs().max(r2.abs());
        Ok(Some((raw / (1.0 + inv.eval(p)?.norm()), raw)))
    })
    .map(|s| {
        CheckReport::from_metric(
            name.clone(),
            s.max,
            tol,
            s.tested,
            format!(
                "max CR residual / (1+|f|) at {}; {} points skipped where |f| < {INVERSE_SKIP:e}",
                s.location(),
                s.skipped
            ),
        )
    });
    or_error(&name, tol, r)
}

/// Entire or locally holomorphic outer functions for composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outer {
    Exp,
    Log,
    IntPow(i32),
}

impl Outer {
    pub fn apply(self, f: &Expr) -> Expr {
        match self {
            Outer::Exp => f.exp(),
            Outer::Log => f.log(),
            Outer::IntPow(p) => f.powi(p),
        }
    }
}

/// CR on `outer(f)`; counts grid points where a log argument touches the
/// principal branch cut.
pub fn check_composition(outer: Outer, f: &Expr, grid: &GridSpec, tol: f64) -> CheckReport {
    let e = outer.apply(f);
    let name = format!("composition/{e}");
    if !e.is_holomorphic() {
        return CheckReport::not_applicable(name, tol);
    }
    let r = (|| {
        let s = cr_sweep(&e, grid)?;
        let mut touched = 0;
        for p in grid.points() {
            if e.near_log_branch(p, LOG_BRANCH_ANGLE)? {
                touched += 1;
            }
        }
        let mut details = format!("max CR residual / (1+|f|) at {}", s.location());
        if touched > 0 {
            details.push_str(&format!("; log branch cut touched at {touched} points"));
        }
        Ok(CheckReport::from_metric(name.clone(), s.max, tol, s.tested, details))
    })();
    or_error(&name, tol, r)
}

/// Pointwise `|a - b| / (1 + |b|)`.
pub fn check_identity(a: &Expr, b: &Expr, grid: &GridSpec, tol: f64) -> CheckReport {
    let name = format!("identity/{a} = {b}");
    let r = sweep(&grid.points(), |p| {
        let y = b.eval(p)?;
        let raw = (a.eval(p)? - y).norm();
        Ok(Some((raw / (1.0 + y.norm()), raw)))
    })
    .map(|s| {
        CheckReport::from_metric(
            name.clone(),
            s.max,
            tol,
            s.tested,
            format!("max |a-b| / (1+|b|) at {}", s.location()),
        )
    });
    or_error(&name, tol, r)
}

/// Exact angular Laplacians of the real and imaginary parts at `p`.
pub fn harmonicity_residuals(f: &Expr, p: AngularPoint) -> Result<(f64, f64)> {
    let j = f.eval_jet(p)?;
    let phi = p.phi();
    Ok((j.re().angular_laplacian(phi).re, j.im().angular_laplacian(phi).re))
}

pub fn check_harmonicity(f: &Expr, grid: &GridSpec, tol: f64) -> CheckReport {
    let name = format!("harmonicity/{f}");
    let r = sweep(&grid.points(), |p| {
        let (lu, lv) = harmonicity_residuals(f, p)?;
        let raw = lu.abs().max(lv.abs());
        Ok(Some((raw / (1.0 + f.eval(p)?.norm()), raw)))
    })
    .map(|s| {
        CheckReport::from_metric(
            name.clone(),
            s.max,
            tol,
            s.tested,
            format!(
                "max(|Lu|, |Lv|) / (1+|f|) at {}; unscaled value there {:e}",
                s.location(),
                s.raw_at_max
            ),
        )
    });
    or_error(&name, tol, r)
}

pub fn check_gradient_orthogonality(f: &Expr, grid: &GridSpec, tol: f64) -> CheckReport {
    let name = format!("orthogonality/{f}");
    let r = sweep(&grid.points(), |p| {
        let raw = operators::gradient_dot_exact(f, p)?.abs();
        let scale = 1.0 + f.eval(p)?.norm();
        Ok(Some((raw / (scale * scale), raw)))
    })
    .map(|s| {
        CheckReport::from_metric(
            name.clone(),
            s.max,
            tol,
            s.tested,
            format!(
                "max |grad u . grad v| / (1+|f|)^2 at {}; unscaled value there {:e}",
                s.location(),
                s.raw_at_max
            ),
        )
    });
    or_error(&name, tol, r)
}

/// The three halving steps used by the finite-difference checks.
pub fn step_sequence(h: f64) -> [f64; 3] {
    [h, 0.5 * h, 0.25 * h]
}

/// Maximum over the grid of `|Lambda f - (1/sin^2) Dbar D f| / (1 + |f|)`
/// for each step of `hs`.
pub fn factorization_discrepancies<F>(f: &F, points: &[AngularPoint], hs: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(AngularPoint) -> Result<ComplexValue>,
{
    discrepancies(f, points, hs, |f, p, s| operators::factorized_laplacian(f, p, s))
}

/// `(1/sin^2) D(D f)` by nested stencils.
fn d_d<F>(f: &F, p: AngularPoint, s: &StencilSpec) -> Result<ComplexValue>
where
    F: Fn(AngularPoint) -> Result<ComplexValue>,
{
    let sn = p.phi().sin();
    Ok(operators::apply_d(|q| operators::apply_d(f, q, s), p, s)? / (sn * sn))
}

fn discrepancies<F, O>(f: &F, points: &[AngularPoint], hs: &[f64], other: O) -> Result<Vec<f64>>
where
    F: Fn(AngularPoint) -> Result<ComplexValue>,
    O: Fn(&F, AngularPoint, &StencilSpec) -> Result<ComplexValue>,
{
    hs.iter()
        .map(|&h| {
            let s = StencilSpec::uniform(StencilOrder::Second, h)?;
            let sw = sweep(points, |p| {
                let a = operators::angular_laplacian(f, p, &s)?;
                let b = other(f, p, &s)?;
                let raw = (a - b).norm();
                Ok(Some((raw / (1.0 + f(p)?.norm()), raw)))
            })?;
            Ok(sw.max)
        })
        .collect()
}

/// Model-based comparison of the direct and factorized stencils: passes when
/// the fitted order of the discrepancy is within `band` of 2.
pub fn check_factorization<F>(label: &str, f: F, grid: &GridSpec, h: f64, band: f64) -> CheckReport
where
    F: Fn(AngularPoint) -> Result<ComplexValue>,
{
    let name = format!("factorization/{label}");
    let hs = step_sequence(h);
    let r = factorization_discrepancies(&f, &grid.points(), &hs).map(|d| {
        model_report(name.clone(), &hs, &d, 2.0, band, grid.len(), "discrepancy")
    });
    or_error(&name, band, r)
}

/// The same comparison with `D` in place of `Dbar` in the outer factor.
pub fn check_factorization_wrong_factor<F>(label: &str, f: F, grid: &GridSpec, h: f64, band: f64) -> CheckReport
where
    F: Fn(AngularPoint) -> Result<ComplexValue>,
{
    let name = format!("factorization/{label} with D D");
    let hs = step_sequence(h);
    let r = discrepancies(&f, &grid.points(), &hs, |f, p, s| d_d(f, p, s)).map(|d| {
        model_report(name.clone(), &hs, &d, 2.0, band, grid.len(), "discrepancy")
    });
    or_error(&name, band, r)
}

/// Discrepancies whose largest value stays below this are rounding noise.
const FD_FLOOR: f64 = 1e-10;

/// Fits `err = C h^p` to the step sequence. The metric is the distance of
/// the fitted `p` from `order`, or 0 when every error is at rounding level.
fn model_report(
    name: String,
    hs: &[f64],
    errs: &[f64],
    order: f64,
    band: f64,
    points: usize,
    what: &str,
) -> CheckReport {
    let listed: Vec<String> = hs
        .iter()
        .zip(errs)
        .map(|(h, e)| format!("h={h:e}: {e:e}"))
        .collect();
    let listed = listed.join(", ");
    if errs.iter().all(|e| *e <= FD_FLOOR) {
        return CheckReport::from_metric(
            name,
            0.0,
            band,
            points * hs.len(),
            format!("max {what} at rounding level; {listed}"),
        );
    }
    let slope = fitted_slope(hs, errs);
    let constant = errs.last().copied().unwrap_or(f64::NAN) / hs.last().copied().unwrap_or(1.0).powf(order);
    CheckReport::from_metric(
        name,
        (slope - order).abs(),
        band,
        points * hs.len(),
        format!("fitted order {slope:.4} (model {order}); max {what}/h^{order} at smallest step {constant:e}; {listed}"),
    )
}

/// Relative phi quadrature error against a claimed closed form.
fn phi_report(name: String, integrand_idx: FamilyIndex, closed: f64, tol: f64) -> CheckReport {
    let r = quadrature::integrate_phi_singular_tan(
        |t| family::phi_integrand(integrand_idx, t),
        integrand_idx.phi_singularity(),
        (0.1 * tol).max(QUAD_TOL_FLOOR),
    )
    .map(|q| {
        CheckReport::from_metric(
            name.clone(),
            (q.value - closed).abs() / closed.abs(),
            tol,
            q.evaluations,
            format!(
                "quadrature {:.15e} (est. error {:e}), closed form {:.15e}",
                q.value, q.abs_error_estimate, closed
            ),
        )
    });
    or_error(&name, tol, r)
}

/// `int tan(phi/2)^{2k/m} sin(phi) dphi` against `2k pi / (m sin(k pi/m))`.
pub fn check_phi_integral(idx: FamilyIndex, tol: f64) -> CheckReport {
    phi_report(
        format!("phi_integral/k={},m={}", idx.k(), idx.m()),
        idx,
        family::phi_integral_closed_form(idx),
        tol,
    )
}

/// Quadrature for `idx` compared with the closed form of another index.
pub fn check_phi_integral_mismatched(idx: FamilyIndex, claimed: FamilyIndex, tol: f64) -> CheckReport {
    phi_report(
        format!(
            "phi_integral/k={},m={} vs closed form k={},m={}",
            idx.k(),
            idx.m(),
            claimed.k(),
            claimed.m()
        ),
        idx,
        family::phi_integral_closed_form(claimed),
        tol,
    )
}

fn norm_report(name: String, rp: RadialParams, idx: FamilyIndex, scale: f64, tol: f64) -> CheckReport {
    let g = family::g_km(rp, idx);
    let r = quadrature::r3_norm_sq(
        |q| g.eval(q) * scale,
        idx.phi_singularity(),
        rp.n(),
        (0.1 * tol).max(QUAD_TOL_FLOOR),
    )
    .map(|q| {
        CheckReport::from_metric(
            name.clone(),
            (q.value - 1.0).abs(),
            tol,
            q.evaluations,
            format!(
                "squared norm {:.12e} (est. error {:e}); normalization constant {:.12e}",
                q.value,
                q.abs_error_estimate,
                g.normalization() * scale
            ),
        )
    });
    or_error(&name, tol, r)
}

/// `| ||g_{k/m}||^2 - 1 |` over R^3.
pub fn check_unit_norm(rp: RadialParams, idx: FamilyIndex, tol: f64) -> CheckReport {
    norm_report(
        format!("unit_norm/n={},k={},m={}", rp.n(), idx.k(), idx.m()),
        rp,
        idx,
        1.0,
        tol,
    )
}

/// Norm of `g_{k/m}` with its normalization constant removed.
pub fn check_unit_norm_unnormalized(rp: RadialParams, idx: FamilyIndex, tol: f64) -> CheckReport {
    let g = family::g_km(rp, idx);
    norm_report(
        format!("unit_norm/n={},k={},m={} without normalization", rp.n(), idx.k(), idx.m()),
        rp,
        idx,
        1.0 / g.normalization(),
        tol,
    )
}

/// `(-Delta + nu)(g h)` at `q`, with exact radial derivatives of `g` and a
/// stencil angular Laplacian of `h`.
pub fn schrodinger_residual<G, V, H>(g: G, nu: V, h: H, q: Point3D, s: &StencilSpec) -> Result<ComplexValue>
where
    G: Fn(f64) -> RadialJet,
    V: Fn(f64) -> Result<f64>,
    H: Fn(AngularPoint) -> Result<ComplexValue>,
{
    let lap = operators::laplacian3d_separable(&g, &h, q, s)?;
    let f = h(q.angles())? * g(q.r()).value;
    Ok(-lap + f * nu(q.r())?)
}

/// Residual of `g_{k/m}` under the potential of `potential_params` relative
/// to `|g|`, maximized over `radii x points`, one value per step in `hs`.
pub fn schrodinger_residuals(
    rp: RadialParams,
    potential_params: RadialParams,
    idx: FamilyIndex,
    points: &[AngularPoint],
    radii: &[f64],
    hs: &[f64],
) -> Result<Vec<f64>> {
    let g = family::g_km(rp, idx);
    hs.iter()
        .map(|&h| {
            let s = StencilSpec::uniform(StencilOrder::Second, h)?;
            let mut worst = 0.0f64;
            for &r in radii {
                for &p in points {
                    let q = Point3D::from_parts(r, p)?;
                    let res = schrodinger_residual(
                        |r| g.radial_part(r),
                        |r| family::potential_nu(potential_params, r),
                        |a| g.angular_value(a),
                        q,
                        &s,
                    )?;
                    let rel = res.norm() / g.eval(q).norm();
                    worst = if rel.is_nan() { rel } else { worst.max(rel) };
                }
            }
            Ok(worst)
        })
        .collect()
}

fn schrodinger_report(
    name: String,
    rp: RadialParams,
    potential_params: RadialParams,
    idx: FamilyIndex,
    grid: &GridSpec,
    radii: &[f64],
    h: f64,
    band: f64,
) -> CheckReport {
    let hs = step_sequence(h);
    let r = schrodinger_residuals(rp, potential_params, idx, &grid.points(), radii, &hs).map(|e| {
        model_report(
            name.clone(),
            &hs,
            &e,
            2.0,
            band,
            grid.len() * radii.len(),
            "relative residual",
        )
    });
    or_error(&name, band, r)
}

/// Stencil residual of `(-Delta + nu) g_{k/m}`; passes when its fitted order\n/// is within `band` of 2.
pub fn check_schrodinger(
    rp: RadialParams,
    idx: FamilyIndex,
    grid: &GridSpec,
    radii: &[f64],
    h: f64,
    band: f64,
) -> CheckReport {
    schrodinger_report(
        format!("schrodinger/n={},k={},m={}", rp.n(), idx.k(), idx.m()),
        rp,
        rp,
        idx,
        grid,
        radii,
        h,
        band,
    )
}

/// `h = 1`, `g = e^{-nr}`: the radial equation with exact derivatives,
/// relative residual maximized over `radii`.
pub fn check_radial_schrodinger(rp: RadialParams, radii: &[f64], tol: f64) -> CheckReport {
    let name = format!("schrodinger/radial n={}", rp.n());
    let r = (|| {
        let s = StencilSpec::uniform(StencilOrder::Second, 1e-2)?;
        let p = AngularPoint::new(PI, 0.5 * PI)?;
        let mut worst = 0.0f64;
        for &r in radii {
            let q = Point3D::from_parts(r, p)?;
            let res = schrodinger_residual(
                |r| family::radial_jet(rp, r),
                |r| family::potential_nu(rp, r),
                |_| Ok(ComplexValue::new(1.0, 0.0)),
                q,
                &s,
            )?;
            worst = worst.max(res.norm() / family::radial_solution(rp, r));
        }
        Ok(CheckReport::from_metric(
            name.clone(),
            worst,
            tol,
            radii.len(),
            "max |(-Delta + nu) e^{-nr}| / e^{-nr}".into(),
        ))
    })();
    or_error(&name, tol, r)
}

/// `g_{k/m}` for scale `n` tested against the potential of scale `2n`.
pub fn check_schrodinger_wrong_potential(
    rp: RadialParams,
    idx: FamilyIndex,
    grid: &GridSpec,
    radii: &[f64],
    h: f64,
    band: f64,
) -> CheckReport {
    let wrong = RadialParams::new(2.0 * rp.n()).expect("positive");
    schrodinger_report(
        format!("schrodinger/n={},k={},m={} with potential n={}", rp.n(), idx.k(), idx.m(), wrong.n()),
        rp,
        wrong,
        idx,
        grid,
        radii,
        h,
        band,
    )
}

/// Settings for the randomized nullity test of `D`.
#[derive(Debug, Clone, Copy)]
pub struct RandomHolomorphy {
    pub seed: u64,
    pub trees: usize,
    pub points: usize,
    pub depth: usize,
    pub m_max: i32,
    pub margin: f64,
}

/// Largest modulus at which a random tree's value is still tested.
const RANDOM_VALUE_CAP: f64 = 1e12;

/// Evaluates `|D f| / (1 + |f|)` for `f` at `target` valid random points.
/// Returns `None` if too few points are valid.
fn nullity_at_random_points(f: &Expr, rng: &mut ChaCha8Rng, target: usize, margin: f64) -> Option<(f64, usize)> {
    let mut worst = 0.0f64;
    let mut ok = 0;
    for _ in 0..(20 * target) {
        if ok == target {
            break;
        }
        let p = random_point(rng, margin);
        let (v, d) = match (f.eval(p), f.symbolic_d(p)) {
            (Ok(v), Ok(d)) if v.norm() <= RANDOM_VALUE_CAP => (v, d),
            _ => continue,
        };
        ok += 1;
        let ratio = d.norm() / (1.0 + v.norm());
        worst = if ratio.is_nan() { ratio } else { worst.max(ratio) };
    }
    (ok == target).then_some((worst, ok))
}

/// Randomized trees plus every `h_{k/m}` with `m <= m_max` (both signs of k).
pub fn check_random_holomorphy(cfg: &RandomHolomorphy, tol: f64) -> CheckReport {
    let name = format!("holomorphy/random trees depth<={}", cfg.depth);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let gen = TreeGen::holomorphic(cfg.depth, cfg.m_max);
    let mut worst = 0.0f64;
    let mut worst_expr = String::new();
    let mut points = 0;
    let mut rejected = 0;

    let mut consider = |f: &Expr, ratio: f64, n: usize, worst: &mut f64, worst_expr: &mut String| {
        points += n;
        if ratio > *worst || ratio.is_nan() {
            *worst = ratio;
            *worst_expr = f.to_string();
        }
    };

    let mut members = Vec::new();
    for m in 2..=cfg.m_max {
        for k in 1..m {
            members.push(Expr::hkm(k, m).expect("in range"));
            members.push(Expr::hkm(-k, m).expect("in range"));
        }
    }
    for f in &members {
        if let Some((r, n)) = nullity_at_random_points(f, &mut rng, cfg.points, cfg.margin) {
            consider(f, r, n, &mut worst, &mut worst_expr);
        }
    }
    let mut accepted = 0;
    while accepted < cfg.trees {
        let f = gen.generate(&mut rng);
        match nullity_at_random_points(&f, &mut rng, cfg.points, cfg.margin) {
            Some((r, n)) => {
                accepted += 1;
                consider(&f, r, n, &mut worst, &mut worst_expr);
            }
            None => rejected += 1,
        }
        if rejected > 100 * cfg.trees.max(1) {
            return CheckReport::error(name, tol, "too many random trees without valid points".into());
        }
    }
    CheckReport::from_metric(
        name,
        worst,
        tol,
        points,
        format!(
            "max |D f| / (1+|f|) over {} trees and {} family members; {} trees redrawn for lack of valid points; worst {}",
            cfg.trees,
            members.len(),
            rejected,
            worst_expr
        ),
    )
}

/// `|D conj(W)| - 2|W|` at random points, relative to `1 + |W|`.
pub fn conj_w_d_identity(seed: u64, points: usize, margin: f64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cw = Expr::w().conj();
    let mut worst = 0.0f64;
    for _ in 0..points {
        let p = random_point(&mut rng, margin);
        let w = Expr::w().eval(p)?.norm();
        let d = cw.symbolic_d(p)?.norm();
        worst = worst.max((d - 2.0 * w).abs() / (1.0 + w));
    }
    if worst.is_finite() {
        Ok(worst)
    } else {
        Err(Error::NonFinite { op: "D" })
    }
}

/// Random-point nullity metric for a single expression.
pub fn check_random_nullity(f: &Expr, seed: u64, points: usize, margin: f64, tol: f64) -> CheckReport {
    let name = format!("holomorphy/{f}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match nullity_at_random_points(f, &mut rng, points, margin) {
        Some((r, n)) => CheckReport::from_metric(name, r, tol, n, "max |D f| / (1+|f|) at random points".into()),
        None => CheckReport::error(name, tol, "too few valid points".into()),
    }
}
