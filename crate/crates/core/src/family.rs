//! The separable solution family of `(-Delta + nu) f = 0` with the
//! hydrogen-like potential `nu(r) = n^2 - 2n/r`.
//!
//! `g_{k/m} = N tan(phi/2)^{k/m} e^{-(n r + i k theta / m)}` is the radial
//! solution `e^{-nr}` times the angular-holomorphic `h_{k/m}`, normalized to
//! unit L^2 norm over R^3.

use std::f64::consts::PI;

use serde::Serialize;

use crate::domain::{AngularPoint, ComplexValue, Point3D};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::operators::RadialJet;
use crate::quadrature::PhiSingularity;

/// The pair `(k, m)` with `m >= 2` and `1 <= |k| <= m - 1`, or the `k = 0`
/// member obtained by continuity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct FamilyIndex {
    k: i32,
    m: i32,
}

impl FamilyIndex {
    pub fn new(k: i32, m: i32) -> Result<Self> {
        if m >= 2 && k != 0 && (k as i64).abs() < m as i64 {
            Ok(Self { k, m })
        } else {
            Err(Error::InvalidIndex {
                k: k as i64,
                m: m as i64,
            })
        }
    }

    /// The `k = 0` member, where the closed forms are defined by their limits.
    pub fn k_zero_limit(m: i32) -> Result<Self> {
        if m >= 1 {
            Ok(Self { k: 0, m })
        } else {
            Err(Error::InvalidIndex { k: 0, m: m as i64 })
        }
    }

    pub fn k(&self) -> i32 {
        self.k
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    pub fn ratio(&self) -> f64 {
        self.k as f64 / self.m as f64
    }

    /// Endpoint behavior of `|h_{k/m}|^2 sin(phi)`.
    pub fn phi_singularity(&self) -> PhiSingularity {
        PhiSingularity::symmetric(self.ratio()).expect("|k/m| < 1 by construction")
    }

    /// `m sin(k pi / m) / k`, with its limit `pi` at `k = 0`. Even in `k`.
    fn sinc_factor(&self) -> f64 {
        if self.k == 0 {
            PI
        } else {
            let (k, m) = (self.k as f64, self.m as f64);
            m * (k * PI / m).sin() / k
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialParams {
    n: f64,
}

impl RadialParams {
    pub fn new(n: f64) -> Result<Self> {
        if n > 0.0 && n.is_finite() {
            Ok(Self { n })
        } else {
            Err(Error::InvalidArgument(format!("radial scale n must be positive, got {n}")))
        }
    }

    pub fn n(&self) -> f64 {
        self.n
    }
}

/// `nu(r) = n^2 - 2n/r`.
pub fn potential_nu(rp: RadialParams, r: f64) -> Result<f64> {
    if r > 0.0 {
        Ok(rp.n * rp.n - 2.0 * rp.n / r)
    } else {
        Err(Error::NonPositiveRadius(r))
    }
}

/// `e^{-nr}`.
pub fn radial_solution(rp: RadialParams, r: f64) -> f64 {
    (-rp.n * r).exp()
}

/// `e^{-nr}` with its exact first and second derivatives.
pub fn radial_jet(rp: RadialParams, r: f64) -> RadialJet {
    let g = radial_solution(rp, r);
    RadialJet {
        value: g,
        d1: -rp.n * g,
        d2: rp.n * rp.n * g,
    }
}

/// `h_{k/m}` as an expression; the constant 1 for the `k = 0` member.
pub fn h_km(idx: FamilyIndex) -> Expr {
    Expr::hkm(idx.k, idx.m).expect("FamilyIndex is validated")
}

/// `t^{2k/m} sin(phi)` as a function of `t = tan(phi/2)`, stable for
/// large `t`.
pub fn phi_integrand(idx: FamilyIndex, t: f64) -> f64 {
    let a2 = 2.0 * idx.ratio();
    if t <= 1.0 {
        t.powf(a2) * 2.0 * t / (1.0 + t * t)
    } else {
        let u = 1.0 / t;
        2.0 * t.powf(a2 - 1.0) / (1.0 + u * u)
    }
}

/// `int_0^pi tan(phi/2)^{2k/m} sin(phi) dphi = 2 k pi / (m sin(k pi / m))`,
/// equal to 2 at `k = 0`.
pub fn phi_integral_closed_form(idx: FamilyIndex) -> f64 {
    2.0 * PI / idx.sinc_factor()
}

/// `(1/pi) sqrt(n^3 m sin(k pi / m) / k)`, or `sqrt(n^3 / pi)` at `k = 0`.
pub fn normalization_constant(rp: RadialParams, idx: FamilyIndex) -> f64 {
    (rp.n.powi(3) * idx.sinc_factor()).sqrt() / PI
}

/// The normalized solution `g_{k/m}` for one radial scale and index.
#[derive(Debug, Clone)]
pub struct GFunction {
    rp: RadialParams,
    idx: FamilyIndex,
    norm: f64,
    angular: Expr,
}

pub fn g_km(rp: RadialParams, idx: FamilyIndex) -> GFunction {
    GFunction {
        rp,
        idx,
        norm: normalization_constant(rp, idx),
        angular: h_km(idx),
    }
}

impl GFunction {
    pub fn params(&self) -> RadialParams {
        self.rp
    }

    pub fn index(&self) -> FamilyIndex {
        self.idx
    }

    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn angular(&self) -> &Expr {
        &self.angular
    }

    /// Direct closed form `N tan(phi/2)^{k/m} e^{-(nr + i k theta/m)}`.
    pub fn eval(&self, q: Point3D) -> ComplexValue {
        let a = self.idx.ratio();
        let p = q.angles();
        let modulus = self.norm * (a * p.tan_half_phi().ln() - self.rp.n * q.r()).exp();
        ComplexValue::from_polar(modulus, -a * p.theta())
    }

    /// `N * e^{-nr} * h_{k/m}(theta, phi)` through the expression evaluator.
    pub fn eval_composed(&self, q: Point3D) -> Result<ComplexValue> {
        Ok(self.angular_value(q.angles())? * (self.norm * radial_solution(self.rp, q.r())))
    }

    pub fn angular_value(&self, p: AngularPoint) -> Result<ComplexValue> {
        self.angular.eval(p)
    }

    /// `N e^{-nr}` and its radial derivatives.
    pub fn radial_part(&self, r: f64) -> RadialJet {
        let j = radial_jet(self.rp, r);
        RadialJet {
            value: self.norm * j.value,
            d1: self.norm * j.d1,
            d2: self.norm * j.d2,
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;

    #[test]
    fn index_validation() {
        assert!(FamilyIndex::new(1, 2).is_ok());
        assert!(FamilyIndex::new(-1, 2).is_ok());
        assert_eq!(FamilyIndex::new(3, 2), Err(Error::InvalidIndex { k: 3, m: 2 }));
        assert!(FamilyIndex::new(0, 3).is_err());
        assert!(FamilyIndex::new(1, 1).is_err());
        assert_eq!(FamilyIndex::k_zero_limit(5).unwrap().k(), 0);
    }

    #[test]
    fn potential_examples() {
        let one = RadialParams::new(1.0).unwrap();
        assert_eq!(potential_nu(one, 2.0).unwrap(), 0.0);
        assert_eq!(potential_nu(one, 1.0).unwrap(), -1.0);
        let two = RadialParams::new(2.0).unwrap();
        assert!((potential_nu(two, 1e12).unwrap() - 4.0).abs() < 1e-11);
        assert!(potential_nu(one, 0.0).is_err());
        assert!(RadialParams::new(0.0).is_err());
    }

    #[test]
    fn radial_solution_examples() {
        let one = RadialParams::new(1.0).unwrap();
        assert_eq!(radial_solution(one, 0.0), 1.0);
        assert!((radial_solution(one, 1.0) - 0.367_879_441_171_442_3).abs() < 1e-15);
        let r = 0.5;
        let j = radial_jet(one, r);
        let residual = j.d2 + 2.0 * j.d1 / r - potential_nu(one, r).unwrap() * j.value;
        assert!(residual.abs() < 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        let i12 = FamilyIndex::new(1, 2).unwrap();
        assert!((phi_integral_closed_form(i12) - PI).abs() < 1e-15);
        assert_eq!(phi_integral_closed_form(FamilyIndex::k_zero_limit(4).unwrap()), 2.0);
        let neg = FamilyIndex::new(-1, 2).unwrap();
        assert!((phi_integral_closed_form(neg) - PI).abs() < 1e-15);
        let i56 = FamilyIndex::new(5, 6).unwrap();
        assert!((phi_integral_closed_form(i56) - 10.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn normalization_examples() {
        let i12 = FamilyIndex::new(1, 2).unwrap();
        let one = RadialParams::new(1.0).unwrap();
        assert!((normalization_constant(one, i12) - 2f64.sqrt() / PI).abs() < 1e-15);
        let k0 = FamilyIndex::k_zero_limit(3).unwrap();
        assert!((normalization_constant(one, k0) - (1.0 / PI).sqrt()).abs() < 1e-15);
        let four = RadialParams::new(4.0).unwrap();
        assert!((normalization_constant(four, i12) - 8.0 * 2f64.sqrt() / PI).abs() < 1e-14);
    }

    #[test]
    fn g_examples() {
        let g = g_km(RadialParams::new(1.0).unwrap(), FamilyIndex::new(1, 2).unwrap());
        let q = Point3D::new(1e-300, PI, FRAC_PI_2).unwrap();
        let expected = ComplexValue::new(0.0, -(2f64.sqrt() / PI));
        assert!((g.eval(q) - expected).norm() < 1e-15);
        let a = g.eval(Point3D::new(0.7, PI / 4.0, 1.2).unwrap()).norm();
        let b = g.eval(Point3D::new(0.7, 3.0 * PI / 4.0, 1.2).unwrap()).norm();
        assert!((a - b).abs() < 1e-15);
        let far = g.eval(Point3D::new(60.0, 1.0, 1.0).unwrap()).norm();
        assert!(far < 1e-25);
    }

    #[test]
    fn h_km_is_holomorphic_expr() {
        let h = h_km(FamilyIndex::new(2, 3).unwrap());
        assert!(h.is_holomorphic());
        let p = AngularPoint::new(1.3, 2.1).unwrap();
        assert!(h.symbolic_d(p).unwrap().norm() < 1e-13);
        assert_eq!(h_km(FamilyIndex::k_zero_limit(3).unwrap()), Expr::real(1.0));
    }
}
