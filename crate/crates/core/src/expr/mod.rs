//! Immutable expression trees for closed-form angular functions.
//!
//! Leaves are constants and the primitive angular-holomorphic functions
//! `zeta = theta + i ln tan(phi/2)`, `W = tan(phi/2) e^{-i theta}` and
//! `h_{k/m} = tan(phi/2)^{k/m} e^{-i k theta / m}`. Interior nodes are the
//! algebra operations plus composition with `exp`, principal `log` and
//! integer powers. `conj` is the only node that breaks holomorphy.
//!
//! Rational powers appear only inside `h_{k/m}`, where the base
//! `tan(phi/2)` is real and positive, so no branch tracking is needed.

mod jet;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

pub use jet::Jet2;

use crate::domain::{AngularPoint, ComplexValue};
use crate::error::{Error, Result};

const I: ComplexValue = ComplexValue::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(ComplexValue),
    Zeta,
    W,
    Hkm { k: i32, m: i32 },
    Add(Expr, Expr),
    Mul(Expr, Expr),
    Inv(Expr),
    Exp(Expr),
    Log(Expr),
    IntPow(Expr, i32),
    Conj(Expr),
}

/// Shared, immutable expression tree. Cloning is a reference-count bump.
#[derive(Clone)]
pub struct Expr {
    node: Arc<Node>,
    holomorphic: bool,
    depth: usize,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.node, &other.node) || self.node == other.node
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.node.fmt(f)
    }
}

impl Expr {
    fn leaf(node: Node) -> Self {
        Self {
            node: Arc::new(node),
            holomorphic: true,
            depth: 1,
        }
    }

    fn unary(node: Node, child: &Expr, holomorphic: bool) -> Self {
        Self {
            node: Arc::new(node),
            holomorphic: holomorphic && child.holomorphic,
            depth: child.depth + 1,
        }
    }

    fn binary(node: Node, l: &Expr, r: &Expr) -> Self {
        Self {
            node: Arc::new(node),
            holomorphic: l.holomorphic && r.holomorphic,
            depth: l.depth.max(r.depth) + 1,
        }
    }

    /// Signed zeros are normalized to `+0.0`.
    pub fn constant(c: ComplexValue) -> Self {
        Self::leaf(Node::Const(ComplexValue::new(c.re + 0.0, c.im + 0.0)))
    }

    pub fn real(x: f64) -> Self {
        Self::constant(ComplexValue::new(x, 0.0))
    }

    pub fn i() -> Self {
        Self::constant(I)
    }

    pub fn zeta() -> Self {
        Self::leaf(Node::Zeta)
    }

    pub fn w() -> Self {
        Self::leaf(Node::W)
    }

    /// `h_{k/m}`. Requires `m >= 1` and `|k| <= m - 1`; `k = 0` yields the
    /// constant 1.
    pub fn hkm(k: i32, m: i32) -> Result<Self> {
        if m < 1 || (k as i64).abs() > m as i64 - 1 {
            return Err(Error::InvalidIndex {
                k: k as i64,
                m: m as i64,
            });
        }
        if k == 0 {
            return Ok(Self::real(1.0));
        }
        Ok(Self::leaf(Node::Hkm { k, m }))
    }

    pub fn inv(&self) -> Self {
        Self::unary(Node::Inv(self.clone()), self, true)
    }

    pub fn exp(&self) -> Self {
        Self::unary(Node::Exp(self.clone()), self, true)
    }

    pub fn log(&self) -> Self {
        Self::unary(Node::Log(self.clone()), self, true)
    }

    pub fn powi(&self, p: i32) -> Self {
        Self::unary(Node::IntPow(self.clone(), p), self, true)
    }

    pub fn conj(&self) -> Self {
        Self::unary(Node::Conj(self.clone()), self, false)
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    /// False iff the tree contains a `conj` node.
    pub fn is_holomorphic(&self) -> bool {
        self.holomorphic
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn eval(&self, p: AngularPoint) -> Result<ComplexValue> {
        let v = match self.node.as_ref() {
            Node::Const(c) => *c,
            Node::Zeta => ComplexValue::new(p.theta(), p.tan_half_phi().ln()),
            Node::W => hkm_value(1.0, p),
            Node::Hkm { k, m } => hkm_value(*k as f64 / *m as f64, p),
            Node::Add(l, r) => l.eval(p)? + r.eval(p)?,
            Node::Mul(l, r) => l.eval(p)? * r.eval(p)?,
            Node::Inv(x) => nonzero(x.eval(p)?, "inv")?.inv(),
            Node::Exp(x) => x.eval(p)?.exp(),
            Node::Log(x) => nonzero(x.eval(p)?, "log")?.ln(),
            Node::IntPow(x, n) => {
                let v = x.eval(p)?;
                if *n < 0 {
                    nonzero(v, "pow")?;
                }
                v.powi(*n)
            }
            Node::Conj(x) => x.eval(p)?.conj(),
        };
        finite(v, self.op_name())
    }

    /// Value and exact partials up to second order at `p`.
    pub fn eval_jet(&self, p: AngularPoint) -> Result<Jet2> {
        let jet = match self.node.as_ref() {
            Node::Const(c) => Jet2::constant(*c),
            Node::Zeta => zeta_jet(p),
            Node::W => hkm_jet(1.0, p),
            Node::Hkm { k, m } => hkm_jet(*k as f64 / *m as f64, p),
            Node::Add(l, r) => l.eval_jet(p)? + r.eval_jet(p)?,
            Node::Mul(l, r) => l.eval_jet(p)? * r.eval_jet(p)?,
            Node::Inv(x) => {
                let j = x.eval_jet(p)?;
                let g = nonzero(j.value, "inv")?.inv();
                j.compose(g, -g * g, 2.0 * g * g * g)
            }
            Node::Exp(x) => {
                let j = x.eval_jet(p)?;
                let g = j.value.exp();
                j.compose(g, g, g)
            }
            Node::Log(x) => {
                let j = x.eval_jet(p)?;
                let v = nonzero(j.value, "log")?;
                let r = v.inv();
                j.compose(v.ln(), r, -r * r)
            }
            Node::IntPow(x, n) => {
                let j = x.eval_jet(p)?;
                intpow_jet(&j, *n)?
            }
            Node::Conj(x) => x.eval_jet(p)?.conj(),
        };
        if jet.is_finite() {
            Ok(jet)
        } else {
            Err(Error::NonFinite {
                op: self.op_name(),
            })
        }
    }

    /// `(d/dtheta + i sin(phi) d/dphi) f` at `p`, from exact partials.
    pub fn symbolic_d(&self, p: AngularPoint) -> Result<ComplexValue> {
        Ok(self.eval_jet(p)?.d_operator(p.phi()))
    }

    /// True if some `log` node's argument at `p` lies within `angle_tol` of
    /// the negative real axis (the principal-branch cut).
    pub fn near_log_branch(&self, p: AngularPoint, angle_tol: f64) -> Result<bool> {
        Ok(match self.node.as_ref() {
            Node::Const(_) | Node::Zeta | Node::W | Node::Hkm { .. } => false,
            Node::Add(l, r) | Node::Mul(l, r) => {
                l.near_log_branch(p, angle_tol)? || r.near_log_branch(p, angle_tol)?
            }
            Node::Log(x) => {
                let v = x.eval(p)?;
                x.near_log_branch(p, angle_tol)?
                    || std::f64::consts::PI - v.arg().abs() <= angle_tol
            }
            Node::Inv(x) | Node::Exp(x) | Node::IntPow(x, _) | Node::Conj(x) => {
                x.near_log_branch(p, angle_tol)?
            }
        })
    }

    fn op_name(&self) -> &'static str {
        match self.node.as_ref() {
            Node::Const(_) => "const",
            Node::Zeta => "zeta",
            Node::W => "W",
            Node::Hkm { .. } => "h",
            Node::Add(..) => "add",
            Node::Mul(..) => "mul",
            Node::Inv(_) => "inv",
            Node::Exp(_) => "exp",
            Node::Log(_) => "log",
            Node::IntPow(..) => "pow",
            Node::Conj(_) => "conj",
        }
    }
}

fn nonzero(v: ComplexValue, op: &'static str) -> Result<ComplexValue> {
    if v.re == 0.0 && v.im == 0.0 {
        Err(Error::SingularValue { op })
    } else {
        Ok(v)
    }
}

fn finite(v: ComplexValue, op: &'static str) -> Result<ComplexValue> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { op })
    }
}

/// `tan(phi/2)^a e^{-i a theta}` with the real positive base.
fn hkm_value(a: f64, p: AngularPoint) -> ComplexValue {
    let modulus = (a * p.tan_half_phi().ln()).exp();
    ComplexValue::from_polar(modulus, -a * p.theta())
}

fn hkm_jet(a: f64, p: AngularPoint) -> Jet2 {
    let h = hkm_value(a, p);
    let (s, c) = p.phi().sin_cos();
    Jet2 {
        value: h,
        d_theta: -I * a * h,
        d_phi: a * h / s,
        d_theta_theta: -(a * a) * h,
        d_theta_phi: -I * (a * a) * h / s,
        d_phi_phi: a * (a - c) * h / (s * s),
    }
}

fn zeta_jet(p: AngularPoint) -> Jet2 {
    let (s, c) = p.phi().sin_cos();
    Jet2 {
        value: ComplexValue::new(p.theta(), p.tan_half_phi().ln()),
        d_theta: ComplexValue::new(1.0, 0.0),
        d_phi: I / s,
        d_theta_theta: ComplexValue::new(0.0, 0.0),
        d_theta_phi: ComplexValue::new(0.0, 0.0),
        d_phi_phi: -I * c / (s * s),
    }
}

fn intpow_jet(j: &Jet2, n: i32) -> Result<Jet2> {
    if n == 0 {
        return Ok(Jet2::constant(ComplexValue::new(1.0, 0.0)));
    }
    let v = j.value;
    if n < 0 {
        nonzero(v, "pow")?;
    }
    let nf = n as f64;
    let g1 = nf * v.powi(n - 1);
    let g2 = if n == 1 {
        ComplexValue::new(0.0, 0.0)
    } else {
        nf * (nf - 1.0) * v.powi(n - 2)
    };
    Ok(j.compose(v.powi(n), g1, g2))
}

impl Add for Expr {
    type Output = Expr;

    fn add(self, rhs: Expr) -> Expr {
        Expr::binary(Node::Add(self.clone(), rhs.clone()), &self, &rhs)
    }
}

impl Mul for Expr {
    type Output = Expr;

    fn mul(self, rhs: Expr) -> Expr {
        Expr::binary(Node::Mul(self.clone(), rhs.clone()), &self, &rhs)
    }
}

impl Neg for Expr {
    type Output = Expr;

    fn neg(self) -> Expr {
        Expr::real(-1.0) * self
    }
}

impl Sub for Expr {
    type Output = Expr;

    fn sub(self, rhs: Expr) -> Expr {
        self + (-rhs)
    }
}

impl Div for Expr {
    type Output = Expr;

    fn div(self, rhs: Expr) -> Expr {
        self * rhs.inv()
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;

    fn pt(theta: f64, phi: f64) -> AngularPoint {
        AngularPoint::new(theta, phi).unwrap()
    }

    fn close(a: ComplexValue, b: ComplexValue, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn eval_primitives() {
        let z = Expr::zeta().eval(pt(1.0, FRAC_PI_2)).unwrap();
        assert!(close(z, ComplexValue::new(1.0, 0.0), 1e-15));
        let w = Expr::w().eval(pt(FRAC_PI_2, FRAC_PI_2)).unwrap();
        assert!(close(w, ComplexValue::new(0.0, -1.0), 1e-15));
        let h = Expr::hkm(1, 2).unwrap().eval(pt(PI, FRAC_PI_2)).unwrap();
        assert!(close(h, ComplexValue::new(0.0, -1.0), 1e-15));
    }

    #[test]
    fn hkm_index_rules() {
        assert_eq!(Expr::hkm(0, 5).unwrap(), Expr::real(1.0));
        assert!(Expr::hkm(3, 2).is_err());
        assert!(Expr::hkm(-2, 2).is_err());
        assert!(Expr::hkm(1, 0).is_err());
        assert!(Expr::hkm(-3, 4).is_ok());
    }

    #[test]
    fn jet_examples() {
        let p = pt(FRAC_PI_2, FRAC_PI_2);
        let j = Expr::w().eval_jet(p).unwrap();
        assert!(close(j.d_theta, ComplexValue::new(-1.0, 0.0), 1e-15));
        let jz = Expr::zeta().eval_jet(pt(0.3, 2.2)).unwrap();
        assert_eq!(jz.d_theta, ComplexValue::new(1.0, 0.0));
        let d = Expr::w().conj().symbolic_d(p).unwrap();
        assert!(close(d, ComplexValue::new(-2.0, 0.0), 1e-14), "{d}");
    }

    #[test]
    fn d_annihilates_closure_examples() {
        let w = Expr::w();
        let e1 = w.clone() * w.clone();
        let e2 = (Expr::constant(-I) * Expr::zeta()).exp();
        for p in [pt(0.4, 0.3), pt(3.0, 1.7), pt(5.9, 2.9)] {
            for e in [&e1, &e2] {
                let d = e.symbolic_d(p).unwrap();
                assert!(d.norm() <= 1e-13 * (1.0 + e.eval(p).unwrap().norm()), "{d}");
            }
            assert!(close(e2.eval(p).unwrap(), w.eval(p).unwrap(), 1e-13));
        }
    }

    #[test]
    fn holomorphic_flag_propagates() {
        let e = Expr::w() + Expr::zeta().exp();
        assert!(e.is_holomorphic());
        let c = e.clone() * Expr::w().conj();
        assert!(!c.is_holomorphic());
        assert!(!c.inv().is_holomorphic());
        assert_eq!(c.depth(), 4);
    }

    #[test]
    fn singular_arguments() {
        let zero = Expr::real(0.0);
        let p = pt(1.0, 1.0);
        assert_eq!(zero.inv().eval(p), Err(Error::SingularValue { op: "inv" }));
        assert_eq!(zero.log().eval_jet(p), Err(Error::SingularValue { op: "log" }));
        assert_eq!(zero.powi(-2).eval(p), Err(Error::SingularValue { op: "pow" }));
        assert!(zero.powi(1).eval_jet(p).is_ok());
        assert!(Expr::real(800.0).exp().eval(p).is_err());
    }

    #[test]
    fn log_branch_detection() {
        let p = pt(1.0, 1.0);
        assert!(Expr::real(-2.0).log().near_log_branch(p, 1e-9).unwrap());
        assert!(!Expr::w().log().near_log_branch(p, 1e-9).unwrap());
        // W = tan(phi/2) e^{-i theta} hits the negative axis at theta = pi
        assert!(Expr::w().log().near_log_branch(pt(PI, 1.0), 1e-9).unwrap());
    }

    #[test]
    fn hkm_squared_is_w() {
        let h = Expr::hkm(1, 2).unwrap();
        let sq = h.clone() * h;
        for p in [pt(0.2, 0.2), pt(4.0, 2.0)] {
            assert!(close(sq.eval(p).unwrap(), Expr::w().eval(p).unwrap(), 1e-13));
        }
    }
}
