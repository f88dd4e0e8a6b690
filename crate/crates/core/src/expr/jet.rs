//! Second-order jets in (theta, phi).
//!
//! A [`Jet2`] carries a complex value together with its exact first and
//! second partial derivatives. Arithmetic on jets is the chain and product
//! rule, so evaluating an expression tree on jets yields exact partials up
//! to rounding.

use std::ops::{Add, Mul};

use crate::domain::ComplexValue;

const ZERO: ComplexValue = ComplexValue::new(0.0, 0.0);
const I: ComplexValue = ComplexValue::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: ComplexValue,
    pub d_theta: ComplexValue,
    pub d_phi: ComplexValue,
    pub d_theta_theta: ComplexValue,
    pub d_theta_phi: ComplexValue,
    pub d_phi_phi: ComplexValue,
}

impl Jet2 {
    pub fn constant(value: ComplexValue) -> Self {
        Self {
            value,
            d_theta: ZERO,
            d_phi: ZERO,
            d_theta_theta: ZERO,
            d_theta_phi: ZERO,
            d_phi_phi: ZERO,
        }
    }

    /// Applies a scalar function with known value, first and second
    /// derivative at `self.value` (Faa di Bruno to second order).
    pub fn compose(&self, g: ComplexValue, g1: ComplexValue, g2: ComplexValue) -> Self {
        Self {
            value: g,
            d_theta: g1 * self.d_theta,
            d_phi: g1 * self.d_phi,
            d_theta_theta: g2 * self.d_theta * self.d_theta + g1 * self.d_theta_theta,
            d_theta_phi: g2 * self.d_theta * self.d_phi + g1 * self.d_theta_phi,
            d_phi_phi: g2 * self.d_phi * self.d_phi + g1 * self.d_phi_phi,
        }
    }

    pub fn scale(&self, c: ComplexValue) -> Self {
        Self {
            value: c * self.value,
            d_theta: c * self.d_theta,
            d_phi: c * self.d_phi,
            d_theta_theta: c * self.d_theta_theta,
            d_theta_phi: c * self.d_theta_phi,
            d_phi_phi: c * self.d_phi_phi,
        }
    }

    /// Entrywise complex conjugate. Partials in the real variables commute
    /// with conjugation, so this is the jet of the conjugate function.
    pub fn conj(&self) -> Self {
        Self {
            value: self.value.conj(),
            d_theta: self.d_theta.conj(),
            d_phi: self.d_phi.conj(),
            d_theta_theta: self.d_theta_theta.conj(),
            d_theta_phi: self.d_theta_phi.conj(),
            d_phi_phi: self.d_phi_phi.conj(),
        }
    }

    /// Real part of every entry, as a jet with zero imaginary parts.
    pub fn re(&self) -> Self {
        let re = |z: ComplexValue| ComplexValue::new(z.re, 0.0);
        Self {
            value: re(self.value),
            d_theta: re(self.d_theta),
            d_phi: re(self.d_phi),
            d_theta_theta: re(self.d_theta_theta),
            d_theta_phi: re(self.d_theta_phi),
            d_phi_phi: re(self.d_phi_phi),
        }
    }

    /// Imaginary part of every entry, as a jet with zero imaginary parts.
    pub fn im(&self) -> Self {
        let im = |z: ComplexValue| ComplexValue::new(z.im, 0.0);
        Self {
            value: im(self.value),
            d_theta: im(self.d_theta),
            d_phi: im(self.d_phi),
            d_theta_theta: im(self.d_theta_theta),
            d_theta_phi: im(self.d_theta_phi),
            d_phi_phi: im(self.d_phi_phi),
        }
    }

    /// `d_theta + i sin(phi) d_phi`.
    pub fn d_operator(&self, phi: f64) -> ComplexValue {
        self.d_theta + I * phi.sin() * self.d_phi
    }

    /// `d_theta - i sin(phi) d_phi`.
    pub fn dbar_operator(&self, phi: f64) -> ComplexValue {
        self.d_theta - I * phi.sin() * self.d_phi
    }

    /// `(1/sin^2 phi) d_theta_theta + d_phi_phi + cot(phi) d_phi`.
    pub fn angular_laplacian(&self, phi: f64) -> ComplexValue {
        let (s, c) = phi.sin_cos();
        self.d_theta_theta / (s * s) + self.d_phi_phi + self.d_phi * (c / s)
    }

    /// `(1/sin^2 phi) Dbar(D f)`, expanded by differentiating `D f` term by term.
    ///
    /// The mixed terms cancel only numerically, so this route is not
    /// algebraically identical to [`Jet2::angular_laplacian`].
    pub fn factorized_laplacian(&self, phi: f64) -> ComplexValue {
        let (s, c) = phi.sin_cos();
        // D f = f_t + i s f_p
        let df_theta = self.d_theta_theta + I * s * self.d_theta_phi;
        let df_phi = self.d_theta_phi + I * c * self.d_phi + I * s * self.d_phi_phi;
        (df_theta - I * s * df_phi) / (s * s)
    }

    pub fn is_finite(&self) -> bool {
        [
            self.value,
            self.d_theta,
            self.d_phi,
            self.d_theta_theta,
            self.d_theta_phi,
            self.d_phi_phi,
        ]
        .iter()
        .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for Jet2 {
    type Output = Jet2;

    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            value: self.value + o.value,
            d_theta: self.d_theta + o.d_theta,
            d_phi: self.d_phi + o.d_phi,
            d_theta_theta: self.d_theta_theta + o.d_theta_theta,
            d_theta_phi: self.d_theta_phi + o.d_theta_phi,
            d_phi_phi: self.d_phi_phi + o.d_phi_phi,
        }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;

    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            value: self.value * o.value,
            d_theta: self.d_theta * o.value + self.value * o.d_theta,
            d_phi: self.d_phi * o.value + self.value * o.d_phi,
            d_theta_theta: self.d_theta_theta * o.value
                + 2.0 * self.d_theta * o.d_theta
                + self.value * o.d_theta_theta,
            d_theta_phi: self.d_theta_phi * o.value
                + self.d_theta * o.d_phi
                + self.d_phi * o.d_theta
                + self.value * o.d_theta_phi,
            d_phi_phi: self.d_phi_phi * o.value
                + 2.0 * self.d_phi * o.d_phi
                + self.value * o.d_phi_phi,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Jet2 {
        Jet2 {
            value: ComplexValue::new(1.0, 2.0),
            d_theta: ComplexValue::new(-0.5, 0.25),
            d_phi: ComplexValue::new(0.3, -1.0),
            d_theta_theta: ComplexValue::new(2.0, 0.0),
            d_theta_phi: ComplexValue::new(0.0, 1.5),
            d_phi_phi: ComplexValue::new(-1.0, 0.5),
        }
    }

    #[test]
    fn product_with_constant_is_scaling() {
        let c = ComplexValue::new(0.5, -3.0);
        let a = sample() * Jet2::constant(c);
        let b = sample().scale(c);
        assert_eq!(a, b);
    }

    #[test]
    fn factorized_matches_direct_laplacian() {
        let j = sample();
        for phi in [0.3, 1.0, 2.5] {
            let d = j.angular_laplacian(phi) - j.factorized_laplacian(phi);
            assert!(d.norm() < 1e-13, "{d}");
        }
    }

    #[test]
    fn re_im_split() {
        let j = sample();
        let back = j.re() + j.im().scale(I);
        assert_eq!(back, j);
    }
}
