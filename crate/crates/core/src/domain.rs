//! Validated coordinates on the cut sphere and in punctured R^3.
//!
//! The cut is the half-plane theta = 0 (equivalently 2pi); the poles
//! phi = 0 and phi = pi are excluded.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

pub type ComplexValue = num_complex::Complex64;

/// A point on the sphere with 0 < theta < 2pi and 0 < phi < pi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularPoint {
    theta: f64,
    phi: f64,
    tan_half: f64,
}

impl AngularPoint {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        let inside = theta > 0.0 && theta < TAU && phi > 0.0 && phi < PI;
        if inside {
            Ok(Self {
                theta,
                phi,
                tan_half: (0.5 * phi).tan(),
            })
        } else {
            Err(Error::OutsideDomain { theta, phi })
        }
    }

    /// The point with `tan(phi/2) = t`, keeping `t` exactly. Near the south
    /// pole this is far more accurate than going through `phi`.
    pub fn from_tan_half(theta: f64, t: f64) -> Result<Self> {
        // keep phi representable inside the domain when t is huge
        let phi = (2.0 * t.atan()).min(f64::from_bits(PI.to_bits() - 1));
        let p = Self::new(theta, phi)?;
        if t > 0.0 && t.is_finite() {
            Ok(Self { tan_half: t, ..p })
        } else {
            Err(Error::OutsideDomain { theta, phi })
        }
    }

    #[inline]
    pub fn theta(&self) -> f64 {
        self.theta
    }

    #[inline]
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `tan(phi/2)`, strictly positive on the domain.
    #[inline]
    pub fn tan_half_phi(&self) -> f64 {
        self.tan_half
    }

    /// `sin(phi) = 2t / (1 + t^2)` from the stored half-angle tangent.
    pub fn sin_phi(&self) -> f64 {
        sin_from_tan_half(self.tan_half)
    }

    /// Distance to the cut in theta.
    pub fn theta_clearance(&self) -> f64 {
        self.theta.min(TAU - self.theta)
    }

    /// Distance to the nearest pole in phi.
    pub fn phi_clearance(&self) -> f64 {
        self.phi.min(PI - self.phi)
    }

    /// Same point shifted by `(dtheta, dphi)`, if the result stays in the domain.
    pub fn offset(&self, dtheta: f64, dphi: f64) -> Result<Self> {
        Self::new(self.theta + dtheta, self.phi + dphi)
    }
}

/// `2t / (1 + t^2)` without overflow for large `t`.
pub fn sin_from_tan_half(t: f64) -> f64 {
    if t <= 1.0 {
        2.0 * t / (1.0 + t * t)
    } else {
        let u = 1.0 / t;
        2.0 * u / (1.0 + u * u)
    }
}

/// A point of R^3 in spherical coordinates, off the origin and off the cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3D {
    r: f64,
    angles: AngularPoint,
}

impl Point3D {
    pub fn new(r: f64, theta: f64, phi: f64) -> Result<Self> {
        Self::from_parts(r, AngularPoint::new(theta, phi)?)
    }

    pub fn from_parts(r: f64, angles: AngularPoint) -> Result<Self> {
        if r > 0.0 && r.is_finite() {
            Ok(Self { r, angles })
        } else {
            Err(Error::NonPositiveRadius(r))
        }
    }

    #[inline]
    pub fn r(&self) -> f64 {
        self.r
    }

    #[inline]
    pub fn angles(&self) -> AngularPoint {
        self.angles
    }
}
