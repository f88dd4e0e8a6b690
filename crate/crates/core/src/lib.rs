//! Angular Cauchy-Riemann calculus on the cut unit sphere.
//!
//! The operator `D = d/dtheta + i sin(phi) d/dphi` factors the angular part
//! of the Laplacian as `(1/sin^2 phi) Dbar D`. Its null space is an algebra
//! (closed under products, inverses and holomorphic composition), the real
//! and imaginary parts of its elements are harmonic on the sphere and have
//! orthogonal gradients. Multiplying by the radial solution `e^{-nr}` of
//! `(-Delta + n^2 - 2n/r) g = 0` gives square-integrable solutions on R^3.
//!
//! This crate provides the objects ([`expr`], [`family`]), numerical
//! machinery ([`quadrature`], [`operators`]) and named checks
//! ([`verify`]) certifying each of these identities, plus a CLI ([`cli`]).

pub mod cli;
pub mod domain;
pub mod error;
pub mod expr;
pub mod family;
pub mod operators;
pub mod quadrature;
pub mod verify;

pub use domain::{AngularPoint, ComplexValue, Point3D};
pub use error::{Error, Result};
pub use expr::{Expr, Jet2, Node};
