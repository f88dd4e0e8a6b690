//! Seeded random expression trees and interior points.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::domain::{AngularPoint, ComplexValue};
use crate::expr::Expr;

#[derive(Debug, Clone, Copy)]
pub struct TreeGen {
    pub max_depth: usize,
    pub m_max: i32,
    pub allow_conj: bool,
}

impl TreeGen {
    pub fn holomorphic(max_depth: usize, m_max: i32) -> Self {
        Self {
            max_depth,
            m_max,
            allow_conj: false,
        }
    }

    pub fn generate<R: Rng>(&self, rng: &mut R) -> Expr {
        self.node(rng, self.max_depth.max(1))
    }

    fn leaf<R: Rng>(&self, rng: &mut R) -> Expr {
        match rng.gen_range(0..4) {
            0 => Expr::zeta(),
            1 => Expr::w(),
            2 => {
                let m = rng.gen_range(2..=self.m_max.max(2));
                let mut k = rng.gen_range(1..m);
                if rng.gen_bool(0.5) {
                    k = -k;
                }
                Expr::hkm(k, m).expect("k drawn in range")
            }
            _ => {
                let re = (rng.gen_range(-2.0..2.0f64) * 100.0).round() / 100.0;
                let im = (rng.gen_range(-2.0..2.0f64) * 100.0).round() / 100.0;
                Expr::constant(ComplexValue::new(re, im))
            }
        }
    }

    fn node<R: Rng>(&self, rng: &mut R, depth: usize) -> Expr {
        if depth <= 1 || rng.gen_bool(0.3) {
            return self.leaf(rng);
        }
        let ops = if self.allow_conj { 7 } else { 6 };
        let d = depth - 1;
        match rng.gen_range(0..ops) {
            0 => self.node(rng, d) + self.node(rng, d),
            1 => self.node(rng, d) * self.node(rng, d),
            2 => self.node(rng, d).inv(),
            3 => self.node(rng, d).exp(),
            4 => self.node(rng, d).log(),
            5 => {
                let mut p = rng.gen_range(1..=3);
                if rng.gen_bool(0.3) {
                    p = -p;
                }
                self.node(rng, d).powi(p)
            }
            _ => self.node(rng, d).conj(),
        }
    }
}

/// Uniform point with `theta` in `(margin, 2pi - margin)` and `phi` in
/// `(margin, pi - margin)`.
pub fn random_point<R: Rng>(rng: &mut R, margin: f64) -> AngularPoint {
    let theta = rng.gen_range(margin..TAU - margin);
    let phi = rng.gen_range(margin..PI - margin);
    AngularPoint::new(theta, phi).expect("margin keeps the point inside")
}
