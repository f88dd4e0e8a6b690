//! Named, tolerance-parameterized checks of the angular holomorphy results,
//! and a suite runner producing machine-readable reports.
//!
//! Every check group carries at least one negative control. A control is
//! reported under `control/<name>` and passes exactly when its underlying
//! check fails; its metric is `tolerance / metric` of the underlying check,
//! compared against 1.

pub mod checks;
pub mod random;

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::domain::{AngularPoint, ComplexValue};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::family::{FamilyIndex, RadialParams};
use checks::Outer;

pub const REPORT_VERSION: &str = "1";

/// A tensor grid on the sphere, bounded away from the cut and the poles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n_theta: usize,
    n_phi: usize,
    margin_theta: f64,
    margin_phi: f64,
}

impl GridSpec {
    pub fn new(n_theta: usize, n_phi: usize, margin_theta: f64, margin_phi: f64) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(Error::InvalidArgument("grid needs at least one node per axis".into()));
        }
        if !(margin_theta > 0.0 && margin_theta < PI) {
            return Err(Error::InvalidArgument(format!(
                "theta margin must lie in (0, pi), got {margin_theta}"
            )));
        }
        if !(margin_phi > 0.0 && margin_phi < 0.5 * PI) {
            return Err(Error::InvalidArgument(format!(
                "phi margin must lie in (0, pi/2), got {margin_phi}"
            )));
        }
        Ok(Self {
            n_theta,
            n_phi,
            margin_theta,
            margin_phi,
        })
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn margin_theta(&self) -> f64 {
        self.margin_theta
    }

    pub fn margin_phi(&self) -> f64 {
        self.margin_phi
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major in theta, endpoints included.
    pub fn points(&self) -> Vec<AngularPoint> {
        let ts = spaced(self.margin_theta, TAU - self.margin_theta, self.n_theta);
        let ps = spaced(self.margin_phi, PI - self.margin_phi, self.n_phi);
        ts.iter()
            .flat_map(|&t| ps.iter().map(move |&p| AngularPoint::new(t, p).expect("inside margins")))
            .collect()
    }
}

fn spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Error,
}

/// Outcome of one named check. Non-finite metrics serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub status: CheckStatus,
    #[serde(serialize_with = "ser_real", deserialize_with = "de_real")]
    pub metric: f64,
    #[serde(serialize_with = "ser_real", deserialize_with = "de_real")]
    pub tolerance: f64,
    pub points_tested: usize,
    pub details: String,
}

fn ser_real<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

fn de_real<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl CheckReport {
    /// Pass iff `metric <= tolerance`; a NaN metric fails.
    pub fn from_metric(name: String, metric: f64, tolerance: f64, points_tested: usize, details: String) -> Self {
        let status = if metric <= tolerance {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        Self {
            name,
            status,
            metric,
            tolerance,
            points_tested,
            details,
        }
    }

    pub fn error(name: String, tolerance: f64, details: String) -> Self {
        Self {
            name,
            status: CheckStatus::Error,
            metric: f64::NAN,
            tolerance,
            points_tested: 0,
            details,
        }
    }

    pub fn not_applicable(name: String, tolerance: f64) -> Self {
        Self::error(name, tolerance, "not applicable: input is not flagged holomorphic".into())
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }

    /// Wraps a check that is expected to fail.
    pub fn control(underlying: CheckReport) -> Self {
        let name = format!("control/{}", underlying.name);
        if underlying.status == CheckStatus::Error {
            return Self::error(name, 1.0, format!("underlying check errored: {}", underlying.details));
        }
        let metric = underlying.tolerance / underlying.metric.max(f64::MIN_POSITIVE);
        Self::from_metric(
            name,
            if metric.is_nan() { 0.0 } else { metric },
            1.0,
            underlying.points_tested,
            format!(
                "expected failure: underlying metric {:e} against tolerance {:e}; {}",
                underlying.metric, underlying.tolerance, underlying.details
            ),
        )
    }
}

/// Families of checks selectable on their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckGroup {
    Cr,
    Closure,
    Composition,
    Harmonicity,
    Orthogonality,
    Factorization,
    PhiIntegral,
    UnitNorm,
    Schrodinger,
    Holomorphy,
}

impl CheckGroup {
    pub const ALL: [CheckGroup; 10] = [
        CheckGroup::Cr,
        CheckGroup::Closure,
        CheckGroup::Composition,
        CheckGroup::Harmonicity,
        CheckGroup::Orthogonality,
        CheckGroup::Factorization,
        CheckGroup::PhiIntegral,
        CheckGroup::UnitNorm,
        CheckGroup::Schrodinger,
        CheckGroup::Holomorphy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckGroup::Cr => "cr",
            CheckGroup::Closure => "closure",
            CheckGroup::Composition => "composition",
            CheckGroup::Harmonicity => "harmonicity",
            CheckGroup::Orthogonality => "orthogonality",
            CheckGroup::Factorization => "factorization",
            CheckGroup::PhiIntegral => "phi_integral",
            CheckGroup::UnitNorm => "unit_norm",
            CheckGroup::Schrodinger => "schrodinger",
            CheckGroup::Holomorphy => "holomorphy",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.name() == s)
    }
}

/// Everything that determines a suite run; echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub groups: Vec<CheckGroup>,
    pub controls: bool,
    pub grid: GridSpec,
    pub tol_exact: f64,
    pub tol_holomorphy: f64,
    pub tol_conj_identity: f64,
    pub tol_phi: f64,
    pub tol_norm: f64,
    pub fd_step: f64,
    pub tol_factorization_model: f64,
    pub tol_schrodinger_model: f64,
    pub random_trees: usize,
    pub random_points: usize,
    pub random_depth: usize,
    pub random_margin: f64,
    pub family_m_max: i32,
    pub phi_m_max: i32,
    pub radial_scales: Vec<f64>,
    pub norm_indices: Vec<(i32, i32)>,
    pub norm_k_zero: bool,
    pub schrodinger_indices: Vec<(i32, i32)>,
    pub schrodinger_radii: Vec<f64>,
}

pub const DEFAULT_SEED: u64 = 0x5EED;

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            groups: CheckGroup::ALL.to_vec(),
            controls: true,
            grid: GridSpec::new(16, 12, 0.1, 0.1).expect("valid"),
            tol_exact: 1e-10,
            tol_holomorphy: 1e-12,
            tol_conj_identity: 1e-10,
            tol_phi: 1e-8,
            tol_norm: 1e-6,
            fd_step: 1e-2,
            tol_factorization_model: 0.2,
            tol_schrodinger_model: 0.2,
            random_trees: 200,
            random_points: 100,
            random_depth: 6,
            random_margin: 0.05,
            family_m_max: 8,
            phi_m_max: 12,
            radial_scales: vec![0.5, 1.0, 2.0],
            norm_indices: vec![(1, 2), (1, 3), (2, 3), (3, 4)],
            norm_k_zero: true,
            schrodinger_indices: vec![(1, 2), (2, 3)],
            schrodinger_radii: vec![0.5, 1.0, 2.0],
        }
    }
}

impl SuiteConfig {
    /// No groups selected; the report is empty and passes vacuously.
    pub fn empty() -> Self {
        Self {
            groups: Vec::new(),
            ..Self::default()
        }
    }

    /// Every check tolerance replaced by `tol`. Controls keep their fixed
    /// threshold of 1.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol_exact = tol;
        self.tol_holomorphy = tol;
        self.tol_conj_identity = tol;
        self.tol_phi = tol;
        self.tol_norm = tol;
        self.tol_factorization_model = tol;
        self.tol_schrodinger_model = tol;
        self
    }

    pub fn only(mut self, groups: &[CheckGroup]) -> Self {
        self.groups = groups.to_vec();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub version: String,
    pub config: SuiteConfig,
    pub checks: Vec<CheckReport>,
    pub wall_time_ms: u64,
}

impl SuiteReport {
    /// True iff every member check passed (vacuously for an empty suite).
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckReport::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckReport> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

fn family_members(m_max: i32) -> Vec<Expr> {
    let mut out = Vec::new();
    for m in 2..=m_max {
        for k in 1..m {
            out.push(Expr::hkm(k, m).expect("in range"));
            out.push(Expr::hkm(-k, m).expect("in range"));
        }
    }
    out
}

fn h(k: i32, m: i32) -> Expr {
    Expr::hkm(k, m).expect("in range")
}

/// `exp(-i zeta)`.
fn exp_minus_i_zeta() -> Expr {
    (Expr::constant(ComplexValue::new(0.0, -1.0)) * Expr::zeta()).exp()
}

/// Products and compositions of the primitives used by several groups.
fn derived_panel() -> Vec<Expr> {
    let w = Expr::w();
    let z = Expr::zeta();
    vec![
        w.clone() * w.clone(),
        h(1, 2) * w.exp(),
        w.clone() * h(1, 3),
        w.powi(3),
        w.inv(),
        z.clone() * h(-2, 5),
        z.exp(),
        exp_minus_i_zeta(),
        (w.clone() + Expr::real(1.0)).inv(),
        h(3, 4).powi(-2),
    ]
}

fn w_abs_sq() -> Expr {
    Expr::w() * Expr::w().conj()
}

fn expr_fn(e: Expr) -> impl Fn(AngularPoint) -> Result<ComplexValue> {
    move |p| e.eval(p)
}

fn group_checks(cfg: &SuiteConfig, group: CheckGroup) -> Vec<CheckReport> {
    let grid = &cfg.grid;
    let mut out = Vec::new();
    let control = |out: &mut Vec<CheckReport>, r: CheckReport| {
        if cfg.controls {
            out.push(CheckReport::control(r));
        }
    };
    match group {
        CheckGroup::Cr => {
            let mut fs = vec![Expr::zeta(), Expr::w()];
            fs.extend(family_members(cfg.family_m_max));
            for f in &fs {
                out.push(checks::check_cr(f, grid, cfg.tol_exact));
            }
            control(&mut out, checks::check_cr_ungated(&Expr::w().conj(), grid, cfg.tol_exact));
        }
        CheckGroup::Closure => {
            let w = Expr::w();
            out.push(checks::check_product_closure(&w, &w, grid, cfg.tol_exact));
            out.push(checks::check_product_closure(&h(1, 2), &w.exp(), grid, cfg.tol_exact));
            out.push(checks::check_product_closure(&Expr::zeta(), &h(2, 3), grid, cfg.tol_exact));
            for f in [w.clone(), Expr::zeta(), h(1, 2), w.clone() + Expr::real(1.0)] {
                out.push(checks::check_inverse_closure(&f, grid, cfg.tol_exact));
            }
            control(&mut out, checks::check_cr_ungated(&w_abs_sq(), grid, cfg.tol_exact));
            control(&mut out, checks::check_cr_ungated(&w.conj().inv(), grid, cfg.tol_exact));
        }
        CheckGroup::Composition => {
            let w = Expr::w();
            let i_zeta = Expr::constant(ComplexValue::new(0.0, -1.0)) * Expr::zeta();
            let cases = [
                (Outer::Exp, i_zeta),
                (Outer::IntPow(3), w.clone()),
                (Outer::Exp, w.clone()),
                (Outer::Exp, h(1, 2)),
                (Outer::Log, w.clone()),
                (Outer::Log, Expr::zeta()),
                (Outer::IntPow(-2), h(2, 5)),
            ];
            for (outer, f) in &cases {
                out.push(checks::check_composition(*outer, f, grid, cfg.tol_exact));
            }
            out.push(checks::check_identity(&exp_minus_i_zeta(), &w, grid, cfg.tol_holomorphy));
            out.push(checks::check_identity(&(h(1, 2) * h(1, 2)), &w, grid, cfg.tol_holomorphy));
            control(&mut out, checks::check_cr_ungated(&w.conj().exp(), grid, cfg.tol_exact));
        }
        CheckGroup::Harmonicity | CheckGroup::Orthogonality => {
            let mut fs = vec![Expr::zeta(), Expr::w()];
            fs.extend(family_members(cfg.family_m_max));
            fs.extend(derived_panel());
            let run = |f: &Expr| match group {
                CheckGroup::Harmonicity => checks::check_harmonicity(f, grid, cfg.tol_exact),
                _ => checks::check_gradient_orthogonality(f, grid, cfg.tol_exact),
            };
            for f in &fs {
                out.push(run(f));
            }
            let bad = match group {
                CheckGroup::Harmonicity => w_abs_sq(),
                _ => Expr::w() + Expr::zeta().conj(),
            };
            control(&mut out, run(&bad));
        }
        CheckGroup::Factorization => {
            let h_step = cfg.fd_step;
            let tol = cfg.tol_factorization_model;
            out.push(checks::check_factorization("|W|^2", expr_fn(w_abs_sq()), grid, h_step, tol));
            let u = h(1, 2);
            out.push(checks::check_factorization(
                "Re h(1/2)",
                move |p| Ok(ComplexValue::new(u.eval(p)?.re, 0.0)),
                grid,
                h_step,
                tol,
            ));
            out.push(checks::check_factorization("constant", |_| Ok(ComplexValue::new(1.5, -0.5)), grid, h_step, tol));
            for f in [Expr::zeta(), Expr::w(), h(2, 3), Expr::w().conj() * Expr::zeta()] {
                out.push(checks::check_factorization(&f.to_string(), expr_fn(f.clone()), grid, h_step, tol));
            }
            control(
                &mut out,
                checks::check_factorization_wrong_factor("|W|^2", expr_fn(w_abs_sq()), grid, h_step, tol),
            );
        }
        CheckGroup::PhiIntegral => {
            for m in 2..=cfg.phi_m_max {
                for k in 1..m {
                    out.push(checks::check_phi_integral(FamilyIndex::new(k, m).expect("in range"), cfg.tol_phi));
                }
            }
            out.push(checks::check_phi_integral(FamilyIndex::k_zero_limit(1).expect("valid"), cfg.tol_phi));
            control(
                &mut out,
                checks::check_phi_integral_mismatched(
                    FamilyIndex::new(1, 2).expect("valid"),
                    FamilyIndex::new(1, 3).expect("valid"),
                    cfg.tol_phi,
                ),
            );
        }
        CheckGroup::UnitNorm => {
            let mut idxs: Vec<FamilyIndex> = cfg
                .norm_indices
                .iter()
                .filter_map(|&(k, m)| FamilyIndex::new(k, m).ok())
                .collect();
            if cfg.norm_k_zero {
                idxs.push(FamilyIndex::k_zero_limit(1).expect("valid"));
            }
            for &n in &cfg.radial_scales {
                let Ok(rp) = RadialParams::new(n) else {
                    out.push(CheckReport::error(format!("unit_norm/n={n}"), cfg.tol_norm, "invalid scale".into()));
                    continue;
                };
                for &idx in &idxs {
                    out.push(checks::check_unit_norm(rp, idx, cfg.tol_norm));
                }
            }
            control(
                &mut out,
                checks::check_unit_norm_unnormalized(
                    RadialParams::new(1.0).expect("positive"),
                    FamilyIndex::new(1, 2).expect("valid"),
                    cfg.tol_norm,
                ),
            );
        }
        CheckGroup::Schrodinger => {
            let rp = RadialParams::new(1.0).expect("positive");
            for &(k, m) in &cfg.schrodinger_indices {
                match FamilyIndex::new(k, m) {
                    Ok(idx) => out.push(checks::check_schrodinger(
                        rp,
                        idx,
                        grid,
                        &cfg.schrodinger_radii,
                        cfg.fd_step,
                        cfg.tol_schrodinger_model,
                    )),
                    Err(e) => out.push(CheckReport::error(
                        format!("schrodinger/k={k},m={m}"),
                        cfg.tol_schrodinger_model,
                        e.to_string(),
                    )),
                }
            }
            for &n in &cfg.radial_scales {
                if let Ok(rp) = RadialParams::new(n) {
                    out.push(checks::check_radial_schrodinger(rp, &cfg.schrodinger_radii, cfg.tol_exact));
                }
            }
            control(
                &mut out,
                checks::check_schrodinger_wrong_potential(
                    rp,
                    FamilyIndex::new(1, 2).expect("valid"),
                    grid,
                    &cfg.schrodinger_radii,
                    cfg.fd_step,
                    cfg.tol_schrodinger_model,
                ),
            );
        }
        CheckGroup::Holomorphy => {
            let settings = checks::RandomHolomorphy {
                seed: cfg.seed,
                trees: cfg.random_trees,
                points: cfg.random_points,
                depth: cfg.random_depth,
                m_max: cfg.family_m_max,
                margin: cfg.random_margin,
            };
            out.push(checks::check_random_holomorphy(&settings, cfg.tol_holomorphy));
            let name = "holomorphy/|D conj(W)| = 2|W|".to_string();
            out.push(
                match checks::conj_w_d_identity(cfg.seed, cfg.random_points, cfg.random_margin) {
                    Ok(m) => CheckReport::from_metric(
                        name,
                        m,
                        cfg.tol_conj_identity,
                        cfg.random_points,
                        "max ||D conj(W)| - 2|W|| / (1+|W|) at random points".into(),
                    ),
                    Err(e) => CheckReport::error(name, cfg.tol_conj_identity, e.to_string()),
                },
            );
            control(
                &mut out,
                checks::check_random_nullity(
                    &Expr::w().conj(),
                    cfg.seed,
                    cfg.random_points,
                    cfg.random_margin,
                    cfg.tol_holomorphy,
                ),
            );
        }
    }
    out
}

/// Runs the configured groups. Checks are ordered by name; apart from
/// `wall_time_ms` the report is a pure function of `cfg`.
pub fn run_suite(cfg: &SuiteConfig) -> SuiteReport {
    let start = Instant::now();
    let mut groups = cfg.groups.clone();
    groups.sort();
    groups.dedup();
    let mut checks: Vec<CheckReport> = std::thread::scope(|s| {
        let handles: Vec<_> = groups
            .iter()
            .map(|&g| s.spawn(move || group_checks(cfg, g)))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("check thread panicked"))
            .collect()
    });
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    SuiteReport {
        version: REPORT_VERSION.to_string(),
        config: cfg.clone(),
        checks,
        wall_time_ms: start.elapsed().as_millis() as u64,
    }
}
