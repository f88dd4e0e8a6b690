//! Suite-level properties: determinism, schema conformance, controls and
//! margin monotonicity.

use sphere_cr::cli::report_json;
use sphere_cr::verify::checks::{self, Outer};
use sphere_cr::verify::{run_suite, CheckGroup, CheckStatus, GridSpec, SuiteConfig, DEFAULT_SEED};
use sphere_cr::Expr;

fn strip_wall_time(json: &str) -> String {
    json.lines().filter(|l| !l.contains("\"wall_time_ms\"")).collect::<Vec<_>>().join("\n")
}

fn schema() -> serde_json::Value {
    let text = include_str!("../schema/suite_report.schema.json");
    serde_json::from_str(text).unwrap()
}

#[test]
fn same_config_gives_identical_json() {
    let cfg = SuiteConfig::default();
    let a = report_json(&run_suite(&cfg));
    let b = report_json(&run_suite(&cfg));
    assert_eq!(strip_wall_time(&a), strip_wall_time(&b));
}

#[test]
fn seed_changes_random_checks_only() {
    let base = SuiteConfig::default().only(&[CheckGroup::Holomorphy, CheckGroup::Cr]);
    let other = SuiteConfig {
        seed: DEFAULT_SEED + 1,
        ..base.clone()
    };
    let a = run_suite(&base);
    let b = run_suite(&other);
    assert!(a.passed() && b.passed());
    for (x, y) in a.checks.iter().zip(&b.checks) {
        assert_eq!(x.name, y.name);
        if x.name.starts_with("cr/") {
            assert_eq!(x, y);
        }
    }
    let random = |r: &sphere_cr::verify::SuiteReport| {
        r.checks.iter().find(|c| c.name.starts_with("holomorphy/random")).unwrap().details.clone()
    };
    assert_ne!(random(&a), random(&b));
}

#[test]
fn report_validates_against_schema() {
    let validator = jsonschema::validator_for(&schema()).unwrap();
    for cfg in [
        SuiteConfig::default(),
        SuiteConfig::empty(),
        SuiteConfig::default().only(&[CheckGroup::PhiIntegral]).with_tolerance(0.0),
    ] {
        let json: serde_json::Value = serde_json::from_str(&report_json(&run_suite(&cfg))).unwrap();
        let errors: Vec<String> = validator.iter_errors(&json).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{errors:?}");
    }
    let mut bad: serde_json::Value = serde_json::from_str(&report_json(&run_suite(&SuiteConfig::empty()))).unwrap();
    bad["checks"] = serde_json::json!([{ "name": "x", "status": "maybe" }]);
    assert!(!validator.is_valid(&bad));
}

#[test]
fn error_reports_validate_too() {
    let validator = jsonschema::validator_for(&schema()).unwrap();
    let mut report = run_suite(&SuiteConfig::empty());
    report.checks.push(checks::check_cr(&Expr::w().conj(), &SuiteConfig::default().grid, 1e-10));
    assert_eq!(report.checks[0].status, CheckStatus::Error);
    let json: serde_json::Value = serde_json::from_str(&report_json(&report)).unwrap();
    assert!(validator.is_valid(&json));
}

#[test]
fn default_suite_passes_and_covers_every_group_with_a_control() {
    let r = run_suite(&SuiteConfig::default());
    let failures: Vec<_> = r.failures().map(|c| (&c.name, c.metric, &c.details)).collect();
    assert!(failures.is_empty(), "{failures:#?}");
    for g in CheckGroup::ALL {
        let r = run_suite(&SuiteConfig::default().only(&[g]));
        let controls = r.checks.iter().filter(|c| c.name.starts_with("control/")).count();
        assert!(controls >= 1, "group {} has no negative control", g.name());
        assert!(r.checks.len() > controls, "group {} has no positive check", g.name());
    }
}

#[test]
fn zero_tolerance_fails_everything_except_exact_zeros() {
    let r = run_suite(&SuiteConfig::default().with_tolerance(0.0));
    assert!(!r.passed());
    for c in &r.checks {
        if c.name.starts_with("control/") {
            assert!(c.passed(), "{c:?}");
        } else if c.metric != 0.0 {
            assert_eq!(c.status, CheckStatus::Fail, "{c:?}");
        }
    }
}

#[test]
fn empty_config_is_vacuous_pass() {
    let r = run_suite(&SuiteConfig::empty());
    assert!(r.checks.is_empty() && r.passed());
}

#[test]
fn controls_off_removes_them() {
    let cfg = SuiteConfig {
        controls: false,
        ..SuiteConfig::default()
    };
    let r = run_suite(&cfg.only(&[CheckGroup::Cr, CheckGroup::Harmonicity]));
    assert!(r.checks.iter().all(|c| !c.name.starts_with("control/")));
}

/// Three grids with equal spacing, each the previous plus one ring of nodes
/// closer to the cut and the poles.
fn margins() -> [GridSpec; 3] {
    use std::f64::consts::{PI, TAU};
    let (m0, n_theta, n_phi) = (0.6, 31, 13);
    let d_theta = (TAU - 2.0 * m0) / (n_theta - 1) as f64;
    let d_phi = (PI - 2.0 * m0) / (n_phi - 1) as f64;
    [0usize, 1, 2].map(|j| {
        GridSpec::new(
            n_theta + 2 * j,
            n_phi + 2 * j,
            m0 - j as f64 * d_theta,
            m0 - j as f64 * d_phi,
        )
        .unwrap()
    })
}

fn assert_non_decreasing(label: &str, metrics: &[f64]) {
    for w in metrics.windows(2) {
        assert!(w[1] >= w[0], "{label}: {metrics:?}");
    }
}

#[test]
fn metrics_grow_as_margins_shrink() {
    let w_sq = Expr::w() * Expr::w().conj();
    let cases: Vec<(&str, Box<dyn Fn(&GridSpec) -> f64>)> = vec![
        ("cr conj(W)", Box::new(|g| checks::check_cr_ungated(&Expr::w().conj(), g, 1e-10).metric)),
        ("harmonicity |W|^2", Box::new(move |g| checks::check_harmonicity(&w_sq, g, 1e-10).metric)),
        (
            "orthogonality W + conj(zeta)",
            Box::new(|g| checks::check_gradient_orthogonality(&(Expr::w() + Expr::zeta().conj()), g, 1e-10).metric),
        ),
        (
            "cr exp(conj(W))",
            Box::new(|g| checks::check_cr_ungated(&Expr::w().conj().exp(), g, 1e-10).metric),
        ),
        (
            "factorization discrepancy W",
            Box::new(|g| {
                let w = Expr::w();
                checks::factorization_discrepancies(&|p| w.eval(p), &g.points(), &[1e-2]).unwrap()[0]
            }),
        ),
    ];
    for (label, metric) in &cases {
        let ms: Vec<f64> = margins().iter().map(|g| metric(g)).collect();
        assert_non_decreasing(label, &ms);
    }
    // exact-jet metrics of valid inputs stay within tolerance at every margin
    for g in margins() {
        assert!(checks::check_composition(Outer::Exp, &Expr::w(), &g, 1e-10).passed());
    }
}
