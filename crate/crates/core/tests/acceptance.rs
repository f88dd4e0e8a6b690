//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphere_cr::cli::parse_expr;
use sphere_cr::family::{self, FamilyIndex, RadialParams};
use sphere_cr::operators::{self, fitted_slope, StencilOrder, StencilSpec};
use sphere_cr::verify::checks::{self, RandomHolomorphy};
use sphere_cr::verify::random::TreeGen;
use sphere_cr::verify::{CheckReport, GridSpec, DEFAULT_SEED};
use sphere_cr::{AngularPoint, ComplexValue, Expr, Point3D};

// Tolerances, one block per criterion.
const C1_REL_TOL: f64 = 1e-8;
const C1_PI_TOL: f64 = 1e-9;
const C1_M_MAX: i32 = 12;
const C2_NORM_TOL: f64 = 1e-6;
const C2_SCALES: [f64; 3] = [0.5, 1.0, 2.0];
const C2_INDICES: [(i32, i32); 4] = [(1, 2), (1, 3), (2, 3), (3, 4)];
const C3_D_TOL: f64 = 1e-12;
const C3_CONJ_TOL: f64 = 1e-10;
const C3_TREES: usize = 200;
const C3_POINTS: usize = 100;
const C3_DEPTH: usize = 6;
const C3_M_MAX: i32 = 8;
const C4_VALUE: f64 = 4.0;
const C4_VALUE_TOL: f64 = 1e-4;
const C4_STEP: f64 = 1e-3;
const C4_SLOPE: (f64, f64) = (1.8, 2.2);
const C5_TOL: f64 = 1e-10;
const C5_M_MAX: i32 = 8;
const C6_ORDER_MIN: f64 = 1.8;
const C6_FINE_STEP: f64 = 1e-4;
const C6_FINE_TOL: f64 = 1e-6;
const C6_RADIAL_TOL: f64 = 1e-10;
const C6_RADII: [f64; 3] = [0.5, 1.0, 2.0];
const C7_CASES: usize = 1000;
const PARSE_ERROR_EXIT: i32 = 2;
const SUITE_BUDGET_SECS: f64 = 60.0;

struct Outcome {
    pass: bool,
    summary: String,
}

fn outcome(pass: bool, summary: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        summary: summary.into(),
    }
}

fn failed_reports<'a>(rs: impl IntoIterator<Item = &'a CheckReport>) -> Vec<String> {
    rs.into_iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{} (metric {:e})", r.name, r.metric))
        .collect()
}

fn c1_phi_integral() -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for m in 2..=C1_M_MAX {
        for k in 1..m {
            let r = checks::check_phi_integral(FamilyIndex::new(k, m).unwrap(), C1_REL_TOL);
            worst = worst.max(r.metric);
            if !r.passed() {
                failures.push(r.name);
            }
        }
    }
    let idx = FamilyIndex::new(1, 2).unwrap();
    let q = sphere_cr::quadrature::integrate_phi_singular_tan(
        |t| family::phi_integrand(idx, t),
        idx.phi_singularity(),
        0.1 * C1_PI_TOL,
    );
    let pi_err = q.map(|q| (q.value - PI).abs()).unwrap_or(f64::NAN);
    let pass = failures.is_empty() && pi_err <= C1_PI_TOL;
    outcome(
        pass,
        format!(
            "max relative error {worst:e} over 1<=k<m<={C1_M_MAX} (tol {C1_REL_TOL:e}); |(1,2) - pi| = {pi_err:e} (tol {C1_PI_TOL:e}){}",
            if failures.is_empty() { String::new() } else { format!("; failed {failures:?}") }
        ),
    )
}

fn c2_unit_norm() -> Outcome {
    let mut reports = Vec::new();
    for n in C2_SCALES {
        let rp = RadialParams::new(n).unwrap();
        for (k, m) in C2_INDICES {
            reports.push(checks::check_unit_norm(rp, FamilyIndex::new(k, m).unwrap(), C2_NORM_TOL));
        }
        reports.push(checks::check_unit_norm(rp, FamilyIndex::k_zero_limit(1).unwrap(), C2_NORM_TOL));
    }
    let worst = reports.iter().map(|r| r.metric).fold(0.0f64, f64::max);
    let bad = failed_reports(&reports);
    outcome(
        bad.is_empty() && reports.len() == 15,
        format!("{} cases, max |norm^2 - 1| = {worst:e} (tol {C2_NORM_TOL:e}); failures {bad:?}", reports.len()),
    )
}

fn c3_holomorphy() -> Outcome {
    let settings = RandomHolomorphy {
        seed: DEFAULT_SEED,
        trees: C3_TREES,
        points: C3_POINTS,
        depth: C3_DEPTH,
        m_max: C3_M_MAX,
        margin: 0.05,
    };
    let r = checks::check_random_holomorphy(&settings, C3_D_TOL);
    let conj = checks::conj_w_d_identity(DEFAULT_SEED, C3_POINTS, 0.05).unwrap_or(f64::NAN);
    let control = checks::check_random_nullity(&Expr::w().conj(), DEFAULT_SEED, C3_POINTS, 0.05, C3_D_TOL);
    let pass = r.passed() && conj <= C3_CONJ_TOL && control.status == sphere_cr::verify::CheckStatus::Fail;
    outcome(
        pass,
        format!(
            "max |D f|/(1+|f|) = {:e} over {} points (tol {C3_D_TOL:e}); ||D conj(W)| - 2|W||/(1+|W|) = {conj:e} (tol {C3_CONJ_TOL:e}); conj(W) nullity metric {:e} rejected",
            r.metric, r.points_tested, control.metric
        ),
    )
}

fn c4_factorization() -> Outcome {
    let p = AngularPoint::new(1.0, FRAC_PI_2).unwrap();
    let w_sq = |q: AngularPoint| Ok(ComplexValue::new(q.tan_half_phi().powi(2), 0.0));
    let s = StencilSpec::uniform(StencilOrder::Second, C4_STEP).unwrap();
    let a = operators::angular_laplacian(w_sq, p, &s).unwrap();
    let b = operators::factorized_laplacian(w_sq, p, &s).unwrap();
    let values_ok = (a.re - C4_VALUE).abs() <= C4_VALUE_TOL
        && (b.re - C4_VALUE).abs() <= C4_VALUE_TOL
        && a.im.abs() <= C4_VALUE_TOL
        && b.im.abs() <= C4_VALUE_TOL;

    // random panel, including non-holomorphic trees
    let grid = GridSpec::new(8, 6, 0.4, 0.4).unwrap();
    let points = grid.points();
    let hs = [1e-2, 5e-3, 2.5e-3];
    let generator = TreeGen {
        max_depth: 3,
        m_max: 6,
        allow_conj: true,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut slopes = Vec::new();
    let mut agg = [0.0f64; 3];
    let mut draws = 0;
    while slopes.len() < 24 && draws < 2000 {
        draws += 1;
        let f = generator.generate(&mut rng);
        let resolved = points.iter().all(|&q| match f.eval_jet(q) {
            Ok(j) => {
                j.value.norm() < 1e2
                    && j.d_phi_phi.norm() + j.d_theta_theta.norm() < 1e3
                    && !f.near_log_branch(q, 0.2).unwrap_or(true)
            }
            Err(_) => false,
        });
        if !resolved {
            continue;
        }
        let Ok(d) = checks::factorization_discrepancies(&|q| f.eval(q), &points, &hs) else {
            continue;
        };
        if d.iter().any(|e| *e <= 1e-10) {
            continue;
        }
        for (a, e) in agg.iter_mut().zip(&d) {
            *a = a.max(*e);
        }
        slopes.push(fitted_slope(&hs, &d));
    }
    let agg_slope = fitted_slope(&hs, &agg);
    let lo = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let in_band = |s: f64| s >= C4_SLOPE.0 && s <= C4_SLOPE.1;
    let pass = values_ok && slopes.len() >= 20 && in_band(agg_slope) && in_band(lo) && in_band(hi);
    outcome(
        pass,
        format!(
            "|W|^2 at phi=pi/2, h={C4_STEP:e}: direct {:.9}, factorized {:.9} (target {C4_VALUE} +- {C4_VALUE_TOL:e}); panel of {} functions: slopes in [{lo:.4}, {hi:.4}], aggregate {agg_slope:.4} (band [{}, {}])",
            a.re, b.re, slopes.len(), C4_SLOPE.0, C4_SLOPE.1
        ),
    )
}

fn c5_harmonicity_orthogonality() -> Outcome {
    let grid = GridSpec::new(16, 12, 0.1, 0.1).unwrap();
    let mut fs = vec![Expr::zeta(), Expr::w()];
    for m in 2..=C5_M_MAX {
        for k in 1..m {
            fs.push(Expr::hkm(k, m).unwrap());
            fs.push(Expr::hkm(-k, m).unwrap());
        }
    }
    let h = |k, m| Expr::hkm(k, m).unwrap();
    let w = Expr::w();
    let z = Expr::zeta();
    fs.extend([
        w.clone() * h(1, 2),
        h(1, 3) * h(2, 5) * z.clone(),
        w.exp(),
        h(1, 2).exp(),
        w.powi(3),
        h(3, 4).powi(-2),
        w.inv(),
        (w.clone() + Expr::real(2.0)).log(),
        z.exp() * h(-1, 4),
        (Expr::constant(ComplexValue::new(0.0, -1.0)) * z.clone()).exp(),
    ]);
    let mut reports = Vec::new();
    for f in &fs {
        reports.push(checks::check_harmonicity(f, &grid, C5_TOL));
        reports.push(checks::check_gradient_orthogonality(f, &grid, C5_TOL));
    }
    let worst = reports.iter().map(|r| r.metric).fold(0.0f64, f64::max);
    let bad = failed_reports(&reports);
    let w_sq = w.clone() * w.conj();
    let controls = [
        checks::check_harmonicity(&w_sq, &grid, C5_TOL),
        checks::check_gradient_orthogonality(&(w.clone() + z.conj()), &grid, C5_TOL),
        checks::check_harmonicity(&(z.clone() * w.conj()), &grid, C5_TOL),
    ];
    let controls_rejected = controls.iter().all(|c| c.status == sphere_cr::verify::CheckStatus::Fail);
    outcome(
        bad.is_empty() && controls_rejected,
        format!(
            "{} functions, max scaled metric {worst:e} (tol {C5_TOL:e}); failures {bad:?}; controls {}",
            fs.len(),
            controls
                .iter()
                .map(|c| format!("{}={:e} {:?}", c.name, c.metric, c.status))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn c6_schrodinger() -> Outcome {
    let rp = RadialParams::new(1.0).unwrap();
    let idx = FamilyIndex::new(1, 2).unwrap();
    let grid = GridSpec::new(6, 5, 0.5, 0.5).unwrap();
    let hs = [8e-3, 4e-3, 2e-3, 1e-3];
    let coarse = checks::schrodinger_residuals(rp, rp, idx, &grid.points(), &C6_RADII, &hs).unwrap();
    let order = fitted_slope(&hs, &coarse);
    let decreasing = coarse.windows(2).all(|w| w[1] < w[0]);
    let fine = checks::schrodinger_residuals(rp, rp, idx, &grid.points(), &C6_RADII, &[C6_FINE_STEP]).unwrap()[0];

    let p = AngularPoint::new(1.0, 1.0).unwrap();
    let s = StencilSpec::uniform(StencilOrder::Second, 1e-2).unwrap();
    let mut radial = 0.0f64;
    for n in [0.5, 1.0, 2.0] {
        let rp = RadialParams::new(n).unwrap();
        for r in C6_RADII {
            let q = Point3D::from_parts(r, p).unwrap();
            let res = checks::schrodinger_residual(
                |r| family::radial_jet(rp, r),
                |r| family::potential_nu(rp, r),
                |_| Ok(ComplexValue::new(1.0, 0.0)),
                q,
                &s,
            )
            .unwrap();
            radial = radial.max(res.norm() / family::radial_solution(rp, r));
        }
    }
    // the trivial case: nu = 0, g = 1
    let q = Point3D::from_parts(1.0, p).unwrap();
    let trivial = checks::schrodinger_residual(
        |_| operators::RadialJet {
            value: 1.0,
            d1: 0.0,
            d2: 0.0,
        },
        |_| Ok(0.0),
        |_| Ok(ComplexValue::new(1.0, 0.0)),
        q,
        &s,
    )
    .unwrap()
    .norm();
    let pass = decreasing && order >= C6_ORDER_MIN && fine <= C6_FINE_TOL && radial <= C6_RADIAL_TOL && trivial == 0.0;
    outcome(
        pass,
        format!(
            "relative residuals {coarse:?} at h={hs:?}, fitted order {order:.4} (min {C6_ORDER_MIN}); at h={C6_FINE_STEP:e}: {fine:e} (tol {C6_FINE_TOL:e}); radial-only {radial:e} (tol {C6_RADIAL_TOL:e}); nu=0,g=1: {trivial:e}"
        ),
    )
}

fn random_source(rng: &mut ChaCha8Rng, depth: usize) -> String {
    let leaf = |rng: &mut ChaCha8Rng| match rng.gen_range(0..6) {
        0 => "zeta".to_string(),
        1 => "W".to_string(),
        2 => "i".to_string(),
        3 => format!("{}.{}", rng.gen_range(0..50), rng.gen_range(0..100)),
        4 => format!("{}e-{}", rng.gen_range(1..9), rng.gen_range(0..4)),
        _ => {
            let m = rng.gen_range(2..10);
            format!("h({}/{m})", rng.gen_range(-(m - 1)..m))
        }
    };
    if depth == 0 {
        return leaf(rng);
    }
    match rng.gen_range(0..9) {
        0 | 1 => leaf(rng),
        2 => format!("{} + {}", random_source(rng, depth - 1), random_source(rng, depth - 1)),
        3 => format!("{}-{}", random_source(rng, depth - 1), random_source(rng, depth - 1)),
        4 => format!("{} * {}", random_source(rng, depth - 1), random_source(rng, depth - 1)),
        5 => format!("{}/{}", random_source(rng, depth - 1), random_source(rng, depth - 1)),
        6 => {
            let f = ["exp", "log", "inv", "conj"][rng.gen_range(0..4)];
            format!("{f}({})", random_source(rng, depth - 1))
        }
        7 => format!("-({})", random_source(rng, depth - 1)),
        _ => format!("({})^{}", random_source(rng, depth - 1), rng.gen_range(-3..5)),
    }
}

fn c7_parser() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut mismatches = Vec::new();
    for _ in 0..C7_CASES {
        let src = random_source(&mut rng, 5);
        let ok = parse_expr(&src)
            .ok()
            .and_then(|e| parse_expr(&e.to_string()).ok().map(|back| back == e))
            .unwrap_or(false);
        if !ok {
            mismatches.push(src);
        }
    }
    let mut exits = Vec::new();
    let mut exit_ok = true;
    for (src, offset) in [("W $ 1", 2), ("exp(W))", 6), ("h(5/3)", 0)] {
        let o = Command::new(env!("CARGO_BIN_EXE_sphere-cr"))
            .args(["eval", src, "--theta", "1", "--phi", "1"])
            .output()
            .expect("binary runs");
        let err = String::from_utf8_lossy(&o.stderr);
        let positioned = err.contains(&format!("at byte {offset}"));
        exit_ok &= o.status.code() == Some(PARSE_ERROR_EXIT) && positioned;
        exits.push(format!("{src:?} -> exit {:?}, positioned {positioned}", o.status.code()));
    }
    outcome(
        mismatches.is_empty() && exit_ok,
        format!(
            "{C7_CASES} generated expressions, {} round-trip mismatches; {}",
            mismatches.len(),
            exits.join("; ")
        ),
    )
}

fn c8_determinism() -> Outcome {
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let paths = [dir.join("acceptance_a.json"), dir.join("acceptance_b.json")];
    let mut bodies = Vec::new();
    let mut codes = Vec::new();
    for p in &paths {
        let o = Command::new(env!("CARGO_BIN_EXE_sphere-cr"))
            .env_remove("SPHERE_CR_SEED")
            .args(["verify", "--all", "--seed", "0x5EED", "--json", p.to_str().unwrap()])
            .output()
            .expect("binary runs");
        codes.push(o.status.code());
        let text = std::fs::read_to_string(p).unwrap_or_default();
        bodies.push(
            text.lines()
                .filter(|l| !l.trim_start().starts_with("\"wall_time_ms\""))
                .collect::<Vec<_>>()
                .join("\n"),
        );
    }
    let identical = !bodies[0].is_empty() && bodies[0] == bodies[1];
    outcome(
        identical && codes.iter().all(|c| *c == Some(0)),
        format!("exit codes {codes:?}; reports identical apart from wall_time_ms: {identical}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 phi-integral identity", c1_phi_integral),
        ("2 unit L2 norm", c2_unit_norm),
        ("3 holomorphy nullity", c3_holomorphy),
        ("4 Laplacian factorization", c4_factorization),
        ("5 harmonicity and gradient orthogonality", c5_harmonicity_orthogonality),
        ("6 Schrodinger residual", c6_schrodinger),
        ("7 parser round trip and error exits", c7_parser),
        ("8 determinism", c8_determinism),
    ];
    let mut all = true;
    for (name, run) in criteria {
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let pass = o.pass && secs < SUITE_BUDGET_SECS;
        all &= pass;
        println!(
            "[{}] criterion {name} ({secs:.2}s): {}",
            if pass { "PASS" } else { "FAIL" },
            o.summary
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
