//! Command-line front end: argument definitions, subcommands and report
//! emission. [`run`] maps outcomes to the process exit code.

mod syntax;

use std::f64::consts::PI;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::domain::{AngularPoint, ComplexValue, Point3D};
use crate::error::Error;
use crate::family::{self, FamilyIndex, RadialParams};
use crate::operators::{StencilOrder, StencilSpec};
use crate::quadrature;
use crate::verify::{self, checks, CheckGroup, CheckReport, SuiteConfig, SuiteReport};

pub use syntax::{parse_expr, ParseError, ParseErrorKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

/// Environment variable overriding the default suite seed.
pub const SEED_ENV: &str = "SPHERE_CR_SEED";

#[derive(Debug, Parser)]
#[command(name = "sphere-cr", version, about = "Angular holomorphic functions on the sphere")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Value and exact partial derivatives of an expression at one point.
    Eval(EvalArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
    /// Squared L^2 norm of g_{k/m} over R^3 by quadrature.
    Norm(NormArgs),
    /// Stencil residual of (-Laplacian + nu) g_{k/m} over a radial sweep.
    Residual(ResidualArgs),
    /// Closed form against quadrature for the phi integral, as CSV.
    Table(TableArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Expression, e.g. "exp(-i*zeta)" or "h(1/2)*W".
    pub expr: String,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: f64,
    /// Read --theta and --phi in degrees.
    #[arg(long)]
    pub degrees: bool,
    /// Also print D f and Dbar f.
    #[arg(long = "show-D")]
    pub show_d: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run every check group (the default when no --check is given).
    #[arg(long)]
    pub all: bool,
    /// Run only these groups; repeatable or comma separated.
    #[arg(long, value_delimiter = ',')]
    pub check: Vec<String>,
    /// Write the JSON report here.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write the checks as CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// RNG seed; overrides SPHERE_CR_SEED.
    #[arg(long)]
    pub seed: Option<String>,
    /// Skip negative controls.
    #[arg(long)]
    pub no_controls: bool,
    /// Replace every check tolerance with this value.
    #[arg(long)]
    pub tol_override: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub k: i32,
    #[arg(long)]
    pub m: i32,
    /// Radial decay scale.
    #[arg(long, default_value_t = 1.0)]
    pub n: f64,
}

#[derive(Debug, Args)]
pub struct NormArgs {
    #[command(flatten)]
    pub index: IndexArgs,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ResidualArgs {
    #[command(flatten)]
    pub index: IndexArgs,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 2.0])]
    pub radii: Vec<f64>,
    /// Stencil steps; one column per step.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-2, 5e-3, 2.5e-3])]
    pub h: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long, default_value_t = PI / 2.0)]
    pub phi: f64,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, default_value_t = 12)]
    pub m_max: i32,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failed command: message for stderr and exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoConvergence(_) => EXIT_NO_CONVERGENCE,
            Error::InvalidIndex { .. } | Error::InvalidArgument(_) | Error::OutsideDomain { .. } => EXIT_USAGE,
            _ => EXIT_FAIL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self {
            code: EXIT_FAIL,
            message: e.to_string(),
        }
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command,
/// writing results to `out`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if code == EXIT_OK {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Norm(a) => cmd_norm(&a, out),
        Command::Residual(a) => cmd_residual(&a, out),
        Command::Table(a) => cmd_table(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn fmt_c(z: ComplexValue) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.15e} {sign} {:.15e}i", z.re, z.im.abs())
}

/// Positioned message with a caret under the offending byte.
pub fn render_parse_error(src: &str, e: &ParseError) -> String {
    format!("{e}\n  {src}\n  {}^", " ".repeat(e.offset))
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> CmdResult {
    let e = parse_expr(&a.expr).map_err(|pe| Failure::usage(render_parse_error(&a.expr, &pe)))?;
    let (theta, phi) = if a.degrees {
        (a.theta.to_radians(), a.phi.to_radians())
    } else {
        (a.theta, a.phi)
    };
    let p = AngularPoint::new(theta, phi)?;
    let j = e.eval_jet(p)?;
    writeln!(out, "expr        {e}")?;
    writeln!(out, "theta       {theta:.15e}")?;
    writeln!(out, "phi         {phi:.15e}")?;
    writeln!(out, "holomorphic {}", e.is_holomorphic())?;
    writeln!(out, "f           {}", fmt_c(j.value))?;
    writeln!(out, "f_theta     {}", fmt_c(j.d_theta))?;
    writeln!(out, "f_phi       {}", fmt_c(j.d_phi))?;
    writeln!(out, "f_thetatheta {}", fmt_c(j.d_theta_theta))?;
    writeln!(out, "f_thetaphi  {}", fmt_c(j.d_theta_phi))?;
    writeln!(out, "f_phiphi    {}", fmt_c(j.d_phi_phi))?;
    if a.show_d {
        writeln!(out, "D f         {}", fmt_c(j.d_operator(phi)))?;
        writeln!(out, "Dbar f      {}", fmt_c(j.dbar_operator(phi)))?;
    }
    Ok(EXIT_OK)
}

/// Accepts decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> Option<u64> {
    let s = s.trim();
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}

pub fn suite_config(a: &VerifyArgs) -> std::result::Result<SuiteConfig, Failure> {
    let mut cfg = SuiteConfig::default();
    let seed = match (&a.seed, std::env::var(SEED_ENV).ok()) {
        (Some(s), _) => Some((s.clone(), "--seed")),
        (None, Some(s)) => Some((s, SEED_ENV)),
        (None, None) => None,
    };
    if let Some((s, source)) = seed {
        cfg.seed = parse_seed(&s).ok_or_else(|| Failure::usage(format!("invalid seed {s:?} from {source}")))?;
    }
    if !a.check.is_empty() && !a.all {
        let mut groups = Vec::new();
        for name in &a.check {
            let g = CheckGroup::from_name(name.trim()).ok_or_else(|| {
                let known: Vec<_> = CheckGroup::ALL.iter().map(|g| g.name()).collect();
                Failure::usage(format!("unknown check group {name:?}; expected one of {}", known.join(", ")))
            })?;
            groups.push(g);
        }
        cfg.groups = groups;
    }
    cfg.controls = !a.no_controls;
    if let Some(t) = a.tol_override {
        if !(t >= 0.0) {
            return Err(Failure::usage(format!("tolerance must be non-negative, got {t}")));
        }
        cfg = cfg.with_tolerance(t);
    }
    Ok(cfg)
}

/// Pretty JSON with a trailing newline.
pub fn report_json(r: &SuiteReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("report serializes");
    s.push('\n');
    s
}

/// Columns: name, status, metric, tolerance, points_tested, details.
pub fn write_checks_csv<W: Write>(w: W, checks: &[CheckReport]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["name", "status", "metric", "tolerance", "points_tested", "details"])?;
    for c in checks {
        let status = match c.status {
            verify::CheckStatus::Pass => "pass",
            verify::CheckStatus::Fail => "fail",
            verify::CheckStatus::Error => "error",
        };
        wr.write_record([
            c.name.as_str(),
            status,
            &c.metric.to_string(),
            &c.tolerance.to_string(),
            &c.points_tested.to_string(),
            c.details.as_str(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

fn write_file(path: &Path, contents: &[u8]) -> std::result::Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure {
        code: EXIT_FAIL,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let cfg = suite_config(a)?;
    let report = verify::run_suite(&cfg);
    for c in &report.checks {
        let tag = match c.status {
            verify::CheckStatus::Pass => "PASS ",
            verify::CheckStatus::Fail => "FAIL ",
            verify::CheckStatus::Error => "ERROR",
        };
        writeln!(out, "{tag} {:<60} metric={:e} tol={:e}", c.name, c.metric, c.tolerance)?;
    }
    let failed = report.failures().count();
    writeln!(
        out,
        "{} checks, {} not passed, {} ms",
        report.checks.len(),
        failed,
        report.wall_time_ms
    )?;
    if let Some(path) = &a.json {
        write_file(path, report_json(&report).as_bytes())?;
    }
    if let Some(path) = &a.csv {
        let mut buf = Vec::new();
        write_checks_csv(&mut buf, &report.checks).map_err(|e| Failure {
            code: EXIT_FAIL,
            message: e.to_string(),
        })?;
        write_file(path, &buf)?;
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_FAIL })
}

/// `k = 0` selects the limit member for any `m >= 1`.
fn family_index(a: &IndexArgs) -> std::result::Result<(RadialParams, FamilyIndex), Failure> {
    let idx = if a.k == 0 {
        FamilyIndex::k_zero_limit(a.m)?
    } else {
        FamilyIndex::new(a.k, a.m)?
    };
    Ok((RadialParams::new(a.n)?, idx))
}

pub fn cmd_norm(a: &NormArgs, out: &mut dyn Write) -> CmdResult {
    let (rp, idx) = family_index(&a.index)?;
    let g = family::g_km(rp, idx);
    let q = quadrature::r3_norm_sq(|q| g.eval(q), idx.phi_singularity(), rp.n(), a.tol)?;
    writeln!(out, "n                      {}", rp.n())?;
    writeln!(out, "k/m                    {}/{}", idx.k(), idx.m())?;
    writeln!(out, "normalization constant {:.15e}", g.normalization())?;
    writeln!(out, "phi integral (closed)  {:.15e}", family::phi_integral_closed_form(idx))?;
    writeln!(out, "squared norm           {:.15e}", q.value)?;
    writeln!(out, "error estimate         {:e}", q.abs_error_estimate)?;
    writeln!(out, "evaluations            {}", q.evaluations)?;
    Ok(EXIT_OK)
}

pub fn cmd_residual(a: &ResidualArgs, out: &mut dyn Write) -> CmdResult {
    let (rp, idx) = family_index(&a.index)?;
    let g = family::g_km(rp, idx);
    let p = AngularPoint::new(a.theta, a.phi)?;
    let mut header = vec!["r".to_string()];
    header.extend(a.h.iter().map(|h| format!("rel_residual_h={h:e}")));
    writeln!(out, "{}", header.join(","))?;
    for &r in &a.radii {
        let q = Point3D::from_parts(r, p)?;
        let mut row = vec![format!("{r}")];
        for &h in &a.h {
            let s = StencilSpec::uniform(StencilOrder::Second, h)?;
            let res = checks::schrodinger_residual(
                |r| g.radial_part(r),
                |r| family::potential_nu(rp, r),
                |a| g.angular_value(a),
                q,
                &s,
            )?;
            row.push(format!("{:e}", res.norm() / g.eval(q).norm()));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(EXIT_OK)
}

/// One row of the phi-integral table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiRow {
    pub k: i32,
    pub m: i32,
    pub closed_form: f64,
    pub quadrature: f64,
    pub abs_diff: f64,
}

/// Rows for `1 <= k < m <= m_max`.
pub fn phi_table(m_max: i32, tol: f64) -> crate::Result<Vec<PhiRow>> {
    let mut rows = Vec::new();
    for m in 2..=m_max {
        for k in 1..m {
            let idx = FamilyIndex::new(k, m)?;
            let closed = family::phi_integral_closed_form(idx);
            let q = quadrature::integrate_phi_singular_tan(
                |t| family::phi_integrand(idx, t),
                idx.phi_singularity(),
                tol,
            )?;
            rows.push(PhiRow {
                k,
                m,
                closed_form: closed,
                quadrature: q.value,
                abs_diff: (q.value - closed).abs(),
            });
        }
    }
    Ok(rows)
}

pub fn cmd_table(a: &TableArgs, out: &mut dyn Write) -> CmdResult {
    if a.m_max < 2 {
        return Err(Failure::usage("--m-max must be at least 2"));
    }
    let rows = phi_table(a.m_max, a.tol)?;
    let mut buf = Vec::new();
    {
        let mut wr = csv::Writer::from_writer(&mut buf);
        let csv_err = |e: csv::Error| Failure {
            code: EXIT_FAIL,
            message: e.to_string(),
        };
        wr.write_record(["k", "m", "closed_form", "quadrature", "abs_diff"]).map_err(csv_err)?;
        for r in rows {
            wr.write_record([
                r.k.to_string(),
                r.m.to_string(),
                format!("{:.8}", r.closed_form),
                format!("{:.8}", r.quadrature),
                format!("{:e}", r.abs_diff),
            ])
            .map_err(csv_err)?;
        }
        wr.flush()?;
    }
    match &a.out {
        Some(path) => write_file(path, &buf)?,
        None => out.write_all(&buf)?,
    }
    Ok(EXIT_OK)
}
