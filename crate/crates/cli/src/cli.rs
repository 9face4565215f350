//! Argument parsing and subcommand dispatch.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracevo::contour::{ContourSpec, QuadConfig};
use fracevo::fracops::{caputo_derivative, frac_integral, rl_derivative, SampledPath, C64};
use fracevo::solver::{compatibility_report, default_contour, regularity_verifier, solve_with, ProblemSpec};
use fracevo::specfun::{mittag_leffler, MlParams};
use fracevo::Error;

use crate::acceptance;
use crate::scenario::{run_scenario, write_artifacts, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "fraccli", version, about = "Fractional calculus, Mittag-Leffler functions and fractional Cauchy problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate the Mittag-Leffler function E_{α,β}(z).
    Ml(MlArgs),
    /// Apply a fractional operator to a sampled path in CSV form.
    Frac(FracArgs),
    /// Solve a problem described by a JSON document.
    Solve(SolveArgs),
    /// Print the compatibility report of a problem.
    Check(CheckArgs),
    /// Run the Neumann diffusion scenario.
    Diffuse(DiffuseArgs),
    /// Run the acceptance suite.
    Selftest,
}

#[derive(Args, Debug)]
pub struct MlArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Argument, `x` or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub z: String,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FracOp {
    Integral,
    Rl,
    Caputo,
}

#[derive(Args, Debug)]
pub struct FracArgs {
    #[arg(long, value_enum)]
    pub op: FracOp,
    #[arg(long)]
    pub alpha: f64,
    /// Input CSV with header `t,re_0,im_0,...`.
    pub input: PathBuf,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ContourArgs {
    #[arg(long)]
    pub contour_theta: Option<f64>,
    #[arg(long)]
    pub contour_radius: Option<f64>,
    /// Gauss–Legendre nodes per unit of local scale.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Tail tolerance for truncating the contour.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 1024)]
    pub grid_n: usize,
    /// Directory for the solution CSVs and diagnostics.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the document's Hölder target.
    #[arg(long)]
    pub beta: Option<f64>,
    #[command(flatten)]
    pub contour: ContourArgs,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Args, Debug)]
pub struct DiffuseArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub grid_n: Option<usize>,
}

/// Failure with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Parse(_) | Error::InvalidProblem(_) | Error::Shape(_) => {
                EXIT_USAGE
            }
            _ => EXIT_NUMERIC,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: msg.into() }
}

fn parse_complex(s: &str) -> Result<C64, Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|_| usage(format!("cannot parse '{s}' as a number")));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(usage(format!("expected 'x' or 're,im', got '{s}'"))),
    }
}

fn format_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{} {}", z.re, z.im)
    }
}

fn cmd_ml(a: &MlArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let z = parse_complex(&a.z)?;
    let p = match a.tol {
        Some(tol) => MlParams::with_tol(a.alpha, a.beta, tol)?,
        None => MlParams::new(a.alpha, a.beta)?,
    };
    let v = mittag_leffler(&p, z)?;
    writeln!(out, "{}", format_complex(v)).map_err(Error::from)?;
    Ok(())
}

fn cmd_frac(a: &FracArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let f = SampledPath::read_csv(File::open(&a.input).map_err(Error::from)?)?;
    let g = match a.op {
        FracOp::Integral => frac_integral(&f, a.alpha)?,
        FracOp::Rl => rl_derivative(&f, a.alpha)?,
        FracOp::Caputo => caputo_derivative(&f, a.alpha)?,
    };
    match &a.out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(Error::from)?);
            g.write_csv(&mut w)?;
            w.flush().map_err(Error::from)?;
        }
        None => g.write_csv(out)?,
    }
    Ok(())
}

fn contour_for(p: &ProblemSpec, c: &ContourArgs) -> Result<(ContourSpec, QuadConfig), Failure> {
    let base = default_contour(&p.operator, p.alpha, p.t_end)?;
    let spec = ContourSpec::keyhole(
        c.contour_theta.unwrap_or(base.theta()),
        c.contour_radius.unwrap_or(base.radius()),
        C64::new(0.0, 0.0),
    )?;
    let mut cfg = QuadConfig::default();
    if let Some(n) = c.nodes {
        cfg.nodes_per_unit = n;
    }
    if let Some(t) = c.tol {
        cfg.tail_tol = t;
    }
    Ok((spec, cfg))
}

fn load_problem(path: &Path, beta: Option<f64>) -> Result<ProblemSpec, Failure> {
    let mut p = ProblemSpec::from_json_file(path)?;
    if beta.is_some() {
        p.beta_target = beta;
        p.validate()?;
    }
    Ok(p)
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let p = load_problem(&a.config, a.beta)?;
    let (spec, cfg) = contour_for(&p, &a.contour)?;
    let bundle = solve_with(&p, a.grid_n, &spec, &cfg)?;
    let regularity = p.beta_target.map(|b| regularity_verifier(&bundle, b));
    if let Some(dir) = &a.out {
        write_artifacts(dir, &bundle, regularity.as_ref())?;
    }
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(|e| Failure::from(Error::from(e)));
    w(out, format!("residual_sup {:.6e}", bundle.residual_sup))?;
    w(out, format!("holder_exponent_frac_deriv {:.4}", bundle.holder_frac_deriv.fitted_exponent))?;
    w(out, format!("holder_exponent_Au {:.4}", bundle.holder_au.fitted_exponent))?;
    if let Some(c) = &bundle.compatibility {
        w(out, format!("compatibility {}", if c.overall { "pass" } else { "fail" }))?;
    }
    Ok(())
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let p = load_problem(&a.config, a.beta)?;
    if p.beta_target.is_none() && p.theta_target.is_none() {
        return Err(usage("check needs beta_target or theta_target (or --beta)"));
    }
    let r = compatibility_report(&p)?;
    serde_json::to_writer_pretty(&mut *out, &r).map_err(Error::from)?;
    writeln!(out).map_err(Error::from)?;
    Ok(())
}

fn cmd_diffuse(a: &DiffuseArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let mut cfg = ScenarioConfig::from_json_file(&a.config)?;
    if let Some(x) = a.alpha {
        cfg.alpha = x;
    }
    if a.beta.is_some() {
        cfg.beta_target = a.beta;
    }
    if let Some(n) = a.grid_n {
        cfg.grid_n = n;
    }
    if a.out.is_some() {
        cfg.out_dir = a.out.clone();
    }
    let o = run_scenario(&cfg, a.config.parent())?;
    let m0 = o.mass_trace.first().copied().unwrap_or(0.0);
    let drift = o.mass_trace.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max);
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(|e| Failure::from(Error::from(e)));
    w(out, format!("residual_sup {:.6e}", o.bundle.residual_sup))?;
    w(out, format!("mass_drift {drift:.3e}"))?;
    if let Some(r) = &o.regularity {
        w(out, format!(
            "regularity {} (exponents {:.3}, {:.3}; required {:.3})",
            if r.pass { "pass" } else { "fail" },
            r.exponent_frac_deriv,
            r.exponent_au,
            r.required
        ))?;
    }
    if !o.compatible() {
        log::warn!("initial data fail the compatibility conditions; see diagnostics.json");
        w(out, "compatibility fail".into())?;
    }
    Ok(())
}

fn cmd_selftest(out: &mut dyn Write) -> Result<(), Failure> {
    let mut all = true;
    for o in acceptance::run_all() {
        writeln!(out, "{}", o.line()).map_err(Error::from)?;
        all &= o.pass;
    }
    if all {
        Ok(())
    } else {
        Err(Failure { code: EXIT_NUMERIC, message: "some acceptance criteria failed".into() })
    }
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    match &cli.command {
        Command::Ml(a) => cmd_ml(a, out),
        Command::Frac(a) => cmd_frac(a, out),
        Command::Solve(a) => cmd_solve(a, out),
        Command::Check(a) => cmd_check(a, out),
        Command::Diffuse(a) => cmd_diffuse(a, out),
        Command::Selftest => cmd_selftest(out),
    }
}

/// Parses `args`, runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match dispatch(&cli, &mut lock) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = lock.flush();
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
