//! Time-fractional diffusion on `[0,1]` with Neumann boundary conditions.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fracevo::fracops::{inf_norm, SampledPath, C64};
use fracevo::opalgebra::MatrixOperator;
use fracevo::solver::{regularity_verifier, solve_default, Forcing, ProblemKind, ProblemSpec, RegularityReport, SolutionBundle};
use fracevo::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Shift recorded for the discrete Laplacian's sector vertex.
pub const LAPLACIAN_LAMBDA0: f64 = 1e-3;
/// Margin kept between the rotated spectrum and the sector boundary.
pub const SECTOR_MARGIN: f64 = 0.05;
pub const MIN_SPATIAL_N: usize = 8;

/// Cell-centred Neumann second difference on `n` cells of `[0,1]`, times `e^{iφ}/h²`.
pub fn build_neumann_laplacian(n: usize, rotation_phi: f64) -> Result<MatrixOperator> {
    if n < 3 {
        return Err(Error::Domain(format!("the Laplacian needs n >= 3, got {n}")));
    }
    let sector = PI - rotation_phi.abs() - SECTOR_MARGIN;
    if !(sector > 0.0) {
        return Err(Error::SectorViolation(format!("rotation {rotation_phi} leaves no sector")));
    }
    let h = 1.0 / n as f64;
    let scale = C64::from_polar(1.0 / (h * h), rotation_phi);
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        if i > 0 {
            m[(i, i - 1)] = scale;
            m[(i, i)] -= scale;
        }
        if i + 1 < n {
            m[(i, i + 1)] = scale;
            m[(i, i)] -= scale;
        }
    }
    MatrixOperator::new(m, LAPLACIAN_LAMBDA0, sector)
}

/// Cell centres `(i + 1/2)/n`.
pub fn cell_centres(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
}

/// Named spatial profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    Constant { value: f64 },
    /// `amplitude · cos(kπs)`, an exact eigenvector of the discrete operator.
    Eigenmode {
        k: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `|s - s0|^γ`.
    Cusp { gamma: f64, s0: f64 },
    /// One value per line, optionally `re,im`.
    Csv { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

impl Profile {
    pub fn sample(&self, n: usize, base_dir: Option<&Path>) -> Result<DVector<C64>> {
        let s = cell_centres(n);
        let real = |f: &dyn Fn(f64) -> f64| DVector::from_iterator(n, s.iter().map(|&x| C64::new(f(x), 0.0)));
        Ok(match self {
            Profile::Zero => DVector::zeros(n),
            Profile::Constant { value } => real(&|_| *value),
            Profile::Eigenmode { k, amplitude } => real(&|x| amplitude * (*k as f64 * PI * x).cos()),
            Profile::Cusp { gamma, s0 } => {
                if !(*gamma > 0.0) {
                    return Err(Error::Domain(format!("cusp exponent must be positive, got {gamma}")));
                }
                real(&|x| (x - s0).abs().powf(*gamma))
            }
            Profile::Csv { path } => {
                let full = match base_dir {
                    Some(d) if path.is_relative() => d.join(path),
                    _ => path.clone(),
                };
                let v = read_profile_csv(&full)?;
                if v.len() != n {
                    return Err(Error::Shape(format!("profile {} has {} values, grid has {n}", full.display(), v.len())));
                }
                v
            }
        })
    }
}

fn read_profile_csv(path: &Path) -> Result<DVector<C64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .unwrap_or("0")
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
        };
        out.push(C64::new(parse(0)?, if rec.len() > 1 { parse(1)? } else { 0.0 }));
    }
    Ok(DVector::from_vec(out))
}

/// Forcing `profile(s) · t^exponent`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScenarioForcing {
    Zero,
    Separable {
        profile: Profile,
        #[serde(default)]
        exponent: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub alpha: f64,
    /// Rotation angle of `e^{iφ}`.
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub beta_target: Option<f64>,
    #[serde(default)]
    pub theta_target: Option<f64>,
    pub spatial_n: usize,
    pub t_end: f64,
    pub grid_n: usize,
    pub u0: Profile,
    #[serde(default)]
    pub u1: Option<Profile>,
    #[serde(default = "zero_forcing")]
    pub forcing: ScenarioForcing,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn zero_forcing() -> ScenarioForcing {
    ScenarioForcing::Zero
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.phi.abs() >= (2.0 - self.alpha) * FRAC_PI_2 {
            return Err(Error::SectorViolation(format!(
                "|φ| = {} must stay below (2 - α)π/2 = {:.4}",
                self.phi.abs(),
                (2.0 - self.alpha) * FRAC_PI_2
            )));
        }
        if self.spatial_n < MIN_SPATIAL_N {
            return Err(Error::InvalidProblem(format!("spatial_n must be at least {MIN_SPATIAL_N}")));
        }
        if self.grid_n < fracevo::fracops::MIN_INTERVALS {
            return Err(Error::InvalidProblem(format!("grid_n must be at least {}", fracevo::fracops::MIN_INTERVALS)));
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    /// Caputo problem for this configuration.
    pub fn problem(&self, base_dir: Option<&Path>) -> Result<ProblemSpec> {
        self.validate()?;
        let n = self.spatial_n;
        let op = build_neumann_laplacian(n, self.phi)?;
        let mut p = ProblemSpec::new(ProblemKind::Caputo, self.alpha, op, self.t_end).with_u0(self.u0.sample(n, base_dir)?);
        if self.alpha > 1.0 {
            p = p.with_u1(self.u1.clone().unwrap_or(Profile::Zero).sample(n, base_dir)?);
        } else if self.u1.is_some() {
            return Err(Error::InvalidProblem("u1 is only used when α > 1".into()));
        }
        p.forcing = match &self.forcing {
            ScenarioForcing::Zero => Forcing::Zero,
            ScenarioForcing::Separable { profile, exponent } => {
                let v = profile.sample(n, base_dir)?;
                if *exponent == 0.0 {
                    Forcing::Constant(v)
                } else {
                    Forcing::Power { exponent: *exponent, coeff: v }
                }
            }
        };
        p.beta_target = self.beta_target;
        p.theta_target = self.theta_target;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Serialize)]
struct CompatibilityLine<'a> {
    id: &'a str,
    locus: &'a str,
    value: f64,
    verdict: fracevo::solver::Verdict,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct Diagnostics<'a> {
    alpha: f64,
    dim: usize,
    grid_n: usize,
    residual_sup: f64,
    holder_exponent_frac_deriv: f64,
    holder_exponent_Au: f64,
    compatibility: Vec<CompatibilityLine<'a>>,
    compatibility_overall: Option<bool>,
    regularity: Option<&'a RegularityReport>,
    mass_trace: &'a [f64],
    contour: fracevo::solver::ContourSummary,
}

pub struct ScenarioOutcome {
    pub bundle: SolutionBundle,
    pub regularity: Option<RegularityReport>,
    /// Real part of the spatial mean at each grid time.
    pub mass_trace: Vec<f64>,
    pub files: Vec<PathBuf>,
}

impl ScenarioOutcome {
    pub fn compatible(&self) -> bool {
        self.bundle.compatibility.as_ref().map_or(true, |c| c.overall)
    }
}

fn spatial_mean(v: &DMatrix<C64>, k: usize) -> C64 {
    v.column(k).iter().sum::<C64>() / C64::new(v.nrows() as f64, 0.0)
}

/// Real part of the spatial mean at each grid time.
pub fn mass_trace(u: &SampledPath) -> Vec<f64> {
    (0..u.values().ncols()).map(|k| spatial_mean(u.values(), k).re).collect()
}

/// Writes `u.csv`, `frac_deriv.csv`, `au.csv`, `diagnostics.json`,
/// `plot_data.csv` and `holder_fit.csv` into `dir`.
pub fn write_artifacts(dir: &Path, bundle: &SolutionBundle, regularity: Option<&RegularityReport>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut write_path = |name: &str, path: &SampledPath| -> Result<()> {
        let f = dir.join(name);
        let mut w = BufWriter::new(File::create(&f)?);
        path.write_csv(&mut w)?;
        w.flush()?;
        files.push(f);
        Ok(())
    };
    write_path("u.csv", &bundle.u)?;
    write_path("frac_deriv.csv", &bundle.frac_deriv)?;
    write_path("au.csv", &bundle.au)?;

    let values = bundle.u.values();
    let masses = mass_trace(&bundle.u);
    let compatibility = bundle
        .compatibility
        .iter()
        .flat_map(|c| c.entries.iter())
        .map(|e| CompatibilityLine { id: &e.id, locus: &e.locus, value: e.value, verdict: e.verdict })
        .collect();
    let diag = Diagnostics {
        alpha: bundle.alpha,
        dim: bundle.u.dim(),
        grid_n: bundle.u.intervals(),
        residual_sup: bundle.residual_sup,
        holder_exponent_frac_deriv: bundle.holder_frac_deriv.fitted_exponent,
        holder_exponent_Au: bundle.holder_au.fitted_exponent,
        compatibility,
        compatibility_overall: bundle.compatibility.as_ref().map(|c| c.overall),
        regularity,
        mass_trace: &masses,
        contour: bundle.contour,
    };
    let f = dir.join("diagnostics.json");
    let mut w = BufWriter::new(File::create(&f)?);
    serde_json::to_writer_pretty(&mut w, &diag)?;
    writeln!(w)?;
    w.flush()?;
    files.push(f);

    let f = dir.join("plot_data.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&f)?));
    w.write_record(["t", "norm_u", "mass_re", "mass_im"])?;
    for k in 0..values.ncols() {
        let m = spatial_mean(values, k);
        w.write_record([
            format!("{:.17e}", bundle.u.time(k)),
            format!("{:.17e}", inf_norm(values.column(k).iter())),
            format!("{:.17e}", m.re),
            format!("{:.17e}", m.im),
        ])?;
    }
    w.flush()?;
    files.push(f);

    let f = dir.join("holder_fit.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&f)?));
    w.write_record(["h", "modulus_frac_deriv", "modulus_au"])?;
    for (a, b) in bundle.holder_frac_deriv.exponent_grid.iter().zip(&bundle.holder_au.exponent_grid) {
        w.write_record([format!("{:.17e}", a.0), format!("{:.17e}", a.1), format!("{:.17e}", b.1)])?;
    }
    w.flush()?;
    files.push(f);
    Ok(files)
}

/// Solves the configured problem and, when `out_dir` is set, writes the artifacts there.
pub fn run_scenario(cfg: &ScenarioConfig, base_dir: Option<&Path>) -> Result<ScenarioOutcome> {
    let p = cfg.problem(base_dir)?;
    let bundle = solve_default(&p, cfg.grid_n)?;
    let regularity = cfg.beta_target.map(|b| regularity_verifier(&bundle, b));
    let files = match &cfg.out_dir {
        Some(dir) => write_artifacts(dir, &bundle, regularity.as_ref())?,
        None => Vec::new(),
    };
    let mass_trace = mass_trace(&bundle.u);
    Ok(ScenarioOutcome { bundle, regularity, mass_trace, files })
}
