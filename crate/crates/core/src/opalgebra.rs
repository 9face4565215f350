//! Finite-dimensional operators: resolvent solves, sector estimation and the
//! interpolation-space norm `max(‖x‖, sup_t t^θ ‖Ã(t + Ã)^{-1} x‖)`, `Ã = λ₀ - A`.

use std::f64::consts::PI;
use std::io::{Read, Write};

use nalgebra::linalg::{Hessenberg, SymmetricEigen};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracops::{inf_norm, C64};

/// Dense complex matrix `A` with claimed sector data: `(λ - A)` is invertible with
/// `‖(λ - λ₀)(λ - A)^{-1}‖` bounded for `|arg(λ - λ₀)| < phi`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixOperator {
    entries: DMatrix<C64>,
    lambda0: f64,
    phi: f64,
}

/// Spectral norm.
pub fn op_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

fn frobenius(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl MatrixOperator {
    pub fn new(entries: DMatrix<C64>, lambda0: f64, phi: f64) -> Result<Self> {
        if entries.nrows() == 0 || !entries.is_square() {
            return Err(Error::Shape(format!("operator matrix must be square and nonempty, got {:?}", entries.shape())));
        }
        if !(lambda0 >= 0.0 && lambda0.is_finite()) {
            return Err(Error::Domain(format!("sector shift λ₀ must be ≥ 0, got {lambda0}")));
        }
        if !(phi > 0.0 && phi < PI) {
            return Err(Error::Domain(format!("sector half-angle must lie in (0, π), got {phi}")));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("operator matrix has non-finite entries".into()));
        }
        Ok(Self { entries, lambda0, phi })
    }

    pub fn from_real(entries: DMatrix<f64>, lambda0: f64, phi: f64) -> Result<Self> {
        Self::new(entries.map(|x| C64::new(x, 0.0)), lambda0, phi)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn apply(&self, x: &DVector<C64>) -> DVector<C64> {
        &self.entries * x
    }

    pub fn norm(&self) -> f64 {
        op_norm(&self.entries)
    }

    /// Real or complex JSON descriptor `{dim, entries, lambda0, phi}`.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let d: MatrixDescriptor = serde_json::from_str(s)?;
        d.into_operator()
    }

    pub fn to_descriptor(&self) -> MatrixDescriptor {
        MatrixDescriptor {
            dim: self.dim(),
            entries: (0..self.dim())
                .map(|i| (0..self.dim()).map(|j| Entry::Complex([self.entries[(i, j)].re, self.entries[(i, j)].im])).collect())
                .collect(),
            lambda0: self.lambda0,
            phi: self.phi,
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_descriptor())?)
    }

    /// Headerless CSV, one matrix row per line, either `n` real columns or `2n` interleaved re/im columns.
    pub fn read_csv<R: Read>(reader: R, lambda0: f64, phi: f64) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("'{s}': {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 {
            return Err(Error::Parse("empty matrix CSV".into()));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) || (width != n && width != 2 * n) {
            return Err(Error::Parse(format!("matrix CSV has {n} rows of width {width}; expected {n} or {}", 2 * n)));
        }
        let complex = width == 2 * n;
        let m = DMatrix::from_fn(n, n, |i, j| {
            if complex {
                C64::new(rows[i][2 * j], rows[i][2 * j + 1])
            } else {
                C64::new(rows[i][j], 0.0)
            }
        });
        Self::new(m, lambda0, phi)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for i in 0..self.dim() {
            let mut rec = Vec::with_capacity(2 * self.dim());
            for j in 0..self.dim() {
                rec.push(format!("{:.17e}", self.entries[(i, j)].re));
                rec.push(format!("{:.17e}", self.entries[(i, j)].im));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDescriptor {
    pub dim: usize,
    pub entries: Vec<Vec<Entry>>,
    #[serde(default)]
    pub lambda0: f64,
    pub phi: f64,
}

impl MatrixDescriptor {
    pub fn into_operator(self) -> Result<MatrixOperator> {
        if self.entries.len() != self.dim || self.entries.iter().any(|r| r.len() != self.dim) {
            return Err(Error::Shape(format!("matrix descriptor entries are not {0}×{0}", self.dim)));
        }
        let m = DMatrix::from_fn(self.dim, self.dim, |i, j| match self.entries[i][j] {
            Entry::Real(x) => C64::new(x, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        });
        MatrixOperator::new(m, self.lambda0, self.phi)
    }
}

/// `x` with `(λ - A) x = b`.
pub fn resolve(a: &MatrixOperator, lambda: C64, b: &DVector<C64>) -> Result<DVector<C64>> {
    if b.len() != a.dim() {
        return Err(Error::Shape(format!("right-hand side has length {}, operator dimension is {}", b.len(), a.dim())));
    }
    let m = DMatrix::from_diagonal_element(a.dim(), a.dim(), lambda) - a.entries();
    let x = m.clone().lu().solve(b).ok_or(Error::Singular(lambda))?;
    let residual = inf_norm((b - &m * &x).iter());
    let scale = inf_norm(b.iter()) + inf_norm(x.iter()) * (lambda.norm() + a.norm());
    if !residual.is_finite() || residual > 1e-10 * scale {
        return Err(Error::Singular(lambda));
    }
    Ok(x)
}

/// Repeated solves of `(μ - A) x = b` for many shifts `μ` at `O(n²)` each,
/// through the Hessenberg form `A = Q H Q*`.
#[derive(Clone, Debug)]
pub struct ShiftedSolver {
    q: DMatrix<C64>,
    h: DMatrix<C64>,
    scale: f64,
}

impl ShiftedSolver {
    pub fn new(a: &MatrixOperator) -> Self {
        let (q, h) = Hessenberg::new(a.entries().clone()).unpack();
        let scale = frobenius(&h).max(1.0);
        Self { q, h, scale }
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// `(μ - A)^{-1} B` for a block of right-hand sides.
    pub fn solve_many(&self, mu: C64, b: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let n = self.dim();
        if b.nrows() != n {
            return Err(Error::Shape("right-hand side rows differ from operator dimension".into()));
        }
        let mut m = -self.h.clone();
        for i in 0..n {
            m[(i, i)] += mu;
        }
        let mut y = self.q.ad_mul(b);
        let cols = y.ncols();
        // elimination on an upper Hessenberg matrix: one subdiagonal entry per column
        for k in 0..n.saturating_sub(1) {
            if m[(k + 1, k)].norm() > m[(k, k)].norm() {
                m.swap_rows(k, k + 1);
                y.swap_rows(k, k + 1);
            }
            let piv = m[(k, k)];
            if piv.norm() <= 1e-14 * self.scale {
                return Err(Error::Singular(mu));
            }
            let l = m[(k + 1, k)] / piv;
            if l != C64::new(0.0, 0.0) {
                for j in k..n {
                    let v = m[(k, j)];
                    m[(k + 1, j)] -= l * v;
                }
                for j in 0..cols {
                    let v = y[(k, j)];
                    y[(k + 1, j)] -= l * v;
                }
            }
        }
        if m[(n - 1, n - 1)].norm() <= 1e-14 * self.scale {
            return Err(Error::Singular(mu));
        }
        for j in 0..cols {
            for i in (0..n).rev() {
                let mut s = y[(i, j)];
                for k in i + 1..n {
                    s -= m[(i, k)] * y[(k, j)];
                }
                y[(i, j)] = s / m[(i, i)];
            }
        }
        Ok(&self.q * y)
    }

    pub fn solve(&self, mu: C64, b: &DVector<C64>) -> Result<DVector<C64>> {
        let x = self.solve_many(mu, &DMatrix::from_column_slice(b.len(), 1, b.as_slice()))?;
        Ok(x.column(0).into_owned())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayReport {
    /// `arg(λ - λ₀)`.
    pub angle: f64,
    /// `sup_r ‖r (λ₀ + r e^{iψ} - A)^{-1}‖` over the magnitude grid.
    pub sup: f64,
    /// The sup over the top decade exceeds twice the sup over the decade below it.
    pub growing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectorReport {
    pub phi: f64,
    pub eps: f64,
    pub rays: Vec<RayReport>,
    pub admissible: bool,
}

/// Bound above which a ray is declared non-sectorial.
pub const SECTOR_BOUND: f64 = 1e6;

/// Scan `‖(λ - λ₀)(λ - A)^{-1}‖` on the rays `|arg(λ - λ₀)| = φ - ε` and a fan inside them.
pub fn sectoriality_scan(a: &MatrixOperator, phi: f64, eps: f64, mag_grid: &[f64]) -> SectorReport {
    let edge = phi - eps;
    let fan = 4;
    let angles: Vec<f64> = (-fan..=fan).map(|k| edge * k as f64 / fan as f64).collect();
    let max_mag = mag_grid.iter().cloned().fold(0.0, f64::max);
    let rays = angles
        .into_iter()
        .map(|psi| {
            let dir = C64::from_polar(1.0, psi);
            let values: Vec<(f64, f64)> = mag_grid
                .iter()
                .map(|&r| {
                    let lam = dir * r + a.lambda0();
                    let m = DMatrix::from_diagonal_element(a.dim(), a.dim(), lam) - a.entries();
                    let smin = m.singular_values().min();
                    (r, if smin > 0.0 { r / smin } else { f64::INFINITY })
                })
                .collect();
            let sup = values.iter().map(|v| v.1).fold(0.0, f64::max);
            let top = values.iter().filter(|v| v.0 >= max_mag / 10.0).map(|v| v.1).fold(0.0, f64::max);
            let below = values
                .iter()
                .filter(|v| v.0 >= max_mag / 100.0 && v.0 < max_mag / 10.0)
                .map(|v| v.1)
                .fold(0.0, f64::max);
            let growing = below > 0.0 && top > 2.0 * below;
            RayReport { angle: psi, sup, growing }
        })
        .collect::<Vec<_>>();
    let admissible = rays.iter().all(|r| r.sup.is_finite() && r.sup <= SECTOR_BOUND && !r.growing);
    SectorReport { phi, eps, rays, admissible }
}

/// Log-spaced magnitudes from `lo` to `hi`, `per_decade` points per decade.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).ceil().max(1.0) as usize;
    (0..=n).map(|k| lo * 10f64.powf(decades * k as f64 / n as f64)).collect()
}

/// Default `t` grid for [`interp_norm`]: `1e-4 ‖A‖` to `1e4 ‖A‖`.
pub fn default_t_grid(a: &MatrixOperator) -> Vec<f64> {
    let scale = (a.norm() + a.lambda0()).max(1.0);
    log_grid(1e-4 * scale, 1e4 * scale, 12)
}

/// `max(‖x‖, sup_t t^θ ‖Ã (t + Ã)^{-1} x‖)` with `Ã = λ₀ - A`.
pub fn interp_norm(a: &MatrixOperator, theta: f64, x: &DVector<C64>, t_grid: &[f64]) -> Result<f64> {
    let solver = ShiftedSolver::new(a);
    interp_norm_with(&solver, a.lambda0(), theta, x, t_grid)
}

/// [`interp_norm`] reusing a prepared solver.
pub fn interp_norm_with(
    solver: &ShiftedSolver,
    lambda0: f64,
    theta: f64,
    x: &DVector<C64>,
    t_grid: &[f64],
) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!("interpolation exponent must lie in (0,1), got {theta}")));
    }
    let mut best = inf_norm(x.iter());
    for &t in t_grid {
        // Ã(t + Ã)^{-1} x = x - t (t + λ₀ - A)^{-1} x
        let r = solver.solve(C64::new(t + lambda0, 0.0), x)?;
        let v = x - r * C64::new(t, 0.0);
        best = best.max(t.powf(theta) * inf_norm(v.iter()));
    }
    Ok(best)
}

/// Eigen-decomposition `A = V diag(Λ) V*` of a normal matrix.
pub fn eig_oracle(a: &MatrixOperator) -> Result<(DVector<C64>, DMatrix<C64>)> {
    let m = a.entries();
    let adj = m.adjoint();
    let comm = frobenius(&(m * &adj - &adj * m));
    let norm2 = frobenius(m).powi(2);
    if comm > 1e-10 * norm2.max(f64::MIN_POSITIVE) {
        return Err(Error::NotNormal(comm));
    }
    // commuting Hermitian parts; an irrational mix separates their joint eigenvalues
    let herm = (m + &adj) * C64::new(0.5, 0.0);
    let skew = (m - &adj) * C64::new(0.0, -0.5);
    let mix = &herm + &skew * C64::new(std::f64::consts::SQRT_2 - 1.0, 0.0);
    let eig = SymmetricEigen::new(mix);
    let v = eig.eigenvectors;
    let lambdas = DVector::from_fn(a.dim(), |i, _| {
        let col = v.column(i);
        (col.adjoint() * m * col)[(0, 0)]
    });
    let recon = &v * DMatrix::from_diagonal(&lambdas) * v.adjoint();
    let err = op_norm(&(recon - m));
    if err > 1e-10 * a.norm().max(1.0) {
        return Err(Error::NotNormal(err));
    }
    Ok((lambdas, v))
}
