//! Uniformly sampled vector-valued functions on `[0, T]`.

use std::io::{Read, Write};

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Smallest admissible number of grid intervals.
pub const MIN_INTERVALS: usize = 8;

/// A known singular or fractional component `coeff · t^exponent` of a path.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerTerm {
    pub exponent: f64,
    pub coeff: DVector<C64>,
}

impl PowerTerm {
    pub fn new(exponent: f64, coeff: DVector<C64>) -> Self {
        Self { exponent, coeff }
    }

    /// Scalar factor `t^p` at a grid time. At `t = 0` the factor is 1 for
    /// `p = 0` and 0 otherwise (negative powers are kept out of the samples).
    pub fn factor(&self, t: f64) -> f64 {
        if t == 0.0 {
            if self.exponent == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            t.powf(self.exponent)
        }
    }
}

/// Uniform samples `values[:, k] ≈ u(k h)`, `k = 0..=N`, stored one column per time.
///
/// Optional [`PowerTerm`]s record the non-smooth part of `u` at `t = 0`; they
/// are included in `values`, and operators treat them analytically.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPath {
    t_end: f64,
    step: f64,
    values: DMatrix<C64>,
    terms: Vec<PowerTerm>,
}

pub fn inf_norm<'a, I: IntoIterator<Item = &'a C64>>(v: I) -> f64 {
    v.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl SampledPath {
    /// `values` has one column per grid time (`N + 1` columns) and one row per component.
    pub fn new(t_end: f64, values: DMatrix<C64>) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::Shape(format!("t_end must be positive, got {t_end}")));
        }
        if values.nrows() == 0 {
            return Err(Error::Shape("path dimension must be at least 1".into()));
        }
        if values.ncols() < MIN_INTERVALS + 1 {
            return Err(Error::Shape(format!(
                "path needs at least {} grid intervals, got {}",
                MIN_INTERVALS,
                values.ncols().saturating_sub(1)
            )));
        }
        let n = values.ncols() - 1;
        Ok(Self { t_end, step: t_end / n as f64, values, terms: Vec::new() })
    }

    pub fn zeros(t_end: f64, n: usize, dim: usize) -> Result<Self> {
        Self::new(t_end, DMatrix::zeros(dim, n + 1))
    }

    pub fn from_fn<F: FnMut(f64) -> DVector<C64>>(t_end: f64, n: usize, dim: usize, mut f: F) -> Result<Self> {
        let h = t_end / n as f64;
        let mut values = DMatrix::zeros(dim, n + 1);
        for k in 0..=n {
            let v = f(k as f64 * h);
            if v.len() != dim {
                return Err(Error::Shape(format!("sample at k = {k} has dimension {}, expected {dim}", v.len())));
            }
            values.set_column(k, &v);
        }
        Self::new(t_end, values)
    }

    pub fn from_scalar_fn<F: FnMut(f64) -> f64>(t_end: f64, n: usize, mut f: F) -> Result<Self> {
        Self::from_fn(t_end, n, 1, |t| DVector::from_element(1, C64::new(f(t), 0.0)))
    }

    /// Attach power terms already included in the samples.
    pub fn with_terms(mut self, terms: Vec<PowerTerm>) -> Result<Self> {
        for term in &terms {
            if term.coeff.len() != self.dim() {
                return Err(Error::Shape("power term dimension differs from path dimension".into()));
            }
            if !term.exponent.is_finite() || term.exponent <= -2.0 {
                return Err(Error::Domain(format!("power term exponent {} not supported", term.exponent)));
            }
        }
        self.terms = terms;
        self.merge_terms();
        Ok(self)
    }

    /// Build from a smooth sampled part plus analytic power terms (added to the samples).
    pub fn from_parts(t_end: f64, regular: DMatrix<C64>, terms: Vec<PowerTerm>) -> Result<Self> {
        let mut p = Self::new(t_end, regular)?;
        let samples = p.samples_of(&terms);
        p.values += samples;
        p.with_terms(terms)
    }

    fn merge_terms(&mut self) {
        let mut merged: Vec<PowerTerm> = Vec::new();
        for term in self.terms.drain(..) {
            match merged.iter_mut().find(|m| (m.exponent - term.exponent).abs() < 1e-12) {
                Some(m) => m.coeff += &term.coeff,
                None => merged.push(term),
            }
        }
        merged.retain(|t| t.coeff.iter().any(|c| *c != C64::new(0.0, 0.0)));
        merged.sort_by(|a, b| a.exponent.total_cmp(&b.exponent));
        self.terms = merged;
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of grid intervals `N`.
    pub fn intervals(&self) -> usize {
        self.values.ncols() - 1
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.intervals() {
            self.t_end
        } else {
            k as f64 * self.step
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.intervals()).map(|k| self.time(k)).collect()
    }

    pub fn values(&self) -> &DMatrix<C64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<C64> {
        self.values
    }

    pub fn value(&self, k: usize) -> DVector<C64> {
        self.values.column(k).into_owned()
    }

    pub fn terms(&self) -> &[PowerTerm] {
        &self.terms
    }

    pub fn without_terms(mut self) -> Self {
        self.terms.clear();
        self
    }

    /// Samples of a set of power terms on this grid.
    pub fn samples_of(&self, terms: &[PowerTerm]) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim(), self.intervals() + 1);
        for term in terms {
            for k in 0..=self.intervals() {
                let f = term.factor(self.time(k));
                if f != 0.0 {
                    let mut col = out.column_mut(k);
                    col.axpy(C64::new(f, 0.0), &term.coeff, C64::new(1.0, 0.0));
                }
            }
        }
        out
    }

    /// Samples with the power terms removed.
    pub fn remainder(&self) -> DMatrix<C64> {
        if self.terms.is_empty() {
            self.values.clone()
        } else {
            &self.values - self.samples_of(&self.terms)
        }
    }

    /// One component as a sequence.
    pub fn component(&self, i: usize) -> Vec<C64> {
        self.values.row(i).iter().cloned().collect()
    }

    /// `max_k ‖u(t_k)‖_∞` over `k >= k0`.
    pub fn sup_norm_from(&self, k0: usize) -> f64 {
        (k0..=self.intervals()).map(|k| inf_norm(self.values.column(k).iter())).fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm_from(0)
    }

    fn check_grid(&self, other: &SampledPath) -> Result<()> {
        if self.intervals() != other.intervals()
            || self.dim() != other.dim()
            || (self.t_end - other.t_end).abs() > 1e-12 * self.t_end
        {
            return Err(Error::Shape("paths live on different grids".into()));
        }
        Ok(())
    }

    /// `a·self + b·other`, power terms combined.
    pub fn lin_comb(&self, a: C64, other: &SampledPath, b: C64) -> Result<SampledPath> {
        self.check_grid(other)?;
        let values = &self.values * a + &other.values * b;
        let terms = self
            .terms
            .iter()
            .map(|t| PowerTerm::new(t.exponent, &t.coeff * a))
            .chain(other.terms.iter().map(|t| PowerTerm::new(t.exponent, &t.coeff * b)))
            .collect();
        let mut p = Self { t_end: self.t_end, step: self.step, values, terms };
        p.merge_terms();
        Ok(p)
    }

    pub fn add(&self, other: &SampledPath) -> Result<SampledPath> {
        self.lin_comb(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &SampledPath) -> Result<SampledPath> {
        self.lin_comb(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, a: C64) -> SampledPath {
        let mut p = self.clone();
        p.values *= a;
        for t in &mut p.terms {
            t.coeff *= a;
        }
        p.merge_terms();
        p
    }

    /// Pointwise `M u(t)`.
    pub fn apply_matrix(&self, m: &DMatrix<C64>) -> Result<SampledPath> {
        if m.ncols() != self.dim() {
            return Err(Error::Shape(format!("matrix has {} columns, path dimension is {}", m.ncols(), self.dim())));
        }
        let values = m * &self.values;
        let terms = self.terms.iter().map(|t| PowerTerm::new(t.exponent, m * &t.coeff)).collect();
        let mut p = Self { t_end: self.t_end, step: self.step, values, terms };
        p.merge_terms();
        Ok(p)
    }

    /// Same grid, new samples; power terms are dropped.
    pub fn with_values(&self, values: DMatrix<C64>) -> Result<SampledPath> {
        if values.shape() != self.values.shape() {
            return Err(Error::Shape("replacement samples have the wrong shape".into()));
        }
        Ok(Self { t_end: self.t_end, step: self.step, values, terms: Vec::new() })
    }

    /// CSV with header `t,re_0,im_0,re_1,im_1,...`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        for i in 0..self.dim() {
            header.push(format!("re_{i}"));
            header.push(format!("im_{i}"));
        }
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(1 + 2 * self.dim());
        for k in 0..=self.intervals() {
            record.clear();
            record.push(format!("{:.17e}", self.time(k)));
            for z in self.values.column(k).iter() {
                record.push(format!("{:.17e}", z.re));
                record.push(format!("{:.17e}", z.im));
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<SampledPath> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.len() < 3 || headers.len() % 2 == 0 || headers.get(0).map(str::trim) != Some("t") {
            return Err(Error::Parse("expected header t,re_0,im_0,...".into()));
        }
        let dim = (headers.len() - 1) / 2;
        let mut times = Vec::new();
        let mut cols: Vec<C64> = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("'{s}': {e}")));
            times.push(parse(&rec[0])?);
            for i in 0..dim {
                cols.push(C64::new(parse(&rec[1 + 2 * i])?, parse(&rec[2 + 2 * i])?));
            }
        }
        if times.len() < 2 || times[0].abs() > 1e-14 {
            return Err(Error::Parse("time column must start at 0".into()));
        }
        let n = times.len() - 1;
        let t_end = times[n];
        let h = t_end / n as f64;
        for (k, t) in times.iter().enumerate() {
            if (t - k as f64 * h).abs() > 1e-9 * t_end.max(1.0) {
                return Err(Error::Parse(format!("time grid is not uniform at row {k}")));
            }
        }
        SampledPath::new(t_end, DMatrix::from_vec(dim, n + 1, cols))
    }
}
