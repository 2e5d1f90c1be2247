//! IRS reflection-pattern matrices: the baseline generators, the
//! constant-modulus projection and a plain CSV storage format.
//!
//! The CSV format has one row per reflecting element and `2K` columns
//! holding `re, im` pairs for each training symbol, preceded by `#` comment
//! lines carrying `name`, `beta`, `n` and `k`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{CrbError, Result};
use crate::model::SystemConfig;
use crate::{CMatrix, CVector};

/// Modulus tolerance used when deciding whether a matrix is constant-modulus.
pub const MODULUS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionPattern {
    w: CMatrix,
    beta: f64,
    name: String,
    constant_modulus: bool,
}

impl ReflectionPattern {
    /// Wraps an arbitrary `N x K` matrix. The constant-modulus flag is set by
    /// checking every entry against `sqrt(beta)`.
    pub fn from_matrix(name: impl Into<String>, w: CMatrix, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(CrbError::InvalidConfig(format!("beta must be positive, got {beta}")));
        }
        if w.nrows() == 0 || w.ncols() == 0 {
            return Err(CrbError::InvalidConfig("empty reflection pattern".into()));
        }
        let constant_modulus = max_modulus_error(&w, beta) <= MODULUS_TOL;
        Ok(Self {
            w,
            beta,
            name: name.into(),
            constant_modulus,
        })
    }

    /// Rebuilds a pattern from `vec(W)` (column-major, element index fastest).
    pub fn from_vec(name: impl Into<String>, w_vec: &[Complex64], n: usize, k: usize, beta: f64) -> Result<Self> {
        if w_vec.len() != n * k {
            return Err(CrbError::DimensionMismatch {
                what: "vec(W) length",
                expected: n * k,
                got: w_vec.len(),
            });
        }
        Self::from_matrix(name, CMatrix::from_column_slice(n, k, w_vec), beta)
    }

    /// Element `k` is the only one active during symbol `k`.
    pub fn on_off(config: &SystemConfig) -> Result<Self> {
        check_k_le_n(config)?;
        let amp = Complex64::from(config.beta.sqrt());
        let w = CMatrix::from_fn(config.n, config.k, |p, q| if p == q { amp } else { Complex64::new(0.0, 0.0) });
        Self::from_matrix("on-off", w, config.beta)
    }

    /// First `K` columns of the `N x N` DFT matrix.
    pub fn dft_first_k(config: &SystemConfig) -> Result<Self> {
        check_k_le_n(config)?;
        let cols: Vec<usize> = (0..config.k).collect();
        Self::from_matrix("first-k", dft_columns(config.n, &cols, config.beta), config.beta)
    }

    /// `K` equi-spaced DFT columns, `c_k = round(k N / K)` for `k = 0..K`.
    pub fn dft_equispaced(config: &SystemConfig) -> Result<Self> {
        check_k_le_n(config)?;
        let cols = equispaced_columns(config.n, config.k);
        Self::from_matrix("equi-spaced", dft_columns(config.n, &cols, config.beta), config.beta)
    }

    /// Equi-spaced DFT columns with column `k` rotated by `exp(i 2 pi k / K)`,
    /// which zeroes the first-row sum.
    pub fn dft_equispaced_phase_shifted(config: &SystemConfig) -> Result<Self> {
        check_k_le_n(config)?;
        let cols = equispaced_columns(config.n, config.k);
        let mut w = dft_columns(config.n, &cols, config.beta);
        for (k, mut col) in w.column_iter_mut().enumerate() {
            let rot = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / config.k as f64);
            col *= rot;
        }
        Self::from_matrix("shifted", w, config.beta)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.w
    }

    pub fn into_matrix(self) -> CMatrix {
        self.w
    }

    /// `vec(W)` in column-major order.
    pub fn as_vec(&self) -> &[Complex64] {
        self.w.as_slice()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn k(&self) -> usize {
        self.w.ncols()
    }

    pub fn is_constant_modulus(&self) -> bool {
        self.constant_modulus
    }

    /// `Q = W W^H`.
    pub fn gram(&self) -> CMatrix {
        &self.w * self.w.adjoint()
    }

    /// `w_bar = sum_k w_k`.
    pub fn column_sum(&self) -> CVector {
        self.w.column_sum()
    }

    /// `w_bar_1 = sum_k [W]_{1,k}`.
    pub fn first_row_sum(&self) -> Complex64 {
        self.w.row(0).iter().sum()
    }

    pub fn max_modulus_error(&self) -> f64 {
        max_modulus_error(&self.w, self.beta)
    }

    /// Checks the pattern against a system configuration.
    pub fn validate(&self, config: &SystemConfig) -> Result<()> {
        if self.n() != config.n {
            return Err(CrbError::DimensionMismatch {
                what: "pattern rows (N)",
                expected: config.n,
                got: self.n(),
            });
        }
        if self.k() != config.k {
            return Err(CrbError::DimensionMismatch {
                what: "pattern columns (K)",
                expected: config.k,
                got: self.k(),
            });
        }
        if self.w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CrbError::InvalidConfig(format!("pattern `{}` has non-finite entries", self.name)));
        }
        Ok(())
    }

    pub fn require_constant_modulus(&self) -> Result<()> {
        if self.constant_modulus {
            Ok(())
        } else {
            Err(CrbError::NonConstantModulus(self.name.clone()))
        }
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv_to(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn write_csv_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# name={}", self.name)?;
        writeln!(out, "# beta={:e}", self.beta)?;
        writeln!(out, "# n={}", self.n())?;
        writeln!(out, "# k={}", self.k())?;
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for row in self.w.row_iter() {
            let fields: Vec<String> = row.iter().flat_map(|z| [format!("{:e}", z.re), format!("{:e}", z.im)]).collect();
            wtr.write_record(&fields)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv_to(File::create(path)?)
    }

    pub fn read_csv_from<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut name = String::from("loaded");
        let mut beta = None;
        for line in text.lines().filter_map(|l| l.strip_prefix('#')) {
            if let Some((key, value)) = line.trim().split_once('=') {
                match key.trim() {
                    "name" => name = value.trim().to_string(),
                    "beta" => beta = Some(value.trim().parse::<f64>().map_err(|e| CrbError::Parse(format!("beta: {e}")))?),
                    _ => {}
                }
            }
        }
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() % 2 != 0 {
                return Err(CrbError::Parse(format!("row {} has an odd number of fields", rows.len() + 1)));
            }
            let vals: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            let vals = vals.map_err(|e| CrbError::Parse(format!("row {}: {e}", rows.len() + 1)))?;
            rows.push(vals.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect());
        }
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if n == 0 || k == 0 {
            return Err(CrbError::Parse("pattern file has no entries".into()));
        }
        if rows.iter().any(|r| r.len() != k) {
            return Err(CrbError::Parse("ragged pattern rows".into()));
        }
        let w = CMatrix::from_fn(n, k, |p, q| rows[p][q]);
        // beta falls back to the mean squared modulus when the header is absent
        let beta = beta.unwrap_or_else(|| w.iter().map(|z| z.norm_sqr()).sum::<f64>() / (n * k) as f64);
        Self::from_matrix(name, w, beta)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv_from(File::open(path)?)
    }
}

fn check_k_le_n(config: &SystemConfig) -> Result<()> {
    if config.k > config.n {
        return Err(CrbError::InvalidConfig(format!(
            "K = {} exceeds N = {}: not enough distinct DFT columns or elements",
            config.k, config.n
        )));
    }
    Ok(())
}

fn max_modulus_error(w: &CMatrix, beta: f64) -> f64 {
    let amp = beta.sqrt();
    w.iter().map(|z| (z.norm() - amp).abs()).fold(0.0, f64::max)
}

/// Column indices `round(k N / K)`, `k = 0..K`.
pub fn equispaced_columns(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| ((i * n) as f64 / k as f64).round() as usize % n).collect()
}

/// `sqrt(beta) exp(-i 2 pi p c / N)` for the selected columns `c`.
pub fn dft_columns(n: usize, cols: &[usize], beta: f64) -> CMatrix {
    let amp = beta.sqrt();
    CMatrix::from_fn(n, cols.len(), |p, q| {
        let phase = -2.0 * PI * ((p * cols[q]) % n) as f64 / n as f64;
        Complex64::from_polar(amp, phase)
    })
}

/// Nearest point of the constant-modulus set, entrywise:
/// `sqrt(beta) exp(i arg(w))`. Zero entries map to `sqrt(beta)`.
pub fn project_constant_modulus(w: &[Complex64], beta: f64) -> Vec<Complex64> {
    let amp = beta.sqrt();
    w.iter().map(|&z| project_entry(z, amp)).collect()
}

pub fn project_constant_modulus_in_place(w: &mut [Complex64], beta: f64) {
    let amp = beta.sqrt();
    for z in w.iter_mut() {
        *z = project_entry(*z, amp);
    }
}

#[inline]
fn project_entry(z: Complex64, amp: f64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        Complex64::new(amp, 0.0)
    } else {
        z * (amp / r)
    }
}
