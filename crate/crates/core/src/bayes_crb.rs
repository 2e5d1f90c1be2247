//! Bayesian Fisher information with uniformly distributed path angles.
//!
//! The gain block `J_aa` is kept in its complex (Wirtinger) form. The real
//! information matrix for `[Re alpha, Im alpha, psi]` is obtained through the
//! complex-to-real map `M = 1/2 [[I, I], [-iI, iI]]`, which turns
//! `diag(J_aa, J_aa^*)` into `1/2 [[Re J, -Im J], [Im J, Re J]]`. The bound on
//! the real parameter therefore reads `4 tr(J_aa^-1) + tr(J_pp^-1)`.

use std::f64::consts::PI;

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{CrbError, Result};
use crate::model::{sum_of_squares, ula_response_derivative, PriorSpec, SystemConfig};
use crate::patterns::ReflectionPattern;
use crate::{CMatrix, CVector};

/// Condition number above which inversions are logged.
pub const CONDITION_WARN: f64 = 1e12;

/// Relative Hermitian-symmetry tolerance for Gram matrices.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// `E{exp(i n pi psi)}` for `psi ~ Unif[delta1, delta2]`.
pub fn characteristic_phi(n: i64, delta1: f64, delta2: f64) -> Complex64 {
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let x = n as f64 * PI;
    let half_width = x * (delta2 - delta1) / 2.0;
    let centre = Complex64::from_polar(1.0, x * (delta2 + delta1) / 2.0);
    centre * (half_width.sin() / half_width)
}

/// `[phi(0), phi(pi), .., phi((n - 1) pi)]`.
pub fn characteristic_vector(n: usize, prior: &PriorSpec) -> CVector {
    CVector::from_fn(n, |m, _| characteristic_phi(m as i64, prior.delta1, prior.delta2))
}

/// Likelihood and prior parts of the Bayesian FIM.
#[derive(Debug, Clone)]
pub struct BayesFimBlocks {
    /// `J_aa,D`, `(L+1) x (L+1)` Hermitian.
    pub j_aa_d: CMatrix,
    /// `J_pp,D`, `L x L` diagonal.
    pub j_pp_d: DMatrix<f64>,
    /// `J_aa,P = I / sigma^2` for the Gaussian gain prior.
    pub j_aa_p: CMatrix,
    /// `J_pp,P`, identically zero for uniform angles.
    pub j_pp_p: DMatrix<f64>,
    pub config: SystemConfig,
    pub prior: PriorSpec,
}

impl BayesFimBlocks {
    pub fn j_aa(&self) -> CMatrix {
        &self.j_aa_d + &self.j_aa_p
    }

    pub fn j_pp(&self) -> DMatrix<f64> {
        &self.j_pp_d + &self.j_pp_p
    }

    /// Real-valued FIM for `[Re alpha, Im alpha, psi]` in the `M` convention.
    pub fn real_fim(&self) -> DMatrix<f64> {
        real_fim(&self.j_aa(), &self.j_pp())
    }

    pub fn crb_trace(&self) -> Result<f64> {
        spd_inverse_trace(&self.real_fim(), "Bayesian FIM")
    }
}

/// Assembles the Bayesian FIM blocks for general angle support.
///
/// Reflected gains are zero-mean, so the gain/angle coupling vanishes and is
/// not stored.
pub fn bayes_fim_blocks(pattern: &ReflectionPattern, config: &SystemConfig, prior: &PriorSpec) -> Result<BayesFimBlocks> {
    pattern.validate(config)?;
    prior.validate()?;
    let (n, k, l) = (config.n, config.k, config.l);
    let q = pattern.gram();
    let w_bar = pattern.column_sum();
    let phi = characteristic_vector(n, prior);

    let nu1 = phi.dotc(&w_bar);
    let eta1 = phi.dotc(&(&q * &phi));
    let mut zeta1 = Complex64::new(0.0, 0.0);
    let mut zeta3 = 0.0;
    for c in 0..n {
        for r in 0..n {
            let ph = characteristic_phi(c as i64 - r as i64, prior.delta1, prior.delta2);
            let term = ph * q[(r, c)];
            zeta1 += term;
            zeta3 += (r * c) as f64 * term.re;
        }
    }
    zeta3 *= PI * PI;

    let snr = config.snr();
    let mut j_aa_d = CMatrix::from_element(l + 1, l + 1, eta1);
    j_aa_d[(0, 0)] = Complex64::from(k as f64);
    for i in 1..=l {
        j_aa_d[(i, 0)] = nu1;
        j_aa_d[(0, i)] = nu1.conj();
        j_aa_d[(i, i)] = Complex64::from(zeta1.re);
    }
    j_aa_d *= Complex64::from(snr);

    let j_pp = 2.0 * snr * prior.sigma_sq * zeta3;
    Ok(BayesFimBlocks {
        j_aa_d,
        j_pp_d: DMatrix::from_diagonal_element(l, l, j_pp),
        j_aa_p: CMatrix::identity(l + 1, l + 1) * Complex64::from(1.0 / prior.sigma_sq),
        j_pp_p: DMatrix::zeros(l, l),
        config: *config,
        prior: *prior,
    })
}

/// `1/2 [[Re J, -Im J], [Im J, Re J]]` for the gains followed by the angle block.
pub fn real_fim(j_aa: &CMatrix, j_pp: &DMatrix<f64>) -> DMatrix<f64> {
    let a = j_aa.nrows();
    let p = j_pp.nrows();
    let mut out = DMatrix::zeros(2 * a + p, 2 * a + p);
    for r in 0..a {
        for c in 0..a {
            let z = j_aa[(r, c)] * 0.5;
            out[(r, c)] = z.re;
            out[(a + r, a + c)] = z.re;
            out[(r, a + c)] = -z.im;
            out[(a + r, c)] = z.im;
        }
    }
    out.view_mut((2 * a, 2 * a), (p, p)).copy_from(j_pp);
    out
}

/// `tr(M^-1)` for a symmetric positive definite `M`, via Cholesky solves.
pub fn spd_inverse_trace(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(min > 0.0) || !min.is_finite() {
        return Err(CrbError::SingularFim(format!(
            "{what}: smallest eigenvalue {min:e}, largest {max:e}"
        )));
    }
    let cond = max / min;
    if cond > CONDITION_WARN {
        warn!("{what} is ill-conditioned (condition number {cond:e})");
    }
    let chol = sym
        .cholesky()
        .ok_or_else(|| CrbError::SingularFim(format!("{what}: Cholesky factorisation failed")))?;
    let inv = chol.solve(&DMatrix::identity(m.nrows(), m.ncols()));
    Ok(inv.trace())
}

/// `tau`, `kappa` and the first-row sum of a constant-modulus pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauKappa {
    /// `c + tr(Q) + (L-1) [Q]_11 - K` with `c = sigma_n^2 / (rho sigma^2)`.
    pub tau: f64,
    /// `sqrt(tau^2 + 4 L |w_bar_1|^2)`.
    pub kappa: f64,
    pub w1_bar: Complex64,
    /// `c = sigma_n^2 / (rho sigma^2)`, the gain-prior weight in units of `rho / sigma_n^2`.
    pub prior_offset: f64,
    pub l: usize,
}

impl TauKappa {
    /// `tau - c`, the part of `tau` carried by the pattern.
    pub fn pattern_tau(&self) -> f64 {
        self.tau - self.prior_offset
    }

    /// `sqrt((tau - c)^2 + 4 L |w_bar_1|^2)`, the split of the leading pair
    /// once the prior term on `alpha_0` is kept.
    pub fn spread(&self) -> f64 {
        let t = self.pattern_tau();
        (t * t + 4.0 * self.l as f64 * self.w1_bar.norm_sqr()).sqrt()
    }
}

pub fn tau_kappa(pattern: &ReflectionPattern, config: &SystemConfig, prior: &PriorSpec) -> Result<TauKappa> {
    pattern.validate(config)?;
    pattern.require_constant_modulus()?;
    let (n, k, l) = (config.n as f64, config.k as f64, config.l);
    let c = config.sigma_n_sq / (config.rho * prior.sigma_sq);
    // constant modulus: tr(Q) = N K beta and [Q]_11 = K beta
    let q11 = k * config.beta;
    let tau = c + n * k * config.beta + (l as f64 - 1.0) * q11 - k;
    let w1_bar = pattern.first_row_sum();
    let kappa = (tau * tau + 4.0 * l as f64 * w1_bar.norm_sqr()).sqrt();
    Ok(TauKappa {
        tau,
        kappa,
        w1_bar,
        prior_offset: c,
        l,
    })
}

/// The `(L+1) x (L+1)` matrix `[[0, x^* 1^T], [x 1, tau/L 11^T]]`.
pub fn rank_one_block_matrix(x: Complex64, tau: f64, l: usize) -> CMatrix {
    let mut m = CMatrix::from_element(l + 1, l + 1, Complex64::from(tau / l as f64));
    m[(0, 0)] = Complex64::new(0.0, 0.0);
    for i in 1..=l {
        m[(0, i)] = x.conj();
        m[(i, 0)] = x;
    }
    m
}

/// Eigenvector pair of [`rank_one_block_matrix`] for eigenvalues `(tau -+ kappa)/2`,
/// as an `(L+1) x 2` matrix.
pub fn rank_one_block_eigenvectors(x: Complex64, tau: f64, l: usize) -> CMatrix {
    let lf = l as f64;
    let mut e = CMatrix::zeros(l + 1, 2);
    let x2 = x.norm_sqr();
    if x2 == 0.0 {
        // eigenvalue order is (tau - |tau|)/2, (tau + |tau|)/2
        let (lo, hi) = if tau >= 0.0 { (0, 1) } else { (1, 0) };
        e[(0, lo)] = Complex64::new(1.0, 0.0);
        for i in 1..=l {
            e[(i, hi)] = Complex64::from(1.0 / lf.sqrt());
        }
        return e;
    }
    let kappa = (tau * tau + 4.0 * lf * x2).sqrt();
    // 1 -+ tau/kappa without cancellation
    let (one_minus, one_plus) = if tau >= 0.0 {
        (4.0 * lf * x2 / (kappa * (kappa + tau)), 1.0 + tau / kappa)
    } else {
        (1.0 - tau / kappa, 4.0 * lf * x2 / (kappa * (kappa - tau)))
    };
    let s = (2.0 * lf).sqrt();
    e[(0, 0)] = -x.conj() * (s / (kappa * one_minus.sqrt()));
    e[(0, 1)] = x.conj() * (s / (kappa * one_plus.sqrt()));
    for i in 1..=l {
        e[(i, 0)] = Complex64::from(one_minus.sqrt() / s);
        e[(i, 1)] = Complex64::from(one_plus.sqrt() / s);
    }
    e
}

/// Unitary `[f_1 | F_2]` diagonalising `11^T - I`, with `f_1 = 1/sqrt(L)`
/// and `F_2` the remaining normalised DFT columns.
pub fn ones_complement_basis(l: usize) -> CMatrix {
    let s = 1.0 / (l as f64).sqrt();
    CMatrix::from_fn(l, l, |r, c| Complex64::from_polar(s, -2.0 * PI * ((r * c) % l) as f64 / l as f64))
}

/// Closed-form spectrum of `J_aa / (rho / sigma_n^2)`.
#[derive(Debug, Clone)]
pub struct JaaSpectrum {
    /// `[K + (tau + c - s)/2, K + (tau + c + s)/2, K + tau - L [Q]_11 (x L-1)]`
    /// with `s` = [`TauKappa::spread`].
    pub eigenvalues: DVector<f64>,
    /// Unitary basis, column `i` pairs with `eigenvalues[i]`.
    pub basis: CMatrix,
    pub tau_kappa: TauKappa,
}

impl JaaSpectrum {
    /// `B diag(eigenvalues) B^H`.
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&self.eigenvalues.map(Complex64::from));
        &self.basis * d * self.basis.adjoint()
    }
}

/// Closed-form eigendecomposition of the full-support gain FIM (prior included).
///
/// `J_aa / (rho/sigma_n^2) = (K + c) I + F1(w_bar_1, tau - c)
/// + ((tau - c)/L - [Q]_11)((L-1) I - I^c)` on the reflected block, so the
/// helper factors apply with `tau - c` in place of `tau`.
pub fn jaa_eigendecomposition(pattern: &ReflectionPattern, config: &SystemConfig, prior: &PriorSpec) -> Result<JaaSpectrum> {
    let tk = tau_kappa(pattern, config, prior)?;
    let l = config.l;
    let k = config.k as f64;
    let c = tk.prior_offset;
    let t = tk.pattern_tau();
    let s = tk.spread();
    let q11 = k * config.beta;

    let mut eigenvalues = DVector::from_element(l + 1, k + tk.tau - l as f64 * q11);
    eigenvalues[0] = k + c + (t - s) / 2.0;
    eigenvalues[1] = k + c + (t + s) / 2.0;

    // x = [J]_{l,0} = w_bar_1 (the conjugate sits in the first row)
    let e = rank_one_block_eigenvectors(tk.w1_bar, t, l);
    let f = ones_complement_basis(l);
    let mut basis = CMatrix::zeros(l + 1, l + 1);
    basis.view_mut((0, 0), (l + 1, 2)).copy_from(&e);
    basis.view_mut((1, 2), (l, l - 1)).copy_from(&f.columns(1, l - 1));
    Ok(JaaSpectrum {
        eigenvalues,
        basis,
        tau_kappa: tk,
    })
}

/// `[K + (tau - kappa)/2, K + (tau + kappa)/2, K + tau - L [Q]_11 (x L-1)]`
/// with `tau` and `kappa` as defined in [`TauKappa`]. These are the
/// eigenvalues of `J_aa / (rho/sigma_n^2) - c e_0 e_0^T`: the prior term on
/// the direct-path gain is left out.
pub fn eigenvalues_without_direct_prior(pattern: &ReflectionPattern, config: &SystemConfig, prior: &PriorSpec) -> Result<DVector<f64>> {
    let tk = tau_kappa(pattern, config, prior)?;
    let (k, l) = (config.k as f64, config.l);
    let mut ev = DVector::from_element(l + 1, k + tk.tau - l as f64 * k * config.beta);
    ev[0] = k + (tk.tau - tk.kappa) / 2.0;
    ev[1] = k + (tk.tau + tk.kappa) / 2.0;
    Ok(ev)
}

/// `sigma_n^2 / (rho sigma^2) * 3 L / (pi^2 K beta (N-1) N (2N-1))`.
fn closed_form_angle_term(config: &SystemConfig, prior: &PriorSpec) -> f64 {
    let l = config.l as f64;
    let c = config.sigma_n_sq / (config.rho * prior.sigma_sq);
    c * l / (2.0 * PI * PI * config.k as f64 * config.beta * sum_of_squares(config.n))
}

/// Gain part `4 (sigma_n^2/rho) sum 1/lambda` of the closed-form bound as a
/// function of the leading-pair centre and split, holding the rest fixed.
pub fn gain_trace_from_pair(k: f64, centre: f64, split: f64, tail: f64, tail_mult: usize, inv_snr: f64) -> f64 {
    4.0 * inv_snr * (1.0 / (k + (centre - split) / 2.0) + 1.0 / (k + (centre + split) / 2.0) + tail_mult as f64 / tail)
}

/// Closed-form Bayesian CRB trace for constant-modulus patterns with angle
/// support `[-1, 1]`. Keeps the prior weight on `alpha_0`.
pub fn bayes_crb_closed_form(pattern: &ReflectionPattern, config: &SystemConfig, prior: &PriorSpec) -> Result<f64> {
    if !prior.is_full_support() {
        return Err(CrbError::InvalidConfig("closed form needs angle support [-1, 1]".into()));
    }
    let spec = jaa_eigendecomposition(pattern, config, prior)?;
    if let Some(bad) = spec.eigenvalues.iter().find(|&&e| !(e > 0.0)) {
        return Err(CrbError::SingularFim(format!("gain FIM eigenvalue {bad:e}")));
    }
    let inv_snr = 1.0 / config.snr();
    let gains: f64 = spec.eigenvalues.iter().map(|e| 1.0 / e).sum();
    Ok(4.0 * inv_snr * gains + closed_form_angle_term(config, prior))
}

/// Closed form with the prior weight on the direct-path gain dropped from the
/// gain FIM.
pub fn bayes_crb_without_direct_prior(pattern: &ReflectionPattern, config: &SystemConfig, prior: &PriorSpec) -> Result<f64> {
    let ev = eigenvalues_without_direct_prior(pattern, config, prior)?;
    let gains: f64 = ev.iter().map(|e| 1.0 / e).sum();
    Ok(4.0 * gains / config.snr() + closed_form_angle_term(config, prior))
}

/// Assembles the real FIM and inverts it numerically. Works for every
/// pattern and angle support.
pub fn bayes_crb_assembled(pattern: &ReflectionPattern, config: &SystemConfig, prior: &PriorSpec) -> Result<f64> {
    bayes_fim_blocks(pattern, config, prior)?.crb_trace()
}

/// Closed form when its preconditions hold, assembled FIM otherwise.
pub fn bayes_crb_trace(pattern: &ReflectionPattern, config: &SystemConfig, prior: &PriorSpec) -> Result<f64> {
    if pattern.is_constant_modulus() && prior.is_full_support() {
        bayes_crb_closed_form(pattern, config, prior)
    } else {
        warn!(
            "pattern `{}` (constant modulus: {}, full support: {}): using the assembled FIM",
            pattern.name(),
            pattern.is_constant_modulus(),
            prior.is_full_support()
        );
        bayes_crb_assembled(pattern, config, prior)
    }
}

/// `2 du^H Q du` at `psi`. `Q` must be Hermitian.
pub fn fisher_density(psi: f64, q: &CMatrix) -> Result<f64> {
    check_hermitian(q)?;
    let du = ula_response_derivative(psi, q.nrows());
    Ok(2.0 * du.dotc(&(q * &du)).re)
}

/// `2 sum_k |du^H w_k|^2`, the same density evaluated from `W` in `O(NK)`.
pub fn fisher_density_pattern(psi: f64, pattern: &ReflectionPattern) -> f64 {
    let du = ula_response_derivative(psi, pattern.n());
    2.0 * pattern.matrix().column_iter().map(|w| du.dotc(&w).norm_sqr()).sum::<f64>()
}

/// `2 pi^2 K beta sum_{m<N} m^2`, the angle average of the density over
/// `[-1, 1]` for every constant-modulus pattern. Also bounds the density
/// from above for any pattern with `tr(Q) = N K beta`.
pub fn integrated_density(config: &SystemConfig) -> f64 {
    2.0 * PI * PI * config.k as f64 * config.beta * sum_of_squares(config.n)
}

pub fn check_hermitian(q: &CMatrix) -> Result<()> {
    if !q.is_square() {
        return Err(CrbError::DimensionMismatch {
            what: "Gram matrix columns",
            expected: q.nrows(),
            got: q.ncols(),
        });
    }
    let scale = q.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let skew = (q - q.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
    if skew > HERMITIAN_TOL {
        return Err(CrbError::NotHermitian(skew));
    }
    Ok(())
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// `n` uniform points `-1 + 2 i / n` covering `[-1, 1)`.
pub fn angle_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect()
}

/// Max, min and mean of the density over a grid, in dB. The mean is taken on
/// the linear scale before conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityStats {
    pub max_db: f64,
    pub min_db: f64,
    pub mean_db: f64,
    pub mean_linear: f64,
}

pub fn density_stats(pattern: &ReflectionPattern, grid_points: usize) -> DensityStats {
    let values: Vec<f64> = angle_grid(grid_points)
        .into_iter()
        .map(|p| fisher_density_pattern(p, pattern))
        .collect();
    stats_of(&values)
}

pub fn stats_of(values: &[f64]) -> DensityStats {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    DensityStats {
        max_db: to_db(max),
        min_db: to_db(min),
        mean_db: to_db(mean),
        mean_linear: mean,
    }
}
