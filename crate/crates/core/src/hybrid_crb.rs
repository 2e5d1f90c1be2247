//! Hybrid bound: Gaussian gains, deterministic angles.
//!
//! At fixed angles the gain/angle coupling averages to zero over the
//! zero-mean reflected gains and the angle block is diagonal, with entry
//! `l` equal to `(rho sigma^2 / sigma_n^2)` times the Fisher density at
//! `psi_l`.

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bayes_crb::{fisher_density_pattern, real_fim, CONDITION_WARN};
use crate::error::{CrbError, Result};
use crate::model::{sum_of_squares, ula_response, PriorSpec, SystemConfig};
use crate::patterns::ReflectionPattern;
use crate::CMatrix;

/// Densities below this fraction of the peak mark an angle unidentifiable.
pub const UNIDENTIFIABLE_FRACTION: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct HybridFimBlocks {
    /// `(rho/sigma_n^2) [[K, w_bar^H U], [U^H w_bar, U^H Q U]]`.
    pub j_aa_d: CMatrix,
    /// Diagonal, entries `lambda_l`.
    pub j_pp_d: DMatrix<f64>,
    /// `I / sigma^2`.
    pub j_aa_p: CMatrix,
    pub psi: Vec<f64>,
    /// Upper bound on every `lambda_l`, `(rho sigma^2/sigma_n^2) 2 pi^2 tr(Q) sum m^2`.
    pub density_peak: f64,
}

impl HybridFimBlocks {
    pub fn j_aa(&self) -> CMatrix {
        &self.j_aa_d + &self.j_aa_p
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.j_pp_d.diagonal().iter().copied().collect()
    }

    /// Real-valued FIM for `[Re alpha, Im alpha, psi]`.
    pub fn real_fim(&self) -> DMatrix<f64> {
        real_fim(&self.j_aa(), &self.j_pp_d)
    }
}

pub fn hybrid_fim_blocks(pattern: &ReflectionPattern, psi: &[f64], config: &SystemConfig, prior: &PriorSpec) -> Result<HybridFimBlocks> {
    pattern.validate(config)?;
    prior.validate()?;
    if psi.len() != config.l {
        return Err(CrbError::DimensionMismatch {
            what: "angle vector length (L)",
            expected: config.l,
            got: psi.len(),
        });
    }
    if let Some(bad) = psi.iter().find(|p| !(-1.0..=1.0).contains(*p)) {
        return Err(CrbError::InvalidConfig(format!("path angle {bad} outside [-1, 1]")));
    }
    let (n, k, l) = (config.n, config.k, config.l);
    let snr = config.snr();
    let wh = pattern.matrix().adjoint();
    // columns W^H u(psi_l)
    let mut a = CMatrix::zeros(k, l + 1);
    a.column_mut(0).fill(Complex64::new(1.0, 0.0));
    for (i, &p) in psi.iter().enumerate() {
        a.set_column(i + 1, &(&wh * ula_response(p, n)));
    }
    let j_aa_d = a.adjoint() * &a * Complex64::from(snr);

    let scale = snr * prior.sigma_sq;
    let lambdas: Vec<f64> = psi.iter().map(|&p| scale * fisher_density_pattern(p, pattern)).collect();
    let tr_q: f64 = pattern.matrix().iter().map(|z| z.norm_sqr()).sum();
    let density_peak = scale * 2.0 * std::f64::consts::PI.powi(2) * tr_q * sum_of_squares(n);
    Ok(HybridFimBlocks {
        j_aa_d,
        j_pp_d: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lambdas)),
        j_aa_p: CMatrix::identity(l + 1, l + 1) * Complex64::from(1.0 / prior.sigma_sq),
        psi: psi.to_vec(),
        density_peak,
    })
}

/// `sum_l 1 / lambda_l`.
pub fn hybrid_crb_psi(blocks: &HybridFimBlocks) -> Result<f64> {
    let floor = UNIDENTIFIABLE_FRACTION * blocks.density_peak;
    let mut acc = 0.0;
    for (index, lambda) in blocks.lambdas().into_iter().enumerate() {
        if !(lambda > floor) {
            return Err(CrbError::Unidentifiable {
                index,
                psi: blocks.psi[index],
                density: lambda,
            });
        }
        acc += 1.0 / lambda;
    }
    Ok(acc)
}

/// `L^2 / tr(J_pp,D)`, the lower bound on [`hybrid_crb_psi`] reached when all
/// densities coincide.
pub fn hybrid_crb_psi_lower_bound(blocks: &HybridFimBlocks) -> f64 {
    let l = blocks.psi.len() as f64;
    l * l / blocks.j_pp_d.trace()
}

/// `(J_aa,D + I/sigma^2)^-1`.
pub fn hybrid_gain_inverse(blocks: &HybridFimBlocks) -> Result<CMatrix> {
    hermitian_inverse(&blocks.j_aa(), "hybrid gain FIM")
}

/// `4 tr((J_aa,D + I/sigma^2)^-1)`, the gain part of the real-parameter
/// bound in the same convention as the Bayesian trace.
pub fn hybrid_crb_alpha(blocks: &HybridFimBlocks) -> Result<f64> {
    Ok(4.0 * hybrid_gain_inverse(blocks)?.trace().re)
}

pub fn hermitian_inverse(m: &CMatrix, what: &str) -> Result<CMatrix> {
    let herm = (m + m.adjoint()) * Complex64::from(0.5);
    let ev = herm.symmetric_eigenvalues();
    let (min, max) = (ev.min(), ev.max());
    if !(min > 0.0) || !min.is_finite() {
        return Err(CrbError::SingularFim(format!(
            "{what}: smallest eigenvalue {min:e}, largest {max:e}"
        )));
    }
    if max / min > CONDITION_WARN {
        warn!("{what} is ill-conditioned (condition number {:e})", max / min);
    }
    let chol = herm
        .cholesky()
        .ok_or_else(|| CrbError::SingularFim(format!("{what}: Cholesky factorisation failed")))?;
    Ok(chol.inverse())
}

/// Per-realization figures of merit, raw and normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridMetrics {
    /// `tr(J_pp,D^-1)`.
    pub angle: f64,
    /// `tr(J_pp,D^-1) / E{||psi||^2}` with `E{||psi||^2} = L/3`.
    pub angle_normalized: f64,
    /// `2 tr(J_aa^-1) / E{||alpha||^2}`.
    pub gain_normalized: f64,
    /// `2 [J_aa^-1]_11 / E{||alpha||^2}`.
    pub direct_gain_normalized: f64,
    /// Mean of `2 [J_aa^-1]_ll / E{||alpha||^2}` over the reflected paths.
    pub reflected_gain_normalized: f64,
}

/// `E{||psi||^2}` for angles uniform on `[-1, 1]`.
pub fn expected_angle_energy(l: usize) -> f64 {
    l as f64 / 3.0
}

pub fn hybrid_metrics(blocks: &HybridFimBlocks, prior: &PriorSpec) -> Result<HybridMetrics> {
    let l = blocks.psi.len();
    let angle = hybrid_crb_psi(blocks)?;
    let inv = hybrid_gain_inverse(blocks)?;
    let energy = prior.expected_gain_energy(l);
    let diag: Vec<f64> = inv.diagonal().iter().map(|z| 2.0 * z.re / energy).collect();
    Ok(HybridMetrics {
        angle,
        angle_normalized: angle / expected_angle_energy(l),
        gain_normalized: diag.iter().sum(),
        direct_gain_normalized: diag[0],
        reflected_gain_normalized: diag[1..].iter().sum::<f64>() / l as f64,
    })
}
