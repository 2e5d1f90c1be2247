//! Physical signal model: ULA responses, the cascaded transmitter-IRS-receiver
//! channel, training-signal synthesis and prior sampling.
//!
//! Angles are normalized (`psi = 2 d sin(phi) / lambda`) with half-wavelength
//! element spacing, so every physical angle maps into `[-1, 1]`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{CrbError, Result};
use crate::patterns::ReflectionPattern;
use crate::{CVector, I};

/// Dimensions and powers of one training period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    /// Reflecting elements at the IRS.
    pub n: usize,
    /// Training symbols.
    pub k: usize,
    /// Paths in the cascaded channel.
    pub l: usize,
    /// Training-symbol power (symbols are fixed to `sqrt(rho)`).
    pub rho: f64,
    /// Receiver noise variance.
    pub sigma_n_sq: f64,
    /// Squared reflection modulus, `|w_nk|^2 = beta`.
    pub beta: f64,
}

impl SystemConfig {
    pub fn new(n: usize, k: usize, l: usize, rho: f64, sigma_n_sq: f64, beta: f64) -> Result<Self> {
        let cfg = Self {
            n,
            k,
            l,
            rho,
            sigma_n_sq,
            beta,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Unit noise variance with `rho = 10^(snr_db / 10)`.
    pub fn from_snr_db(n: usize, k: usize, l: usize, snr_db: f64, beta: f64) -> Result<Self> {
        Self::new(n, k, l, 10f64.powf(snr_db / 10.0), 1.0, beta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(CrbError::InvalidConfig(format!("N must be >= 2, got {}", self.n)));
        }
        if self.k < 1 || self.l < 1 {
            return Err(CrbError::InvalidConfig(format!(
                "K and L must be >= 1, got K={} L={}",
                self.k, self.l
            )));
        }
        if !(self.rho > 0.0 && self.sigma_n_sq > 0.0) || !self.rho.is_finite() || !self.sigma_n_sq.is_finite() {
            return Err(CrbError::InvalidConfig(format!(
                "powers must be positive and finite, got rho={} sigma_n^2={}",
                self.rho, self.sigma_n_sq
            )));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(CrbError::InvalidConfig(format!("beta must lie in (0, 1], got {}", self.beta)));
        }
        Ok(())
    }

    /// `rho / sigma_n^2`.
    pub fn snr(&self) -> f64 {
        self.rho / self.sigma_n_sq
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr().log10()
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.rho = 10f64.powf(snr_db / 10.0) * self.sigma_n_sq;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_l(mut self, l: usize) -> Self {
        self.l = l;
        self
    }
}

/// Prior on the path gains (`alpha_0 ~ CN(mu0, sigma^2)`, reflected gains
/// `CN(0, sigma^2)`) and on the path angles (`Unif[delta1, delta2]`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub mu0: Complex64,
    pub sigma_sq: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl PriorSpec {
    pub fn new(mu0: Complex64, sigma_sq: f64, delta1: f64, delta2: f64) -> Result<Self> {
        let p = Self {
            mu0,
            sigma_sq,
            delta1,
            delta2,
        };
        p.validate()?;
        Ok(p)
    }

    /// Rician direct path, Rayleigh reflected paths and angles uniform over
    /// the whole domain.
    pub fn least_informative(mu0: Complex64, sigma_sq: f64) -> Result<Self> {
        Self::new(mu0, sigma_sq, -1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_sq > 0.0) || !self.sigma_sq.is_finite() {
            return Err(CrbError::InvalidConfig(format!("sigma^2 must be positive, got {}", self.sigma_sq)));
        }
        if !(-1.0 <= self.delta1 && self.delta1 < self.delta2 && self.delta2 <= 1.0) {
            return Err(CrbError::InvalidConfig(format!(
                "angle support must satisfy -1 <= delta1 < delta2 <= 1, got [{}, {}]",
                self.delta1, self.delta2
            )));
        }
        Ok(())
    }

    pub fn is_full_support(&self) -> bool {
        self.delta1 == -1.0 && self.delta2 == 1.0
    }

    /// `E{||alpha||^2} = sigma^2 (L + 1) + |mu0|^2`.
    pub fn expected_gain_energy(&self, l: usize) -> f64 {
        self.sigma_sq * (l as f64 + 1.0) + self.mu0.norm_sqr()
    }
}

/// One cascaded path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: Complex64,
    pub angle: f64,
}

/// Gains `alpha = [alpha_0, alpha_1, .., alpha_L]` and angles
/// `psi = [psi_1, .., psi_L]` of one channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub alpha: Vec<Complex64>,
    pub psi: Vec<f64>,
}

impl ChannelRealization {
    pub fn new(alpha: Vec<Complex64>, psi: Vec<f64>) -> Result<Self> {
        if alpha.len() != psi.len() + 1 {
            return Err(CrbError::DimensionMismatch {
                what: "gain vector length (L + 1)",
                expected: psi.len() + 1,
                got: alpha.len(),
            });
        }
        if let Some(bad) = psi.iter().find(|p| !(-1.0..=1.0).contains(*p)) {
            return Err(CrbError::InvalidConfig(format!("path angle {bad} outside [-1, 1]")));
        }
        Ok(Self { alpha, psi })
    }

    pub fn from_paths(alpha0: Complex64, paths: &[Path]) -> Result<Self> {
        let mut alpha = Vec::with_capacity(paths.len() + 1);
        alpha.push(alpha0);
        alpha.extend(paths.iter().map(|p| p.gain));
        Self::new(alpha, paths.iter().map(|p| p.angle).collect())
    }

    pub fn num_paths(&self) -> usize {
        self.psi.len()
    }

    /// `h = sum_l alpha_l u_N(psi_l)`, excluding the direct path.
    pub fn cascaded_vector(&self, n: usize) -> CVector {
        let mut h = CVector::zeros(n);
        for (a, &psi) in self.alpha[1..].iter().zip(&self.psi) {
            h += ula_response(psi, n) * *a;
        }
        h
    }
}

/// `u_N(psi)`, element `n` equal to `exp(i pi n psi)`.
pub fn ula_response(psi: f64, n: usize) -> CVector {
    CVector::from_fn(n, |m, _| Complex64::from_polar(1.0, PI * m as f64 * psi))
}

/// `du_N/dpsi`, element `n` equal to `i pi n exp(i pi n psi)`.
pub fn ula_response_derivative(psi: f64, n: usize) -> CVector {
    CVector::from_fn(n, |m, _| I * (PI * m as f64) * Complex64::from_polar(1.0, PI * m as f64 * psi))
}

/// `sum_{m=1}^{n-1} m^2`.
pub fn sum_of_squares(n: usize) -> f64 {
    let n = n as f64;
    (n - 1.0) * n * (2.0 * n - 1.0) / 6.0
}

/// Wraps an angle into `[-1, 1)` modulo 2. The ULA response is 2-periodic so
/// the wrapped angle produces the same exponentials.
pub fn wrap_angle(psi: f64) -> f64 {
    let w = (psi + 1.0).rem_euclid(2.0) - 1.0;
    // rem_euclid can round up to exactly 2.0 for tiny negative inputs
    if w >= 1.0 {
        w - 2.0
    } else {
        w
    }
}

/// Combines transmitter-to-IRS paths with IRS-to-receiver paths into the
/// `L_t * L_r` cascaded paths. Output order is transmitter-major.
pub fn cascade_channel(gains_t: &[Complex64], angles_t: &[f64], gains_r: &[Complex64], angles_r: &[f64]) -> Result<Vec<Path>> {
    if gains_t.is_empty() || gains_r.is_empty() {
        return Err(CrbError::EmptyPaths);
    }
    if gains_t.len() != angles_t.len() {
        return Err(CrbError::DimensionMismatch {
            what: "transmitter angles",
            expected: gains_t.len(),
            got: angles_t.len(),
        });
    }
    if gains_r.len() != angles_r.len() {
        return Err(CrbError::DimensionMismatch {
            what: "receiver angles",
            expected: gains_r.len(),
            got: angles_r.len(),
        });
    }
    if let Some(bad) = angles_t.iter().chain(angles_r).find(|p| !(-1.0..=1.0).contains(*p)) {
        return Err(CrbError::InvalidConfig(format!("path angle {bad} outside [-1, 1]")));
    }
    let mut paths = Vec::with_capacity(gains_t.len() * gains_r.len());
    for (gt, &at) in gains_t.iter().zip(angles_t) {
        for (gr, &ar) in gains_r.iter().zip(angles_r) {
            paths.push(Path {
                gain: gt * gr,
                angle: wrap_angle(at + ar),
            });
        }
    }
    Ok(paths)
}

/// `y = sqrt(rho) (alpha_0 1_K + W^H h) + n`.
pub fn synthesize_received(
    pattern: &ReflectionPattern,
    channel: &ChannelRealization,
    noise: &CVector,
    config: &SystemConfig,
) -> Result<CVector> {
    let (n, k) = (pattern.n(), pattern.k());
    if n != config.n || k != config.k {
        return Err(CrbError::DimensionMismatch {
            what: "pattern shape N*K",
            expected: config.n * config.k,
            got: n * k,
        });
    }
    if noise.len() != k {
        return Err(CrbError::DimensionMismatch {
            what: "noise length",
            expected: k,
            got: noise.len(),
        });
    }
    let h = channel.cascaded_vector(n);
    let mean = (pattern.matrix().adjoint() * h).add_scalar(channel.alpha[0]) * Complex64::from(config.rho.sqrt());
    Ok(mean + noise)
}

/// Circularly-symmetric complex Gaussian draw: real and imaginary parts are
/// independent `N(., var / 2)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, mean: Complex64, var: f64) -> Complex64 {
    let sd = (var / 2.0).sqrt();
    let normal = Normal::new(0.0, sd).expect("finite standard deviation");
    mean + Complex64::new(normal.sample(rng), normal.sample(rng))
}

/// Draws `CN(0, sigma_n^2)` noise of length `k`.
pub fn sample_noise<R: Rng + ?Sized>(rng: &mut R, k: usize, sigma_n_sq: f64) -> CVector {
    CVector::from_fn(k, |_, _| complex_normal(rng, Complex64::new(0.0, 0.0), sigma_n_sq))
}

/// Draws `psi_l ~ Unif[delta1, delta2]` for `l` paths.
pub fn sample_angles<R: Rng + ?Sized>(rng: &mut R, prior: &PriorSpec, l: usize) -> Vec<f64> {
    let uni = Uniform::new_inclusive(prior.delta1, prior.delta2).expect("valid support");
    (0..l).map(|_| uni.sample(rng)).collect()
}

/// One channel draw from the prior.
pub fn sample_prior<R: Rng + ?Sized>(prior: &PriorSpec, config: &SystemConfig, rng: &mut R) -> ChannelRealization {
    let mut alpha = Vec::with_capacity(config.l + 1);
    alpha.push(complex_normal(rng, prior.mu0, prior.sigma_sq));
    for _ in 0..config.l {
        alpha.push(complex_normal(rng, Complex64::new(0.0, 0.0), prior.sigma_sq));
    }
    let psi = sample_angles(rng, prior, config.l);
    ChannelRealization { alpha, psi }
}
