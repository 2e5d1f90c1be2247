//! Brute-force references for the closed-form bounds.
//!
//! Nothing here reuses formula code from [`crate::bayes_crb`] or
//! [`crate::hybrid_crb`]. The conditional FIM is built from the Jacobian of
//! the noiseless mean `m(alpha, psi) = sqrt(rho) (alpha_0 1 + W^H sum alpha_l u(psi_l))`,
//! `J = (1/sigma_n^2) Jac^H Jac`, and averaged over parameter draws. The
//! expectation over the noise is exact, so only parameter sampling adds
//! variance.
//!
//! Draw loops are split into a fixed number of chunks. Chunk `c` gets its own
//! ChaCha8 stream `(seed, c)` and chunk sums are reduced in chunk order, so
//! results do not depend on the rayon worker count.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{CrbError, Result};
use crate::model::{complex_normal, sample_angles, ChannelRealization, PriorSpec, SystemConfig};
use crate::patterns::ReflectionPattern;
use crate::{CMatrix, CVector};

/// Independent RNG streams per oracle run.
pub const CHUNKS: usize = 64;

/// `ln p(y | alpha, psi)` for `y ~ CN(m, sigma_n^2 I)`.
pub fn log_likelihood(y: &CVector, pattern: &ReflectionPattern, channel: &ChannelRealization, config: &SystemConfig) -> f64 {
    let r = y - mean_signal(pattern, channel, config);
    let k = config.k as f64;
    -k * (PI * config.sigma_n_sq).ln() - r.norm_squared() / config.sigma_n_sq
}

/// Noiseless received vector.
pub fn mean_signal(pattern: &ReflectionPattern, channel: &ChannelRealization, config: &SystemConfig) -> CVector {
    let (n, k) = (config.n, config.k);
    let mut h = CVector::zeros(n);
    for (a, &p) in channel.alpha[1..].iter().zip(&channel.psi) {
        for (i, hi) in h.iter_mut().enumerate() {
            *hi += a * Complex64::from_polar(1.0, PI * i as f64 * p);
        }
    }
    let sr = config.rho.sqrt();
    let mut m = pattern.matrix().adjoint() * h;
    for z in m.iter_mut() {
        *z = (*z + channel.alpha[0]) * sr;
    }
    debug_assert_eq!(m.len(), k);
    m
}

/// `dm/dalpha_j` (holomorphic, one column per gain).
fn gain_jacobian(wh: &CMatrix, psi: &[f64], config: &SystemConfig) -> CMatrix {
    let (n, k, l) = (config.n, config.k, psi.len());
    let sr = Complex64::from(config.rho.sqrt());
    let mut jac = CMatrix::from_element(k, l + 1, sr);
    for (j, &p) in psi.iter().enumerate() {
        let u = CVector::from_fn(n, |i, _| Complex64::from_polar(1.0, PI * i as f64 * p));
        jac.set_column(j + 1, &(wh * u * sr));
    }
    jac
}

/// `W^H du(psi_l) sqrt(rho)`: the angle derivative of the mean per unit gain.
fn angle_directions(wh: &CMatrix, psi: &[f64], config: &SystemConfig) -> CMatrix {
    let (n, k, l) = (config.n, config.k, psi.len());
    let sr = config.rho.sqrt();
    let mut out = CMatrix::zeros(k, l);
    for (j, &p) in psi.iter().enumerate() {
        let du = CVector::from_fn(n, |i, _| {
            let x = PI * i as f64;
            Complex64::new(0.0, x * sr) * Complex64::from_polar(1.0, x * p)
        });
        out.set_column(j, &(wh * du));
    }
    out
}

/// `d ln p / d alpha^*`.
pub fn score_alpha(y: &CVector, pattern: &ReflectionPattern, channel: &ChannelRealization, config: &SystemConfig) -> CVector {
    let r = y - mean_signal(pattern, channel, config);
    let jac = gain_jacobian(&pattern.matrix().adjoint(), &channel.psi, config);
    jac.adjoint() * r / Complex64::from(config.sigma_n_sq)
}

/// `d ln p / d psi_l`.
pub fn score_psi(y: &CVector, pattern: &ReflectionPattern, channel: &ChannelRealization, config: &SystemConfig) -> DVector<f64> {
    let r = y - mean_signal(pattern, channel, config);
    let dirs = angle_directions(&pattern.matrix().adjoint(), &channel.psi, config);
    DVector::from_fn(channel.psi.len(), |l, _| {
        let dm = dirs.column(l) * channel.alpha[l + 1];
        2.0 * dm.dotc(&r).re / config.sigma_n_sq
    })
}

/// Monte-Carlo estimate of the FIM blocks with elementwise standard errors.
/// Complex standard errors are `sqrt(se_re^2 + se_im^2)`.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub j_aa: CMatrix,
    pub j_aa_se: DMatrix<f64>,
    pub j_pp: DMatrix<f64>,
    pub j_pp_se: DMatrix<f64>,
    /// Gain/angle coupling `(1/sigma_n^2) E{(dm/dalpha)^H dm/dpsi}`.
    pub j_ap: CMatrix,
    pub j_ap_se: DMatrix<f64>,
    pub n_samples: usize,
}

impl OracleReport {
    pub fn cross_block_norm(&self) -> f64 {
        self.j_ap.norm()
    }

    pub fn cross_block_se_norm(&self) -> f64 {
        self.j_ap_se.norm()
    }
}

/// `||a - b||_F / ||b||_F`.
pub fn relative_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm()
}

enum GainMoments<'a> {
    /// `E{alpha_l^* alpha_m} = sigma^2 delta_lm`, `E{alpha_l} = 0` for reflected paths.
    Analytic(f64),
    Sampled(&'a [Complex64]),
}

/// Feature layout: `j_aa` (re, im), `j_pp`, `j_ap` (re, im), all column-major.
fn conditional_features(wh: &CMatrix, psi: &[f64], gains: GainMoments<'_>, config: &SystemConfig, out: &mut [f64]) {
    let l = psi.len();
    let a = l + 1;
    let s = 1.0 / config.sigma_n_sq;
    let jac = gain_jacobian(wh, psi, config);
    let jaa = jac.adjoint() * &jac;
    let dirs = angle_directions(wh, psi, config);
    let mut idx = 0;
    for z in jaa.iter() {
        out[idx] = z.re * s;
        out[idx + a * a] = z.im * s;
        idx += 1;
    }
    idx = 2 * a * a;
    let g = dirs.adjoint() * &dirs;
    match gains {
        GainMoments::Analytic(sigma_sq) => {
            for c in 0..l {
                for r in 0..l {
                    out[idx + r + c * l] = if r == c { 2.0 * s * sigma_sq * g[(r, r)].re } else { 0.0 };
                }
            }
            let base = idx + l * l;
            out[base..base + 2 * a * l].fill(0.0);
        }
        GainMoments::Sampled(alpha) => {
            for c in 0..l {
                for r in 0..l {
                    let v = alpha[r + 1].conj() * alpha[c + 1] * g[(r, c)];
                    out[idx + r + c * l] = 2.0 * s * v.re;
                }
            }
            let base = idx + l * l;
            let mut dm = dirs.clone();
            for (c, mut col) in dm.column_iter_mut().enumerate() {
                col *= alpha[c + 1];
            }
            let jap = jac.adjoint() * dm;
            for (i, z) in jap.iter().enumerate() {
                out[base + i] = z.re * s;
                out[base + a * l + i] = z.im * s;
            }
        }
    }
}

fn feature_len(l: usize) -> usize {
    let a = l + 1;
    2 * a * a + l * l + 2 * a * l
}

/// Runs `draw` for `n` samples split over [`CHUNKS`] streams; returns
/// (mean, standard error) per feature.
fn chunked_average<F>(n: usize, len: usize, seed: u64, draw: F) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let chunks = CHUNKS.min(n.max(1));
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = n / chunks + usize::from(c < n % chunks);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut sum = vec![0.0; len];
            let mut sq = vec![0.0; len];
            let mut buf = vec![0.0; len];
            for _ in 0..count {
                draw(&mut rng, &mut buf);
                for ((s, q), x) in sum.iter_mut().zip(sq.iter_mut()).zip(&buf) {
                    *s += x;
                    *q += x * x;
                }
            }
            (sum, sq)
        })
        .collect();
    let mut sum = vec![0.0; len];
    let mut sq = vec![0.0; len];
    for (s, q) in &partial {
        for i in 0..len {
            sum[i] += s[i];
            sq[i] += q[i];
        }
    }
    let nf = n as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let se = sq
        .iter()
        .zip(&mean)
        .map(|(q, m)| {
            let var = (q / nf - m * m).max(0.0) * nf / (nf - 1.0).max(1.0);
            (var / nf).sqrt()
        })
        .collect();
    (mean, se)
}

fn report_from(mean: &[f64], se: &[f64], l: usize, n_samples: usize) -> OracleReport {
    let a = l + 1;
    let cplx = |v: &[f64], off: usize, r: usize, c: usize| {
        CMatrix::from_fn(r, c, |i, j| Complex64::new(v[off + i + j * r], v[off + r * c + i + j * r]))
    };
    let cplx_se =
        |v: &[f64], off: usize, r: usize, c: usize| DMatrix::from_fn(r, c, |i, j| v[off + i + j * r].hypot(v[off + r * c + i + j * r]));
    let real = |v: &[f64], off: usize| DMatrix::from_fn(l, l, |i, j| v[off + i + j * l]);
    let p_off = 2 * a * a;
    let x_off = p_off + l * l;
    OracleReport {
        j_aa: cplx(mean, 0, a, a),
        j_aa_se: cplx_se(se, 0, a, a),
        j_pp: real(mean, p_off),
        j_pp_se: real(se, p_off),
        j_ap: cplx(mean, x_off, a, l),
        j_ap_se: cplx_se(se, x_off, a, l),
        n_samples,
    }
}

/// Bayesian FIM likelihood part: angles drawn from the prior, gain moments
/// substituted analytically.
pub fn mc_bayes_fim(
    pattern: &ReflectionPattern,
    config: &SystemConfig,
    prior: &PriorSpec,
    n_angle_draws: usize,
    seed: u64,
) -> Result<OracleReport> {
    pattern.validate(config)?;
    prior.validate()?;
    if n_angle_draws < 2 {
        return Err(CrbError::InvalidConfig("at least two draws are needed for a standard error".into()));
    }
    let l = config.l;
    let wh = pattern.matrix().adjoint();
    let (mean, se) = chunked_average(n_angle_draws, feature_len(l), seed, |rng, out| {
        let psi = sample_angles(rng, prior, l);
        conditional_features(&wh, &psi, GainMoments::Analytic(prior.sigma_sq), config, out);
    });
    Ok(report_from(&mean, &se, l, n_angle_draws))
}

/// Bayesian-moment conditional FIM at fixed angles; a single "draw" of
/// [`mc_bayes_fim`].
pub fn conditional_fim(pattern: &ReflectionPattern, psi: &[f64], config: &SystemConfig, prior: &PriorSpec) -> Result<OracleReport> {
    pattern.validate(config)?;
    let l = psi.len();
    let mut out = vec![0.0; feature_len(l)];
    conditional_features(
        &pattern.matrix().adjoint(),
        psi,
        GainMoments::Analytic(prior.sigma_sq),
        config,
        &mut out,
    );
    Ok(report_from(&out, &vec![0.0; out.len()], l, 1))
}

/// Hybrid FIM likelihood part: angles fixed, gains drawn from the prior.
pub fn mc_hybrid_fim(
    pattern: &ReflectionPattern,
    psi: &[f64],
    config: &SystemConfig,
    prior: &PriorSpec,
    n_gain_draws: usize,
    seed: u64,
) -> Result<OracleReport> {
    pattern.validate(config)?;
    prior.validate()?;
    if n_gain_draws < 2 {
        return Err(CrbError::InvalidConfig("at least two draws are needed for a standard error".into()));
    }
    let l = psi.len();
    let wh = pattern.matrix().adjoint();
    let (mean, se) = chunked_average(n_gain_draws, feature_len(l), seed, |rng, out| {
        let mut alpha = Vec::with_capacity(l + 1);
        alpha.push(complex_normal(rng, prior.mu0, prior.sigma_sq));
        for _ in 0..l {
            alpha.push(complex_normal(rng, Complex64::new(0.0, 0.0), prior.sigma_sq));
        }
        conditional_features(&wh, psi, GainMoments::Sampled(&alpha), config, out);
    });
    Ok(report_from(&mean, &se, l, n_gain_draws))
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn generic_hermitian_eig(m: &CMatrix) -> Result<(DVector<f64>, CMatrix)> {
    if !m.is_square() {
        return Err(CrbError::DimensionMismatch {
            what: "square matrix columns",
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let skew = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
    if skew > 1e-10 {
        return Err(CrbError::NotHermitian(skew));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMatrix::zeros(m.nrows(), m.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_noise, sample_prior};
    use rand::Rng;

    fn setup() -> (SystemConfig, PriorSpec, ReflectionPattern) {
        let cfg = SystemConfig::new(4, 3, 2, 1.5, 0.8, 1.0).unwrap();
        let prior = PriorSpec::new(Complex64::new(0.5, -0.2), 1.2, 0.1, 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = CMatrix::from_fn(4, 3, |_, _| Complex64::from_polar(1.0, rng.random_range(-PI..PI)));
        (cfg, prior, ReflectionPattern::from_matrix("random", w, 1.0).unwrap())
    }

    #[test]
    fn scores_vanish_at_noiseless_truth() {
        let (cfg, prior, p) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = sample_prior(&prior, &cfg, &mut rng);
        let y = mean_signal(&p, &ch, &cfg);
        assert!(score_alpha(&y, &p, &ch, &cfg).norm() < 1e-13);
        assert!(score_psi(&y, &p, &ch, &cfg).norm() < 1e-12);
    }

    #[test]
    fn scores_match_finite_differences() {
        let (cfg, prior, p) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = sample_prior(&prior, &cfg, &mut rng);
        let y = mean_signal(&p, &ch, &cfg) + sample_noise(&mut rng, 3, cfg.sigma_n_sq);
        let sa = score_alpha(&y, &p, &ch, &cfg);
        let sp = score_psi(&y, &p, &ch, &cfg);
        let h = 1e-6;
        let ll = |c: &ChannelRealization| log_likelihood(&y, &p, c, &cfg);
        for j in 0..3 {
            for (dir, expect) in [
                (Complex64::new(1.0, 0.0), 2.0 * sa[j].re),
                (Complex64::new(0.0, 1.0), 2.0 * sa[j].im),
            ] {
                let mut a = ch.clone();
                let mut b = ch.clone();
                a.alpha[j] += dir * h;
                b.alpha[j] -= dir * h;
                let fd = (ll(&a) - ll(&b)) / (2.0 * h);
                assert!((fd - expect).abs() <= 1e-6 * expect.abs().max(1.0));
            }
        }
        for j in 0..2 {
            let mut a = ch.clone();
            let mut b = ch.clone();
            a.psi[j] += h;
            b.psi[j] -= h;
            let fd = (ll(&a) - ll(&b)) / (2.0 * h);
            assert!((fd - sp[j]).abs() <= 1e-6 * sp[j].abs().max(1.0));
        }
    }

    #[test]
    fn scores_have_zero_mean() {
        let (cfg, prior, p) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ch = sample_prior(&prior, &cfg, &mut rng);
        let m = mean_signal(&p, &ch, &cfg);
        let n = 100_000;
        let mut acc = vec![(0.0, 0.0); 8];
        for _ in 0..n {
            let y = &m + sample_noise(&mut rng, 3, cfg.sigma_n_sq);
            let sa = score_alpha(&y, &p, &ch, &cfg);
            let sp = score_psi(&y, &p, &ch, &cfg);
            let vals = [sa[0].re, sa[0].im, sa[1].re, sa[1].im, sa[2].re, sa[2].im, sp[0], sp[1]];
            for (a, v) in acc.iter_mut().zip(vals) {
                a.0 += v;
                a.1 += v * v;
            }
        }
        for (s, q) in acc {
            let mean = s / n as f64;
            let se = ((q / n as f64 - mean * mean) / n as f64).sqrt();
            assert!(mean.abs() <= 3.0 * se + 1e-12, "mean {mean} se {se}");
        }
    }

    #[test]
    fn narrow_support_matches_midpoint() {
        let (cfg, _, p) = setup();
        let prior = PriorSpec::new(Complex64::new(0.0, 0.0), 1.0, 0.3, 0.3 + 1e-6).unwrap();
        let mc = mc_bayes_fim(&p, &cfg, &prior, 2000, 5).unwrap();
        let mid = conditional_fim(&p, &[0.3 + 5e-7, 0.3 + 5e-7], &cfg, &prior).unwrap();
        assert!(relative_frobenius(&mc.j_aa, &mid.j_aa) < 1e-5);
        assert!((&mc.j_pp - &mid.j_pp).norm() <= 1e-5 * mid.j_pp.norm());
    }

    #[test]
    fn deterministic_and_worker_independent() {
        let (cfg, prior, p) = setup();
        let a = mc_bayes_fim(&p, &cfg, &prior, 5000, 11).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| mc_bayes_fim(&p, &cfg, &prior, 5000, 11).unwrap());
        assert_eq!(a.j_aa, b.j_aa);
        assert_eq!(a.j_pp, b.j_pp);
    }

    #[test]
    fn standard_error_shrinks_with_samples() {
        let (cfg, prior, p) = setup();
        let a = mc_hybrid_fim(&p, &[0.2, 0.5], &cfg, &prior, 20_000, 1).unwrap();
        let b = mc_hybrid_fim(&p, &[0.2, 0.5], &cfg, &prior, 80_000, 1).unwrap();
        let ratio = a.j_pp_se[(0, 0)] / b.j_pp_se[(0, 0)];
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
        assert!(a.j_pp_se.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn eig_examples() {
        let (v, _) = generic_hermitian_eig(&CMatrix::identity(4, 4)).unwrap();
        assert!(v.iter().all(|&x| (x - 1.0).abs() < 1e-14));
        let ic = CMatrix::from_element(3, 3, Complex64::new(1.0, 0.0)) - CMatrix::identity(3, 3);
        let (v, u) = generic_hermitian_eig(&ic).unwrap();
        for (x, e) in v.iter().zip([-1.0, -1.0, 2.0]) {
            assert!((x - e).abs() < 1e-12);
        }
        let d = CMatrix::from_diagonal(&v.map(Complex64::from));
        assert!((&u * d * u.adjoint() - &ic).norm() < 1e-12);
        // [[0, 1 1], [1, 0, 0], [1, 0, 0]]: eigenvalues -sqrt(2), 0, sqrt(2)
        let mut f1 = CMatrix::zeros(3, 3);
        for i in 1..3 {
            f1[(0, i)] = Complex64::new(1.0, 0.0);
            f1[(i, 0)] = Complex64::new(1.0, 0.0);
        }
        let (v, _) = generic_hermitian_eig(&f1).unwrap();
        let half_kappa = 8f64.sqrt() / 2.0;
        assert!((v[0] + half_kappa).abs() < 1e-12 && v[1].abs() < 1e-12 && (v[2] - half_kappa).abs() < 1e-12);
        let mut bad = CMatrix::identity(2, 2);
        bad[(0, 1)] = Complex64::new(0.0, 1.0);
        assert!(matches!(generic_hermitian_eig(&bad), Err(CrbError::NotHermitian(_))));
    }
}
