//! Projected gradient design of a constant-modulus reflection pattern.
//!
//! The objective is the hybrid angle bound summed over a grid of look
//! angles `xi_l`,
//! `f(w) = sigma_n^2 / (2 rho sigma^2) sum_l 1 / (w^H (I_K (x) D_l) w)` with
//! `D_l = du(xi_l) du(xi_l)^H` and `w = vec(W)`. The Kronecker structure is
//! never materialised: `w^H (I_K (x) D_l) w = sum_k |du(xi_l)^H w_k|^2`.

use std::io::Write;

use log::{debug, info};
use num_complex::Complex64;

use crate::error::{CrbError, Result};
use crate::model::{ula_response_derivative, PriorSpec, SystemConfig};
use crate::patterns::{project_constant_modulus_in_place, ReflectionPattern};
use crate::CVector;

pub const DEFAULT_EPSILON: f64 = 1e-10;
pub const DEFAULT_DELTA: f64 = 1.0;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// `xi_l = delta1 + (delta2 - delta1) (l - 1) / L_T`, `l = 1..L_T`.
pub fn targeted_look_angles(l_t: usize, delta1: f64, delta2: f64) -> Vec<f64> {
    (0..l_t).map(|i| delta1 + (delta2 - delta1) * i as f64 / l_t as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgmSettings {
    /// Stop once `||w_i - w_{i-1}||^2 / ||w_{i-1}||^2 <= epsilon`.
    pub epsilon: f64,
    /// Per-component step length.
    pub delta: f64,
    pub max_iter: usize,
    pub look_angles: Vec<f64>,
}

impl PgmSettings {
    /// `epsilon = 1e-10`, `delta = 1`, `L_T = N` look angles over `[-1, 1)`.
    pub fn for_config(config: &SystemConfig) -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            delta: DEFAULT_DELTA,
            max_iter: DEFAULT_MAX_ITER,
            look_angles: targeted_look_angles(config.n, -1.0, 1.0),
        }
    }

    pub fn validate(&self, prior: &PriorSpec) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(CrbError::InvalidConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(CrbError::InvalidConfig(format!("step size must be positive, got {}", self.delta)));
        }
        if self.max_iter == 0 {
            return Err(CrbError::InvalidConfig("max_iter must be >= 1".into()));
        }
        if self.look_angles.is_empty() {
            return Err(CrbError::InvalidConfig("at least one look angle is required".into()));
        }
        if let Some(bad) = self.look_angles.iter().find(|x| !(prior.delta1..=prior.delta2).contains(*x)) {
            return Err(CrbError::InvalidConfig(format!(
                "look angle {bad} outside [{}, {}]",
                prior.delta1, prior.delta2
            )));
        }
        Ok(())
    }
}

/// Objective and gradient evaluator for fixed look angles.
#[derive(Debug, Clone)]
pub struct PgmProblem {
    n: usize,
    k: usize,
    scale: f64,
    look_angles: Vec<f64>,
    derivs: Vec<CVector>,
}

impl PgmProblem {
    pub fn new(config: &SystemConfig, prior: &PriorSpec, look_angles: &[f64]) -> Self {
        Self {
            n: config.n,
            k: config.k,
            scale: config.sigma_n_sq / (2.0 * config.rho * prior.sigma_sq),
            look_angles: look_angles.to_vec(),
            derivs: look_angles.iter().map(|&x| ula_response_derivative(x, config.n)).collect(),
        }
    }

    pub fn look_angles(&self) -> &[f64] {
        &self.look_angles
    }

    fn check_len(&self, w: &[Complex64]) -> Result<()> {
        if w.len() != self.n * self.k {
            return Err(CrbError::DimensionMismatch {
                what: "vec(W) length",
                expected: self.n * self.k,
                got: w.len(),
            });
        }
        Ok(())
    }

    /// `du_l^H w_k` for every block `k`.
    fn projections(&self, du: &CVector, w: &[Complex64]) -> Vec<Complex64> {
        w.chunks(self.n)
            .map(|col| du.iter().zip(col).map(|(d, x)| d.conj() * x).sum())
            .collect()
    }

    /// `w^H (I_K (x) D_l) w` for each look angle.
    pub fn quadratic_forms(&self, w: &[Complex64]) -> Result<Vec<f64>> {
        self.check_len(w)?;
        Ok(self
            .derivs
            .iter()
            .map(|du| self.projections(du, w).iter().map(|z| z.norm_sqr()).sum())
            .collect())
    }

    fn checked_forms(&self, w: &[Complex64]) -> Result<Vec<f64>> {
        let qs = self.quadratic_forms(w)?;
        if let Some((index, &value)) = qs.iter().enumerate().find(|(_, &q)| !(q > 0.0)) {
            return Err(CrbError::DegenerateObjective { index, value });
        }
        Ok(qs)
    }

    pub fn objective(&self, w: &[Complex64]) -> Result<f64> {
        let qs = self.checked_forms(w)?;
        Ok(self.scale * qs.iter().map(|q| 1.0 / q).sum::<f64>())
    }

    /// `df/dw^* = -scale sum_l (I_K (x) D_l) w / q_l^2`.
    pub fn wirtinger_gradient(&self, w: &[Complex64]) -> Result<Vec<Complex64>> {
        let qs = self.checked_forms(w)?;
        let mut grad = vec![Complex64::new(0.0, 0.0); w.len()];
        for (du, q) in self.derivs.iter().zip(&qs) {
            let c = -self.scale / (q * q);
            for (block, p) in grad.chunks_mut(self.n).zip(self.projections(du, w)) {
                let coef = p * c;
                for (g, d) in block.iter_mut().zip(du.iter()) {
                    *g += d * coef;
                }
            }
        }
        Ok(grad)
    }
}

pub fn pgm_objective(w: &[Complex64], look_angles: &[f64], config: &SystemConfig, prior: &PriorSpec) -> Result<f64> {
    PgmProblem::new(config, prior, look_angles).objective(w)
}

pub fn wirtinger_gradient(w: &[Complex64], look_angles: &[f64], config: &SystemConfig, prior: &PriorSpec) -> Result<Vec<Complex64>> {
    PgmProblem::new(config, prior, look_angles).wirtinger_gradient(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgmTrace {
    /// Gradient steps taken.
    pub iterations: usize,
    /// Objective of every iterate, starting with the initial pattern.
    pub objective_history: Vec<f64>,
    /// Running minimum of `objective_history`.
    pub best_history: Vec<f64>,
    pub initial_objective: f64,
    /// Objective of the returned (best-seen) pattern.
    pub final_objective: f64,
    pub best_iteration: usize,
    pub converged: bool,
    /// Largest `| |w_i| - sqrt(beta) |` over every iterate.
    pub worst_modulus_error: f64,
}

impl PgmTrace {
    /// CSV with columns `iteration,objective,best_objective`.
    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["iteration", "objective", "best_objective"])?;
        for (i, (f, b)) in self.objective_history.iter().zip(&self.best_history).enumerate() {
            wtr.write_record(&[i.to_string(), format!("{f:e}"), format!("{b:e}")])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Runs the projected gradient iteration from `init` and returns the
/// best-seen feasible iterate. The iteration is deterministic.
pub fn design_pattern(
    config: &SystemConfig,
    prior: &PriorSpec,
    settings: &PgmSettings,
    init: &ReflectionPattern,
) -> Result<(ReflectionPattern, PgmTrace)> {
    init.validate(config)?;
    init.require_constant_modulus()?;
    settings.validate(prior)?;
    let problem = PgmProblem::new(config, prior, &settings.look_angles);
    let beta = config.beta;

    let mut w = init.as_vec().to_vec();
    let mut f = problem.objective(&w)?;
    let mut best_w = w.clone();
    let mut best_f = f;
    let mut best_iteration = 0;
    let mut history = vec![f];
    let mut best_history = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    let mut worst_modulus_error = modulus_error(&w, beta);

    while iterations < settings.max_iter {
        let grad = problem.wirtinger_gradient(&w)?;
        let mut next: Vec<Complex64> = w
            .iter()
            .zip(&grad)
            .map(|(x, g)| {
                let mag = g.norm();
                if mag > 0.0 {
                    x - g * (settings.delta / mag)
                } else {
                    *x
                }
            })
            .collect();
        project_constant_modulus_in_place(&mut next, beta);
        iterations += 1;
        worst_modulus_error = worst_modulus_error.max(modulus_error(&next, beta));

        let moved: f64 = next.iter().zip(&w).map(|(a, b)| (a - b).norm_sqr()).sum();
        let size: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        w = next;
        f = problem.objective(&w)?;
        if f < best_f {
            best_f = f;
            best_w.clone_from(&w);
            best_iteration = iterations;
        }
        history.push(f);
        best_history.push(best_f);
        debug!("pgm iteration {iterations}: objective {f:e}, relative change {:e}", moved / size);
        if moved / size <= settings.epsilon {
            converged = true;
            break;
        }
    }
    if !converged {
        info!("pgm stopped at max_iter = {} without meeting epsilon", settings.max_iter);
    }
    let initial = history[0];
    let pattern = ReflectionPattern::from_vec("pgm", &best_w, config.n, config.k, beta)?;
    Ok((
        pattern,
        PgmTrace {
            iterations,
            objective_history: history,
            best_history,
            initial_objective: initial,
            final_objective: best_f,
            best_iteration,
            converged,
            worst_modulus_error,
        },
    ))
}

fn modulus_error(w: &[Complex64], beta: f64) -> f64 {
    let m = beta.sqrt();
    w.iter().map(|z| (z.norm() - m).abs()).fold(0.0, f64::max)
}
