//! Sweeps, tables and pattern design behind the `irs-crb` binary.
//!
//! Every CSV starts with `#` lines recording the full configuration and the
//! seed. Sweep CSVs have columns
//! `pattern,sweep,value,metric,mean,std_error`.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};
use std::str::FromStr;

use log::info;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bayes_crb::{angle_grid, bayes_crb_trace, density_stats, fisher_density_pattern, to_db, DensityStats};
use crate::error::{CrbError, Result};
use crate::hybrid_crb::{hybrid_fim_blocks, hybrid_metrics, HybridMetrics};
use crate::model::{sample_angles, PriorSpec, SystemConfig};
use crate::patterns::ReflectionPattern;
use crate::pgm::{design_pattern, targeted_look_angles, PgmSettings, PgmTrace, DEFAULT_DELTA, DEFAULT_EPSILON, DEFAULT_MAX_ITER};

/// Environment variable holding the worker count for Monte-Carlo loops.
pub const THREADS_ENV: &str = "IRS_CRB_THREADS";

/// Reference cells `(max, min, mean)` in dB for N = 8, K = 4.
pub const TABLE1_REFERENCE: [(&str, [f64; 3]); 4] = [
    ("on-off", [24.4, 24.4, 24.4]),
    ("first-k", [43.2, 30.8, 40.4]),
    ("equi-spaced", [42.3, 37.0, 40.4]),
    ("shifted", [42.3, 37.0, 40.4]),
];

pub const TABLE1_TOLERANCE_DB: f64 = 0.05;
pub const TABLE1_GRID_POINTS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum PatternKind {
    OnOff,
    FirstK,
    EquiSpaced,
    Shifted,
    /// Designed by PGM from the configured initial pattern.
    Pgm,
    /// Loaded from a pattern CSV.
    File(PathBuf),
}

impl PatternKind {
    pub fn baselines() -> Vec<PatternKind> {
        vec![Self::OnOff, Self::FirstK, Self::EquiSpaced, Self::Shifted]
    }

    pub fn label(&self) -> String {
        match self {
            Self::OnOff => "on-off".into(),
            Self::FirstK => "first-k".into(),
            Self::EquiSpaced => "equi-spaced".into(),
            Self::Shifted => "shifted".into(),
            Self::Pgm => "pgm".into(),
            Self::File(p) => p.display().to_string(),
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for PatternKind {
    type Err = CrbError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "on-off" | "onoff" => Ok(Self::OnOff),
            "first-k" | "dft-first-k" => Ok(Self::FirstK),
            "equi-spaced" | "equispaced" | "dft-equispaced" => Ok(Self::EquiSpaced),
            "shifted" | "equi-spaced-shifted" | "phase-shifted" => Ok(Self::Shifted),
            "pgm" => Ok(Self::Pgm),
            other if other.ends_with(".csv") => Ok(Self::File(PathBuf::from(other))),
            other => Err(CrbError::Parse(format!(
                "unknown pattern `{other}` (expected on-off, first-k, equi-spaced, shifted, pgm or a .csv file)"
            ))),
        }
    }
}

pub fn parse_pattern_list(s: &str) -> Result<Vec<PatternKind>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(PatternKind::from_str).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Snr,
    K,
    L,
    None,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            Self::Snr => "snr_db",
            Self::K => "k",
            Self::L => "l",
            Self::None => "none",
        }
    }
}

impl FromStr for SweepVar {
    type Err = CrbError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "snr" | "snr_db" => Ok(Self::Snr),
            "k" => Ok(Self::K),
            "l" => Ok(Self::L),
            "none" => Ok(Self::None),
            other => Err(CrbError::Parse(format!("unknown sweep variable `{other}` (snr, k, l, none)"))),
        }
    }
}

/// Parses `a,b,c` or `start:stop:step` (inclusive of `stop`).
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|e| CrbError::Parse(format!("grid value `{t}`: {e}")))
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(CrbError::Parse(format!("range grid `{s}` must be start:stop:step")));
        }
        let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(h > 0.0) || b < a {
            return Err(CrbError::Parse(format!("range grid `{s}` needs step > 0 and stop >= start")));
        }
        let count = ((b - a) / h + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| a + i as f64 * h).collect())
    } else {
        s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgmOptions {
    pub epsilon: f64,
    pub delta: f64,
    pub max_iter: usize,
    /// Look-angle count `L_T`; `None` means `N`.
    pub look_angles: Option<usize>,
    pub init: PatternKind,
}

impl Default for PgmOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            delta: DEFAULT_DELTA,
            max_iter: DEFAULT_MAX_ITER,
            look_angles: None,
            init: PatternKind::Shifted,
        }
    }
}

impl PgmOptions {
    pub fn settings(&self, config: &SystemConfig, prior: &PriorSpec) -> PgmSettings {
        PgmSettings {
            epsilon: self.epsilon,
            delta: self.delta,
            max_iter: self.max_iter,
            look_angles: targeted_look_angles(self.look_angles.unwrap_or(config.n), prior.delta1, prior.delta2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub system: SystemConfig,
    pub prior: PriorSpec,
    pub patterns: Vec<PatternKind>,
    pub sweep: SweepVar,
    pub grid: Vec<f64>,
    pub n_monte_carlo: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub grid_points: usize,
    pub pgm: PgmOptions,
}

/// Keys accepted by [`ExperimentConfig::apply`] and in config files.
pub const CONFIG_KEYS: &[&str] = &[
    "scenario",
    "n",
    "k",
    "l",
    "snr_db",
    "beta",
    "sigma_n_sq",
    "mu0_re",
    "mu0_im",
    "sigma_sq",
    "delta1",
    "delta2",
    "patterns",
    "sweep",
    "grid",
    "trials",
    "seed",
    "out",
    "grid_points",
    "epsilon",
    "delta",
    "max_iter",
    "look_angles",
    "init",
];

impl ExperimentConfig {
    /// `N = 8, K = 4, L = 2`, unit powers, `mu0 = sigma^2 = 1`.
    pub fn bayes_defaults() -> Self {
        Self {
            scenario: "bayes-sweep".into(),
            system: SystemConfig::from_snr_db(8, 4, 2, 0.0, 1.0).expect("valid defaults"),
            prior: PriorSpec::least_informative(Complex64::new(1.0, 0.0), 1.0).expect("valid defaults"),
            patterns: PatternKind::baselines(),
            sweep: SweepVar::Snr,
            grid: (0..=15).map(|i| -10.0 + 2.0 * i as f64).collect(),
            n_monte_carlo: 1,
            seed: 0,
            out: None,
            grid_points: TABLE1_GRID_POINTS,
            pgm: PgmOptions::default(),
        }
    }

    /// `N = 32, K = 8, L = 3`, 5000 trials, SNR from -10 to 20 dB.
    pub fn hybrid_defaults() -> Self {
        let mut patterns = PatternKind::baselines();
        patterns.push(PatternKind::Pgm);
        Self {
            scenario: "hybrid-sweep".into(),
            system: SystemConfig::from_snr_db(32, 8, 3, 5.0, 1.0).expect("valid defaults"),
            n_monte_carlo: 5000,
            patterns,
            ..Self::bayes_defaults()
        }
    }

    pub fn density_defaults() -> Self {
        Self {
            scenario: "density".into(),
            sweep: SweepVar::None,
            grid: vec![],
            ..Self::bayes_defaults()
        }
    }

    pub fn design_defaults() -> Self {
        Self {
            scenario: "design".into(),
            patterns: vec![PatternKind::Pgm],
            sweep: SweepVar::None,
            grid: vec![],
            ..Self::hybrid_defaults()
        }
    }

    /// Applies one `key = value` setting.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let f = |v: &str| v.parse::<f64>().map_err(|e| CrbError::Parse(format!("{key} = `{v}`: {e}")));
        let u = |v: &str| v.parse::<usize>().map_err(|e| CrbError::Parse(format!("{key} = `{v}`: {e}")));
        match key.trim() {
            "scenario" => self.scenario = v.to_string(),
            "n" => self.system.n = u(v)?,
            "k" => self.system.k = u(v)?,
            "l" => self.system.l = u(v)?,
            "snr_db" => self.system = self.system.with_snr_db(f(v)?),
            "beta" => self.system.beta = f(v)?,
            "sigma_n_sq" => {
                let snr = self.system.snr();
                self.system.sigma_n_sq = f(v)?;
                self.system.rho = snr * self.system.sigma_n_sq;
            }
            "mu0_re" => self.prior.mu0.re = f(v)?,
            "mu0_im" => self.prior.mu0.im = f(v)?,
            "sigma_sq" => self.prior.sigma_sq = f(v)?,
            "delta1" => self.prior.delta1 = f(v)?,
            "delta2" => self.prior.delta2 = f(v)?,
            "patterns" | "pattern" => self.patterns = parse_pattern_list(v)?,
            "sweep" => self.sweep = v.parse()?,
            "grid" => self.grid = parse_grid(v)?,
            "trials" => self.n_monte_carlo = u(v)?,
            "seed" => self.seed = v.parse().map_err(|e| CrbError::Parse(format!("seed = `{v}`: {e}")))?,
            "out" => self.out = Some(PathBuf::from(v)),
            "grid_points" => self.grid_points = u(v)?,
            "epsilon" => self.pgm.epsilon = f(v)?,
            "delta" => self.pgm.delta = f(v)?,
            "max_iter" => self.pgm.max_iter = u(v)?,
            "look_angles" => self.pgm.look_angles = Some(u(v)?),
            "init" => self.pgm.init = v.parse()?,
            other => {
                return Err(CrbError::Parse(format!(
                    "unknown config key `{other}`; accepted keys: {}",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Reads a flat `key = value` file. `#` starts a comment.
    pub fn apply_file(&mut self, path: impl AsRef<FsPath>) -> Result<()> {
        let text = fs::read_to_string(path.as_ref())?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CrbError::Parse(format!("{}:{}: expected key = value", path.as_ref().display(), lineno + 1)))?;
            self.apply(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.prior.validate()?;
        if self.patterns.is_empty() {
            return Err(CrbError::InvalidConfig("pattern list is empty".into()));
        }
        if self.sweep != SweepVar::None && self.grid.is_empty() {
            return Err(CrbError::InvalidConfig("sweep grid is empty".into()));
        }
        if self.n_monte_carlo == 0 {
            return Err(CrbError::InvalidConfig("trials must be >= 1".into()));
        }
        if matches!(self.sweep, SweepVar::K | SweepVar::L) {
            if let Some(bad) = self.grid.iter().find(|g| !(**g >= 1.0 && g.fract() == 0.0)) {
                return Err(CrbError::InvalidConfig(format!(
                    "{} grid value {bad} is not a positive integer",
                    self.sweep.name()
                )));
            }
        }
        Ok(())
    }

    /// System configuration at one sweep point.
    pub fn system_at(&self, value: f64) -> SystemConfig {
        match self.sweep {
            SweepVar::Snr => self.system.with_snr_db(value),
            SweepVar::K => self.system.with_k(value as usize),
            SweepVar::L => self.system.with_l(value as usize),
            SweepVar::None => self.system,
        }
    }

    pub fn header_lines(&self, command: &str) -> Vec<String> {
        let s = &self.system;
        let p = &self.prior;
        let grid: Vec<String> = self.grid.iter().map(|g| format!("{g}")).collect();
        let patterns: Vec<String> = self.patterns.iter().map(PatternKind::label).collect();
        vec![
            format!("irs-crb {command}"),
            format!("scenario={}", self.scenario),
            format!(
                "n={} k={} l={} snr_db={} beta={} sigma_n_sq={}",
                s.n,
                s.k,
                s.l,
                s.snr_db(),
                s.beta,
                s.sigma_n_sq
            ),
            format!(
                "mu0={}{:+}i sigma_sq={} delta1={} delta2={}",
                p.mu0.re, p.mu0.im, p.sigma_sq, p.delta1, p.delta2
            ),
            format!("patterns={}", patterns.join(",")),
            format!("sweep={} grid={}", self.sweep.name(), grid.join(",")),
            format!("trials={} seed={} grid_points={}", self.n_monte_carlo, self.seed, self.grid_points),
            format!(
                "pgm epsilon={:e} delta={} max_iter={} look_angles={} init={}",
                self.pgm.epsilon,
                self.pgm.delta,
                self.pgm.max_iter,
                self.pgm.look_angles.map_or_else(|| "N".to_string(), |v| v.to_string()),
                self.pgm.init
            ),
            "angle normalization E{||psi||^2} = L/3; gain normalization E{||alpha||^2} = sigma^2 (L+1) + |mu0|^2".into(),
        ]
    }
}

/// Builds a pattern. PGM designs start from `options.init`.
pub fn build_pattern(kind: &PatternKind, config: &SystemConfig, prior: &PriorSpec, options: &PgmOptions) -> Result<ReflectionPattern> {
    Ok(build_pattern_traced(kind, config, prior, options)?.0)
}

pub fn build_pattern_traced(
    kind: &PatternKind,
    config: &SystemConfig,
    prior: &PriorSpec,
    options: &PgmOptions,
) -> Result<(ReflectionPattern, Option<PgmTrace>)> {
    let p = match kind {
        PatternKind::OnOff => ReflectionPattern::on_off(config)?,
        PatternKind::FirstK => ReflectionPattern::dft_first_k(config)?,
        PatternKind::EquiSpaced => ReflectionPattern::dft_equispaced(config)?,
        PatternKind::Shifted => ReflectionPattern::dft_equispaced_phase_shifted(config)?,
        PatternKind::File(path) => {
            let p = ReflectionPattern::read_csv(path)?;
            p.validate(config)?;
            p
        }
        PatternKind::Pgm => {
            if options.init == PatternKind::Pgm {
                return Err(CrbError::InvalidConfig("pgm cannot initialise from itself".into()));
            }
            let init = build_pattern(&options.init, config, prior, options)?;
            let settings = options.settings(config, prior);
            let (p, trace) = design_pattern(config, prior, &settings, &init)?;
            info!(
                "pgm N={} K={} from {}: {} iterations, objective {:e} -> {:e}",
                config.n, config.k, options.init, trace.iterations, trace.initial_objective, trace.final_objective
            );
            return Ok((p.with_name(format!("pgm({})", options.init)), Some(trace)));
        }
    };
    Ok((p, None))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub pattern: String,
    pub value: f64,
    pub metric: String,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub header: Vec<String>,
    pub sweep: SweepVar,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn write_csv_to<W: Write>(&self, mut out: W) -> Result<()> {
        for h in &self.header {
            writeln!(out, "# {h}")?;
        }
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["pattern", "sweep", "value", "metric", "mean", "std_error"])?;
        for r in &self.rows {
            wtr.write_record(&[
                r.pattern.clone(),
                self.sweep.name().to_string(),
                format!("{}", r.value),
                r.metric.clone(),
                format!("{:e}", r.mean),
                format!("{:e}", r.std_error),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv_to(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// First row matching `(pattern prefix, value, metric)`.
    pub fn find(&self, pattern: &str, value: f64, metric: &str) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.pattern.starts_with(pattern) && r.value == value && r.metric == metric)
    }
}

/// Writes to `path`, or stdout when `None`.
pub fn emit(text: &str, path: Option<&FsPath>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Bayesian CRB trace per pattern over the sweep grid.
pub fn bayes_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let grid = if cfg.sweep == SweepVar::None {
        vec![cfg.system.snr_db()]
    } else {
        cfg.grid.clone()
    };
    let mut rows = Vec::new();
    for kind in &cfg.patterns {
        let mut cache: Option<(usize, usize, ReflectionPattern)> = None;
        for &v in &grid {
            let system = cfg.system_at(v);
            system.validate()?;
            let pattern = match &cache {
                Some((n, k, p)) if *n == system.n && *k == system.k => p.clone(),
                _ => {
                    let p = build_pattern(kind, &system, &cfg.prior, &cfg.pgm)?;
                    cache = Some((system.n, system.k, p.clone()));
                    p
                }
            };
            let value = bayes_crb_trace(&pattern, &system, &cfg.prior)?;
            rows.push(SweepRow {
                pattern: pattern.name().to_string(),
                value: if cfg.sweep == SweepVar::None { system.snr_db() } else { v },
                metric: "bayes_crb".into(),
                mean: value,
                std_error: 0.0,
            });
        }
    }
    Ok(SweepResult {
        header: cfg.header_lines("bayes-sweep"),
        sweep: if cfg.sweep == SweepVar::None { SweepVar::Snr } else { cfg.sweep },
        rows,
    })
}

/// Metric names emitted by [`hybrid_sweep`], in order.
pub const HYBRID_METRICS: [&str; 5] = ["angle_crb", "angle_crb_raw", "gain_crb", "direct_gain_crb", "reflected_gain_crb"];

fn metric_values(m: &HybridMetrics) -> [f64; 5] {
    [
        m.angle_normalized,
        m.angle,
        m.gain_normalized,
        m.direct_gain_normalized,
        m.reflected_gain_normalized,
    ]
}

/// Angles of trial `t`: the first `l` uniform draws of stream `(seed, t)`.
/// Trials are nested in `l` and shared by all patterns.
pub fn trial_angles(seed: u64, trial: usize, prior: &PriorSpec, l: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    sample_angles(&mut rng, prior, l)
}

/// Monte-Carlo mean and standard error of the hybrid metrics for one
/// pattern at one system configuration.
pub fn hybrid_trials(
    pattern: &ReflectionPattern,
    system: &SystemConfig,
    prior: &PriorSpec,
    trials: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let per_trial: Vec<[f64; 5]> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let psi = trial_angles(seed, t, prior, system.l);
            let blocks = hybrid_fim_blocks(pattern, &psi, system, prior)?;
            Ok(metric_values(&hybrid_metrics(&blocks, prior)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = trials as f64;
    let mut out = Vec::with_capacity(5);
    for i in 0..5 {
        let mean = per_trial.iter().map(|v| v[i]).sum::<f64>() / n;
        let var = if trials > 1 {
            per_trial.iter().map(|v| (v[i] - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        out.push((mean, (var / n).sqrt()));
    }
    Ok(out)
}

/// Hybrid CRBs averaged over uniform angle draws. Patterns are built once
/// per `(N, K)` and reused across the remaining sweep points.
pub fn hybrid_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let grid = if cfg.sweep == SweepVar::None {
        vec![cfg.system.snr_db()]
    } else {
        cfg.grid.clone()
    };
    let sweep = if cfg.sweep == SweepVar::None { SweepVar::Snr } else { cfg.sweep };
    let mut rows = Vec::new();
    for kind in &cfg.patterns {
        let mut cache: Option<(usize, usize, ReflectionPattern)> = None;
        for &v in &grid {
            let system = if cfg.sweep == SweepVar::None {
                cfg.system
            } else {
                cfg.system_at(v)
            };
            system.validate()?;
            let pattern = match &cache {
                Some((n, k, p)) if *n == system.n && *k == system.k => p.clone(),
                _ => {
                    let p = build_pattern(kind, &system, &cfg.prior, &cfg.pgm)?;
                    cache = Some((system.n, system.k, p.clone()));
                    p
                }
            };
            let stats = hybrid_trials(&pattern, &system, &cfg.prior, cfg.n_monte_carlo, cfg.seed)?;
            for (metric, (mean, se)) in HYBRID_METRICS.iter().zip(stats) {
                rows.push(SweepRow {
                    pattern: pattern.name().to_string(),
                    value: v,
                    metric: metric.to_string(),
                    mean,
                    std_error: se,
                });
            }
        }
    }
    Ok(SweepResult {
        header: cfg.header_lines("hybrid-sweep"),
        sweep,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub pattern: String,
    pub psi: Vec<f64>,
    pub density_db: Vec<f64>,
    pub stats: DensityStats,
}

pub fn density_curves(cfg: &ExperimentConfig) -> Result<Vec<DensityCurve>> {
    cfg.validate()?;
    if cfg.grid_points == 0 {
        return Err(CrbError::InvalidConfig("grid_points must be >= 1".into()));
    }
    cfg.patterns
        .iter()
        .map(|kind| {
            let p = build_pattern(kind, &cfg.system, &cfg.prior, &cfg.pgm)?;
            let psi = angle_grid(cfg.grid_points);
            let density_db = psi.iter().map(|&x| to_db(fisher_density_pattern(x, &p))).collect();
            Ok(DensityCurve {
                pattern: p.name().to_string(),
                stats: density_stats(&p, cfg.grid_points),
                psi,
                density_db,
            })
        })
        .collect()
}

/// CSV with columns `pattern,psi,density_db`. Each pattern ends with three
/// summary rows whose `psi` field is `max`, `min` or `mean`.
pub fn density_csv(cfg: &ExperimentConfig, curves: &[DensityCurve]) -> Result<String> {
    let mut buf = Vec::new();
    for h in cfg.header_lines("density") {
        writeln!(buf, "# {h}")?;
    }
    {
        let mut wtr = csv::Writer::from_writer(&mut buf);
        wtr.write_record(["pattern", "psi", "density_db"])?;
        for c in curves {
            for (x, d) in c.psi.iter().zip(&c.density_db) {
                wtr.write_record(&[c.pattern.clone(), format!("{x}"), format!("{d:.6}")])?;
            }
            for (label, v) in [("max", c.stats.max_db), ("min", c.stats.min_db), ("mean", c.stats.mean_db)] {
                wtr.write_record(&[c.pattern.clone(), label.to_string(), format!("{v:.6}")])?;
            }
        }
        wtr.flush()?;
    }
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub pattern: &'static str,
    pub measured: [f64; 3],
    pub reference: [f64; 3],
}

impl Table1Row {
    pub fn max_deviation(&self) -> f64 {
        self.measured
            .iter()
            .zip(&self.reference)
            .map(|(m, r)| (m - r).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Report {
    pub rows: Vec<Table1Row>,
    pub grid_points: usize,
}

impl Table1Report {
    pub fn within(&self, tol_db: f64) -> bool {
        self.rows.iter().all(|r| r.max_deviation() <= tol_db)
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "Fisher information density, N = 8, K = 4, {} grid points (dB)\n{:<14}{:>9}{:>9}{:>9}   reference\n",
            self.grid_points, "pattern", "max", "min", "mean"
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:<14}{:>9.2}{:>9.2}{:>9.2}   {:.1} / {:.1} / {:.1}\n",
                r.pattern, r.measured[0], r.measured[1], r.measured[2], r.reference[0], r.reference[1], r.reference[2]
            ));
        }
        s
    }
}

pub fn table1(grid_points: usize) -> Result<Table1Report> {
    let cfg = SystemConfig::new(8, 4, 2, 1.0, 1.0, 1.0)?;
    let rows = TABLE1_REFERENCE
        .iter()
        .map(|(name, reference)| {
            let p = match *name {
                "on-off" => ReflectionPattern::on_off(&cfg)?,
                "first-k" => ReflectionPattern::dft_first_k(&cfg)?,
                "equi-spaced" => ReflectionPattern::dft_equispaced(&cfg)?,
                _ => ReflectionPattern::dft_equispaced_phase_shifted(&cfg)?,
            };
            let s = density_stats(&p, grid_points);
            Ok(Table1Row {
                pattern: name,
                measured: [s.max_db, s.min_db, s.mean_db],
                reference: *reference,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table1Report { rows, grid_points })
}

#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub pattern: ReflectionPattern,
    pub trace: PgmTrace,
    pub pattern_path: PathBuf,
    pub trace_path: PathBuf,
}

/// `<stem>_trace.csv` next to the pattern file.
pub fn trace_path_for(pattern_path: &FsPath) -> PathBuf {
    let stem = pattern_path
        .file_stem()
        .map_or_else(|| "pattern".into(), |s| s.to_string_lossy().into_owned());
    pattern_path.with_file_name(format!("{stem}_trace.csv"))
}

/// Runs PGM and writes the pattern CSV and its objective trace.
pub fn design(cfg: &ExperimentConfig) -> Result<DesignOutcome> {
    cfg.validate()?;
    let (pattern, trace) = build_pattern_traced(&PatternKind::Pgm, &cfg.system, &cfg.prior, &cfg.pgm)?;
    let trace = trace.expect("pgm returns a trace");
    let pattern_path = cfg.out.clone().unwrap_or_else(|| PathBuf::from("pgm_pattern.csv"));
    let trace_path = trace_path_for(&pattern_path);
    let mut pf = Vec::new();
    for h in cfg.header_lines("design") {
        writeln!(pf, "# {h}")?;
    }
    pattern.write_csv_to(&mut pf)?;
    fs::write(&pattern_path, pf)?;
    let mut tf = Vec::new();
    for h in cfg.header_lines("design") {
        writeln!(tf, "# {h}")?;
    }
    trace.write_csv_to(&mut tf)?;
    fs::write(&trace_path, tf)?;
    Ok(DesignOutcome {
        pattern,
        trace,
        pattern_path,
        trace_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("1,2, 4").unwrap(), vec![1.0, 2.0, 4.0]);
        assert_eq!(parse_grid("-10:20:10").unwrap(), vec![-10.0, 0.0, 10.0, 20.0]);
        assert_eq!(parse_grid("0:1:0.25").unwrap().len(), 5);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("x").is_err());
    }

    #[test]
    fn pattern_parsing() {
        assert_eq!(
            parse_pattern_list("on-off,pgm").unwrap(),
            vec![PatternKind::OnOff, PatternKind::Pgm]
        );
        assert_eq!("w.csv".parse::<PatternKind>().unwrap(), PatternKind::File("w.csv".into()));
        assert!("nope".parse::<PatternKind>().is_err());
    }

    #[test]
    fn config_file_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(
            &path,
            "# comment\nn = 16\nk=4 # trailing\nsweep = l\ngrid = 1:3:1\nsnr_db = 10\npatterns = first-k,shifted\n",
        )
        .unwrap();
        let mut cfg = ExperimentConfig::hybrid_defaults();
        cfg.apply_file(&path).unwrap();
        cfg.apply("trials", "10").unwrap();
        assert_eq!(cfg.system.n, 16);
        assert_eq!(cfg.system.k, 4);
        assert_eq!(cfg.sweep, SweepVar::L);
        assert_eq!(cfg.grid, vec![1.0, 2.0, 3.0]);
        assert!((cfg.system.snr_db() - 10.0).abs() < 1e-12);
        assert_eq!(cfg.n_monte_carlo, 10);
        assert!(cfg.apply("bogus", "1").is_err());
        fs::write(&path, "n 16\n").unwrap();
        assert!(cfg.apply_file(&path).is_err());
    }

    #[test]
    fn table_reproduces_reference() {
        let t = table1(TABLE1_GRID_POINTS).unwrap();
        assert!(t.within(TABLE1_TOLERANCE_DB), "{}", t.render());
    }

    #[test]
    fn bayes_sweep_rows() {
        let mut cfg = ExperimentConfig::bayes_defaults();
        cfg.grid = vec![-10.0, 0.0, 20.0];
        let r = bayes_sweep(&cfg).unwrap();
        assert_eq!(r.rows.len(), 4 * 3);
        for &v in &cfg.grid {
            let sh = r.find("shifted", v, "bayes_crb").unwrap().mean;
            let eq = r.find("equi-spaced", v, "bayes_crb").unwrap().mean;
            let fk = r.find("first-k", v, "bayes_crb").unwrap().mean;
            let oo = r.find("on-off", v, "bayes_crb").unwrap().mean;
            assert!(sh < eq && (eq - fk).abs() <= 1e-9 * eq && eq < oo);
        }
        let csv = r.to_csv_string().unwrap();
        assert!(csv.starts_with("# irs-crb bayes-sweep\n"));
        assert!(csv.contains("seed=0"));
    }

    #[test]
    fn hybrid_sweep_is_deterministic() {
        let mut cfg = ExperimentConfig::hybrid_defaults();
        cfg.system = SystemConfig::from_snr_db(8, 4, 2, 5.0, 1.0).unwrap();
        cfg.patterns = vec![PatternKind::EquiSpaced, PatternKind::Pgm];
        cfg.grid = vec![0.0, 10.0];
        cfg.n_monte_carlo = 50;
        let a = hybrid_sweep(&cfg).unwrap();
        let b = hybrid_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 2 * 2 * HYBRID_METRICS.len());
        assert!(a.rows.iter().all(|r| r.std_error >= 0.0 && r.mean.is_finite()));
    }

    #[test]
    fn nested_trial_angles() {
        let prior = PriorSpec::least_informative(Complex64::new(1.0, 0.0), 1.0).unwrap();
        let a = trial_angles(3, 7, &prior, 2);
        let b = trial_angles(3, 7, &prior, 4);
        assert_eq!(a[..], b[..2]);
        assert_ne!(trial_angles(3, 8, &prior, 2), a);
    }

    #[test]
    fn density_output() {
        let mut cfg = ExperimentConfig::density_defaults();
        cfg.grid_points = 64;
        cfg.patterns = vec![PatternKind::OnOff];
        let curves = density_curves(&cfg).unwrap();
        let csv = density_csv(&cfg, &curves).unwrap();
        let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 1 + 64 + 3);
        assert!(data.last().unwrap().starts_with("on-off,mean,24.41"));
    }

    #[test]
    fn trace_naming() {
        assert_eq!(trace_path_for(FsPath::new("/tmp/x/w.csv")), PathBuf::from("/tmp/x/w_trace.csv"));
    }
}
