use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irs_crb::experiment::{
    bayes_sweep, density_csv, density_curves, design, emit, hybrid_sweep, table1, ExperimentConfig, CONFIG_KEYS, TABLE1_GRID_POINTS,
    TABLE1_TOLERANCE_DB, THREADS_ENV,
};

/// Cramer-Rao bounds and reflection-pattern design for IRS-assisted
/// channel estimation.
///
/// Settings are resolved as: subcommand defaults, then `--config` file, then
/// flags. Worker count comes from the IRS_CRB_THREADS environment variable.
#[derive(Parser)]
#[command(name = "irs-crb", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fisher information density over the angle grid; CSV `pattern,psi,density_db`
    /// followed by `max`, `min`, `mean` summary rows per pattern.
    Density(Common),
    /// Bayesian CRB trace per pattern; CSV `pattern,sweep,value,metric,mean,std_error`.
    BayesSweep(Common),
    /// Monte-Carlo averaged hybrid CRBs; same CSV schema as bayes-sweep with metrics
    /// angle_crb, angle_crb_raw, gain_crb, direct_gain_crb, reflected_gain_crb.
    HybridSweep(Common),
    /// Runs PGM; writes the pattern CSV to --out and the trace to <stem>_trace.csv.
    Design(Common),
    /// Prints the density table for N = 8, K = 4 and exits nonzero if any cell is
    /// more than 0.05 dB from the reference.
    Table1 {
        #[arg(long, default_value_t = TABLE1_GRID_POINTS)]
        grid_points: usize,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Flat `key = value` file; see --help of any subcommand for the keys.
    #[arg(long, long_help = format!("Flat `key = value` config file. Keys: {}", CONFIG_KEYS.join(", ")))]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sigma_sq: Option<f64>,
    /// Real part of the direct-path gain mean.
    #[arg(long, allow_negative_numbers = true)]
    mu0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    delta1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    delta2: Option<f64>,
    /// Monte-Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated: on-off, first-k, equi-spaced, shifted, pgm, or a pattern .csv.
    #[arg(long)]
    pattern: Option<String>,
    /// Output file; stdout when omitted (design defaults to pgm_pattern.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// snr, k, l or none.
    #[arg(long)]
    sweep: Option<String>,
    /// `a,b,c` or `start:stop:step`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// PGM step size.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// PGM look-angle count (defaults to N).
    #[arg(long)]
    look_angles: Option<usize>,
    /// PGM initial pattern.
    #[arg(long)]
    init: Option<String>,
}

impl Common {
    fn resolve(&self, mut cfg: ExperimentConfig) -> irs_crb::Result<ExperimentConfig> {
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let mut set = |key: &str, v: Option<String>| -> irs_crb::Result<()> {
            if let Some(v) = v {
                cfg.apply(key, &v)?;
            }
            Ok(())
        };
        let s = |x: Option<f64>| x.map(|v| v.to_string());
        let u = |x: Option<usize>| x.map(|v| v.to_string());
        set("n", u(self.n))?;
        set("k", u(self.k))?;
        set("l", u(self.l))?;
        set("beta", s(self.beta))?;
        set("snr_db", s(self.snr_db))?;
        set("sigma_sq", s(self.sigma_sq))?;
        set("mu0_re", s(self.mu0))?;
        set("delta1", s(self.delta1))?;
        set("delta2", s(self.delta2))?;
        set("trials", u(self.trials))?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        set("patterns", self.pattern.clone())?;
        set("out", self.out.as_ref().map(|p| p.display().to_string()))?;
        set("sweep", self.sweep.clone())?;
        set("grid", self.grid.clone())?;
        set("grid_points", u(self.grid_points))?;
        set("epsilon", s(self.epsilon))?;
        set("delta", s(self.delta))?;
        set("max_iter", u(self.max_iter))?;
        set("look_angles", u(self.look_angles))?;
        set("init", self.init.clone())?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> irs_crb::Result<ExitCode> {
    match cli.command {
        Command::Density(c) => {
            let cfg = c.resolve(ExperimentConfig::density_defaults())?;
            let curves = density_curves(&cfg)?;
            for cv in &curves {
                eprintln!(
                    "{}: max {:.2} dB, min {:.2} dB, mean {:.2} dB",
                    cv.pattern, cv.stats.max_db, cv.stats.min_db, cv.stats.mean_db
                );
            }
            emit(&density_csv(&cfg, &curves)?, cfg.out.as_deref())?;
        }
        Command::BayesSweep(c) => {
            let cfg = c.resolve(ExperimentConfig::bayes_defaults())?;
            emit(&bayes_sweep(&cfg)?.to_csv_string()?, cfg.out.as_deref())?;
        }
        Command::HybridSweep(c) => {
            let cfg = c.resolve(ExperimentConfig::hybrid_defaults())?;
            emit(&hybrid_sweep(&cfg)?.to_csv_string()?, cfg.out.as_deref())?;
        }
        Command::Design(c) => {
            let cfg = c.resolve(ExperimentConfig::design_defaults())?;
            let d = design(&cfg)?;
            println!(
                "initial objective {:e}\nfinal objective {:e}\niterations {}\nconverged {}\npattern {}\ntrace {}",
                d.trace.initial_objective,
                d.trace.final_objective,
                d.trace.iterations,
                d.trace.converged,
                d.pattern_path.display(),
                d.trace_path.display()
            );
        }
        Command::Table1 { grid_points } => {
            let report = table1(grid_points)?;
            print!("{}", report.render());
            if !report.within(TABLE1_TOLERANCE_DB) {
                eprintln!("table deviates from the reference by more than {TABLE1_TOLERANCE_DB} dB");
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("warning: could not size the worker pool: {e}");
                }
            }
            _ => eprintln!("warning: ignoring {THREADS_ENV}={v}"),
        }
    }
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
