//! Projected-gradient design of a 32 x 8 reflection pattern and its
//! objective trace.
//!
//! cargo run --release --example design_pattern

use irs_crb::bayes_crb::{density_stats, to_db};
use irs_crb::pgm::{design_pattern, PgmSettings};
use irs_crb::{PriorSpec, ReflectionPattern, SystemConfig};
use num_complex::Complex64;

fn main() -> irs_crb::Result<()> {
    let cfg = SystemConfig::new(32, 8, 3, 1.0, 1.0, 1.0)?;
    let prior = PriorSpec::least_informative(Complex64::new(1.0, 0.0), 1.0)?;
    let settings = PgmSettings::for_config(&cfg);
    for init in [ReflectionPattern::dft_equispaced(&cfg)?, ReflectionPattern::dft_first_k(&cfg)?] {
        let (designed, trace) = design_pattern(&cfg, &prior, &settings, &init)?;
        println!(
            "init {:<12} {} iterations (converged: {}), objective {:.4e} -> {:.4e}, best at {}",
            init.name(),
            trace.iterations,
            trace.converged,
            trace.initial_objective,
            trace.final_objective,
            trace.best_iteration
        );
        let before = density_stats(&init, 4096);
        let after = density_stats(&designed, 4096);
        println!(
            "  density min {:.2} -> {:.2} dB, max {:.2} -> {:.2} dB, modulus error {:.1e}",
            before.min_db,
            after.min_db,
            before.max_db,
            after.max_db,
            designed.max_modulus_error()
        );
        let head: Vec<String> = trace
            .objective_history
            .iter()
            .take(6)
            .map(|f| format!("{:.3}", to_db(*f)))
            .collect();
        println!("  first objectives (dB): {}", head.join(" "));
    }
    Ok(())
}
