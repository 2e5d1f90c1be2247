//! Bayesian CRB versus SNR for the baseline patterns (N = 8, K = 4, L = 2),
//! closed form against the assembled FIM.
//!
//! cargo run --release --example bayes_crb_sweep

use irs_crb::bayes_crb::{bayes_crb_assembled, bayes_crb_trace, tau_kappa};
use irs_crb::{PriorSpec, ReflectionPattern, SystemConfig};
use num_complex::Complex64;

fn main() -> irs_crb::Result<()> {
    let prior = PriorSpec::least_informative(Complex64::new(1.0, 0.0), 1.0)?;
    println!(
        "{:>7} {:>12} {:>12} {:>12} {:>12}",
        "snr_db", "on-off", "first-k", "equi-spaced", "shifted"
    );
    for i in 0..=6 {
        let snr_db = -10.0 + 5.0 * i as f64;
        let cfg = SystemConfig::from_snr_db(8, 4, 2, snr_db, 1.0)?;
        let patterns = [
            ReflectionPattern::on_off(&cfg)?,
            ReflectionPattern::dft_first_k(&cfg)?,
            ReflectionPattern::dft_equispaced(&cfg)?,
            ReflectionPattern::dft_equispaced_phase_shifted(&cfg)?,
        ];
        let mut line = format!("{snr_db:>7.1}");
        for p in &patterns {
            line.push_str(&format!(" {:>12.5e}", bayes_crb_trace(p, &cfg, &prior)?));
        }
        println!("{line}");
    }

    let cfg = SystemConfig::new(8, 4, 2, 1.0, 1.0, 1.0)?;
    println!("\nunit powers:");
    for p in [
        ReflectionPattern::dft_equispaced(&cfg)?,
        ReflectionPattern::dft_equispaced_phase_shifted(&cfg)?,
    ] {
        let tk = tau_kappa(&p, &cfg, &prior)?;
        println!(
            "{:<12} tau {:.1} kappa {:.4} |w1| {:.2e}  closed {:.10}  assembled {:.10}",
            p.name(),
            tk.tau,
            tk.kappa,
            tk.w1_bar.norm(),
            bayes_crb_trace(&p, &cfg, &prior)?,
            bayes_crb_assembled(&p, &cfg, &prior)?
        );
    }
    Ok(())
}
