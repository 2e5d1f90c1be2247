//! Monte-Carlo hybrid CRBs for N = 32, K = 8, L = 3 over SNR, including the
//! PGM design, then the L sweep at 5 dB.
//!
//! cargo run --release --example hybrid_crb_sweep [trials]

use irs_crb::experiment::{hybrid_sweep, ExperimentConfig, PatternKind, SweepVar};

fn main() -> irs_crb::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let mut cfg = ExperimentConfig::hybrid_defaults();
    cfg.n_monte_carlo = trials;
    cfg.grid = vec![-10.0, 0.0, 5.0, 10.0, 20.0];
    let result = hybrid_sweep(&cfg)?;
    println!("normalized angle CRB, {trials} trials");
    for r in result.rows.iter().filter(|r| r.metric == "angle_crb") {
        println!("{:<16} {:>6.1} dB  {:.4e} +- {:.1e}", r.pattern, r.value, r.mean, r.std_error);
    }

    cfg.sweep = SweepVar::L;
    cfg.grid = vec![1.0, 2.0, 3.0, 4.0];
    cfg.patterns = vec![PatternKind::FirstK, PatternKind::EquiSpaced, PatternKind::Pgm];
    let result = hybrid_sweep(&cfg)?;
    println!("\nraw angle CRB versus L at 5 dB");
    for r in result.rows.iter().filter(|r| r.metric == "angle_crb_raw") {
        println!("{:<16} L={}  {:.4e} +- {:.1e}", r.pattern, r.value, r.mean, r.std_error);
    }
    Ok(())
}
