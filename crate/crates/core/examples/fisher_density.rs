//! Angle-resolved Fisher information density for each baseline pattern and
//! the integrated-information invariance across constant-modulus patterns.
//!
//! cargo run --release --example fisher_density

use std::f64::consts::PI;

use irs_crb::bayes_crb::{angle_grid, density_stats, fisher_density_pattern, integrated_density, to_db};
use irs_crb::{CMatrix, ReflectionPattern, SystemConfig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> irs_crb::Result<()> {
    let cfg = SystemConfig::new(8, 4, 2, 1.0, 1.0, 1.0)?;
    let patterns = [
        ReflectionPattern::on_off(&cfg)?,
        ReflectionPattern::dft_first_k(&cfg)?,
        ReflectionPattern::dft_equispaced(&cfg)?,
        ReflectionPattern::dft_equispaced_phase_shifted(&cfg)?,
    ];

    println!(
        "{:>7} {}",
        "psi",
        patterns.iter().map(|p| format!("{:>12}", p.name())).collect::<String>()
    );
    for psi in angle_grid(16) {
        let row: String = patterns
            .iter()
            .map(|p| format!("{:>12.2}", to_db(fisher_density_pattern(psi, p))))
            .collect();
        println!("{psi:>7.3} {row}");
    }

    let target = integrated_density(&cfg);
    println!("\nconstant-modulus average should be {target:.1} ({:.2} dB)", to_db(target));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..5 {
        let w = CMatrix::from_fn(8, 4, |_, _| Complex64::from_polar(1.0, rng.random_range(-PI..PI)));
        let p = ReflectionPattern::from_matrix(format!("random-{i}"), w, 1.0)?;
        let s = density_stats(&p, 2048);
        println!(
            "{:<10} mean {:.1} (rel. err {:.1e}), max {:.2} dB, min {:.2} dB",
            p.name(),
            s.mean_linear,
            (s.mean_linear - target).abs() / target,
            s.max_db,
            s.min_db
        );
    }
    Ok(())
}
