//! Closed-form Bayesian and hybrid FIM blocks against Monte-Carlo oracles.
//!
//! cargo run --release --example oracle_checks

use irs_crb::bayes_crb::bayes_fim_blocks;
use irs_crb::hybrid_crb::hybrid_fim_blocks;
use irs_crb::oracle::{mc_bayes_fim, mc_hybrid_fim, relative_frobenius};
use irs_crb::{CMatrix, PriorSpec, ReflectionPattern, SystemConfig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn main() -> irs_crb::Result<()> {
    let cfg = SystemConfig::new(4, 3, 2, 1.0, 1.0, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = CMatrix::from_fn(4, 3, |_, _| Complex64::from_polar(1.0, rng.random_range(-PI..PI)));
    let pattern = ReflectionPattern::from_matrix("random", w, 1.0)?;

    for (d1, d2) in [(0.1, 0.7), (-1.0, 1.0)] {
        let prior = PriorSpec::new(Complex64::new(1.0, 0.0), 1.0, d1, d2)?;
        let closed = bayes_fim_blocks(&pattern, &cfg, &prior)?;
        let mc = mc_bayes_fim(&pattern, &cfg, &prior, 1_000_000, 42)?;
        let pp = (&mc.j_pp - &closed.j_pp_d).norm() / closed.j_pp_d.norm();
        println!(
            "bayes [{d1}, {d2}]: gain block rel. err {:.2e}, angle block rel. err {:.2e}",
            relative_frobenius(&mc.j_aa, &closed.j_aa_d),
            pp
        );
    }

    let prior = PriorSpec::least_informative(Complex64::new(1.0, 0.0), 1.0)?;
    let psi = [0.25, -0.6];
    let closed = hybrid_fim_blocks(&pattern, &psi, &cfg, &prior)?;
    let mc = mc_hybrid_fim(&pattern, &psi, &cfg, &prior, 100_000, 42)?;
    println!(
        "hybrid: gain block rel. err {:.2e}, angle diag rel. err {:.2e} / {:.2e}",
        relative_frobenius(&mc.j_aa, &closed.j_aa_d),
        (mc.j_pp[(0, 0)] - closed.j_pp_d[(0, 0)]).abs() / closed.j_pp_d[(0, 0)],
        (mc.j_pp[(1, 1)] - closed.j_pp_d[(1, 1)]).abs() / closed.j_pp_d[(1, 1)]
    );
    println!(
        "hybrid cross block: ||J_ap||_F = {:.3e}, ||SE||_F = {:.3e}; angle off-diagonal {:.3e} (SE {:.3e})",
        mc.cross_block_norm(),
        mc.cross_block_se_norm(),
        mc.j_pp[(0, 1)],
        mc.j_pp_se[(0, 1)]
    );
    Ok(())
}
