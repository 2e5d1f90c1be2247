//! Closed-form spectrum of the Bayesian gain FIM against a generic Hermitian
//! eigensolver, with and without the prior weight on the direct path.
//!
//! cargo run --release --example gain_fim_spectrum

use irs_crb::bayes_crb::{bayes_fim_blocks, eigenvalues_without_direct_prior, jaa_eigendecomposition};
use irs_crb::oracle::generic_hermitian_eig;
use irs_crb::{CMatrix, PriorSpec, ReflectionPattern, SystemConfig};
use num_complex::Complex64;

fn main() -> irs_crb::Result<()> {
    let cfg = SystemConfig::new(8, 4, 3, 1.0, 1.0, 1.0)?;
    let prior = PriorSpec::least_informative(Complex64::new(1.0, 0.0), 1.0)?;
    for p in [
        ReflectionPattern::dft_equispaced(&cfg)?,
        ReflectionPattern::dft_equispaced_phase_shifted(&cfg)?,
    ] {
        let spec = jaa_eigendecomposition(&p, &cfg, &prior)?;
        let j = bayes_fim_blocks(&p, &cfg, &prior)?.j_aa() / Complex64::from(cfg.snr());
        let (generic, _) = generic_hermitian_eig(&j)?;
        let mut closed: Vec<f64> = spec.eigenvalues.iter().copied().collect();
        closed.sort_by(f64::total_cmp);
        let mut dropped: Vec<f64> = eigenvalues_without_direct_prior(&p, &cfg, &prior)?.iter().copied().collect();
        dropped.sort_by(f64::total_cmp);
        println!("{}:", p.name());
        println!("  generic          {:?}", generic.as_slice());
        println!("  closed form      {closed:?}");
        println!("  no direct prior  {dropped:?}");
        let b = &spec.basis;
        let n = b.ncols();
        println!("  ||B^H B - I||_F = {:.2e}", (b.adjoint() * b - CMatrix::identity(n, n)).norm());
        println!("  reconstruction error = {:.2e}", (spec.reconstruct() - &j).norm() / j.norm());
    }
    Ok(())
}
