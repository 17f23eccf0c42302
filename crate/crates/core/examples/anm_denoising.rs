//! Denoises a noisy rank-2 matrix observed through random operators with the
//! atomic-norm solver and compares the error before and after.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ris_anm::anm::{regularizer, solve_anm, AnmProblem, SolverConfig};
use ris_anm::channel::{build_channel, ArrayGeometry, PathParams};
use ris_anm::linalg::{frobenius, min_eigenvalue, CMat};
use ris_anm::signal::complex_noise;

fn main() -> ris_anm::Result<()> {
    let (n_a, n_b) = (16, 12);
    let truth = PathParams::new(
        vec![-0.3, 0.25],
        vec![0.1, -0.45],
        vec![Complex64::new(1.0, 0.5), Complex64::new(-0.7, 0.2)],
    )?;
    let h = build_channel(&truth, ArrayGeometry::new(n_a)?, ArrayGeometry::new(n_b)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let left = complex_noise(&mut rng, 12, n_a, 1.0 / n_a as f64);
    let right = complex_noise(&mut rng, n_b, 10, 1.0 / n_b as f64);
    let sigma2 = 1e-3;
    let y = &left * &h * &right + complex_noise(&mut rng, 12, 10, sigma2);

    let sigma_eff = sigma2.sqrt() * ris_anm::linalg::spectral_norm(&left) * ris_anm::linalg::spectral_norm(&right);
    let reg = regularizer(sigma_eff, n_a, n_b, 0.3)?;
    let problem = AnmProblem::new(y.clone(), left.clone(), right.clone(), reg)?;
    let sol = solve_anm(&problem, &SolverConfig::default())?;

    let ls = left.clone().pseudo_inverse(1e-12).map_err(|e| ris_anm::Error::Domain(e.into()))?
        * &y
        * right.clone().pseudo_inverse(1e-12).map_err(|e| ris_anm::Error::Domain(e.into()))?;
    let rel = |m: &CMat| frobenius(&(m - &h)) / frobenius(&h);
    println!("regularization weight {reg:.3e}");
    println!("least-squares back-projection error {:.3e}", rel(&ls));
    println!("atomic-norm estimate error          {:.3e}", rel(&sol.h_hat));
    let d = &sol.diagnostics;
    println!(
        "solver: {} iterations, converged {}, objective {:.4e}, block min eigenvalue {:.2e}",
        d.iterations,
        d.converged,
        d.objective,
        min_eigenvalue(&sol.block_matrix())
    );
    Ok(())
}
