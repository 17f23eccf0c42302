//! Compares RIS phase designs on a cascaded channel: random phases, the
//! closed-form alignment, refined alignment and quantized versions.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ris_anm::linalg::cis;
use ris_anm::pipeline::{design_phase_matrix_with, effective_gain, PhaseDesign};
use ris_anm::recovery::CascadedParams;

fn main() -> ris_anm::Result<()> {
    let n_r = 32;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cascaded = CascadedParams::new(
        &[0.31, -0.42],
        &[-0.05, 0.27],
        &[Complex64::new(1.2, 0.3), Complex64::new(-0.4, 0.5)],
        &[Complex64::new(0.8, -0.6), Complex64::new(0.3, 0.2)],
    )?;
    let random: Vec<Complex64> = (0..n_r).map(|_| cis(rng.random_range(0.0..std::f64::consts::TAU))).collect();
    println!("{:<28} {:>12}", "design", "||G||_F^2");
    println!("{:<28} {:>12.3}", "random phases", effective_gain(&cascaded, &random));
    for (label, opts) in [
        ("closed-form alignment", PhaseDesign::default()),
        ("aligned + 3 refine sweeps", PhaseDesign { refine_sweeps: 3, quantize_bits: None }),
        ("aligned, 2-bit phases", PhaseDesign { refine_sweeps: 0, quantize_bits: Some(2) }),
        ("aligned, 4-bit phases", PhaseDesign { refine_sweeps: 0, quantize_bits: Some(4) }),
    ] {
        let omega = design_phase_matrix_with(&cascaded, n_r, &opts)?;
        println!("{label:<28} {:>12.3}", effective_gain(&cascaded, omega.diagonal()));
    }
    Ok(())
}
