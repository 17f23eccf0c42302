//! Recovers spatial frequencies from a Toeplitz covariance with root-MUSIC,
//! first exactly and then with a perturbed input.

use ris_anm::anm::toeplitz_average;
use ris_anm::channel::response_from_frequency;
use ris_anm::linalg::CMat;
use ris_anm::recovery::root_music;

fn main() -> ris_anm::Result<()> {
    let n = 16;
    let freqs = [0.12, 0.37, 0.81];
    let powers = [1.0, 0.6, 0.3];
    let mut t = CMat::zeros(n, n);
    for (&f, &p) in freqs.iter().zip(&powers) {
        let a = response_from_frequency(n, f);
        t += &a * a.adjoint() * num_complex::Complex64::new(p, 0.0);
    }
    let est = root_music(&t, 3)?;
    println!("true frequencies      {freqs:?}");
    println!("exact Toeplitz input  {:?}", est.freqs);

    let mut noisy = t.clone();
    for i in 0..n {
        noisy[(i, i)] += num_complex::Complex64::new(0.05, 0.0);
        noisy[((i + 1) % n, i)] += num_complex::Complex64::new(0.01, -0.02);
    }
    let est = root_music(&toeplitz_average(&noisy), 3)?;
    println!("perturbed input       {:?}", est.freqs);
    println!("as sines              {:?}", est.sines());
    Ok(())
}
