//! Runs the full two-stage estimator on one noisy realization and prints
//! true against estimated angles, cascaded parameters and the SE achieved.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ris_anm::channel::{ChannelRealization, Geometry2D, LinkArrays, PathLossModel, PathSampler};
use ris_anm::pipeline::{estimate_stage1, estimate_stage2, spectral_efficiency, EstimatorConfig, LinkDesign, PhaseDesign};
use ris_anm::signal::{dbm_to_watts, receive_at_bs, receive_at_ris, NoiseModel, TrainingConfig, TrainingSpec};

fn main() -> ris_anm::Result<()> {
    let p_t_dbm = 15.0;
    let arrays = LinkArrays::paper_default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let real = ChannelRealization::sample(&mut rng, arrays, 2, 2, &PathSampler::default())?;
    let geometry = Geometry2D::paper_default();
    let (beta1, beta2) = PathLossModel::default().amplitude_factors(geometry.d1(), geometry.d2())?;
    let sigma2 = NoiseModel::default().sigma2();
    let p_t = dbm_to_watts(p_t_dbm);
    let train = TrainingConfig::generate(&TrainingSpec::table_setup(1)?, &arrays, p_t, 5)?;

    let obs1 = receive_at_ris(&real, &train, beta1, sigma2, &mut rng)?;
    let obs2 = receive_at_bs(&real, &train, beta2, sigma2, &mut rng)?;
    let est = EstimatorConfig::default();
    let s1 = estimate_stage1(&obs1, &train, sigma2, beta1, 2, &est)?;
    let s2 = estimate_stage2(&obs2, &s1, &train, sigma2, beta2, 2, &est)?;

    let show = |label: &str, truth: &[f64], hat: &[f64]| {
        let mut t: Vec<f64> = truth.iter().map(|a| a.sin()).collect();
        let mut h: Vec<f64> = hat.iter().map(|a| a.sin()).collect();
        t.sort_by(f64::total_cmp);
        h.sort_by(f64::total_cmp);
        println!("{label:<10} true sines {t:+.4?}  estimated {h:+.4?}");
    };
    show("theta_MR", &real.params_mr.aod, &s1.params_hat_mr().aod);
    show("phi_MR", &real.params_mr.aoa, &s1.params_hat_mr().aoa);
    show("theta_RB", &real.params_rb.aod, &s2.params_hat_rb().aod);
    show("phi_RB", &real.params_rb.aoa, &s2.params_hat_rb().aoa);
    println!(
        "stage 1: {} iterations, stage 2: {} iterations",
        s1.hop.anm.iterations, s2.hop.anm.iterations
    );
    println!("cascaded angle differences (rad): {:+.4?}", s2.cascaded.delta_vec);

    let design = LinkDesign::from_estimates(&s2.cascaded, &s2.h_hat_rb, &s1.h_hat_mr, &PhaseDesign::default())?;
    let perfect = design.with_channels(&real.h_rb, &real.h_mr)?;
    let se_est = spectral_efficiency(&real.h_rb, &real.h_mr, &design, p_t, sigma2, beta2)?;
    let se_perfect = spectral_efficiency(&real.h_rb, &real.h_mr, &perfect, p_t, sigma2, beta2)?;
    println!("SE at {p_t_dbm} dBm: estimated CSI {se_est:.3}, perfect CSI {se_perfect:.3} bits/s/Hz");
    Ok(())
}
