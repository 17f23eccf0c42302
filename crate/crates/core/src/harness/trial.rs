//! One Monte Carlo trial: synthesis, training, two-stage estimation, link
//! design and scoring against the ground truth.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ResolvedSetup};
use super::seed::splitmix64;
use crate::channel::{circular_distance, sine_from_frequency, ChannelRealization, PathParams};
use crate::error::Result;
use crate::pipeline::{
    estimate_stage1, estimate_stage2, spectral_efficiency, HopEstimate, LinkDesign,
};
use crate::recovery::{hungarian, CascadedParams};
use crate::signal::{dbm_to_watts, receive_at_bs, receive_at_ris, TrainingConfig};

/// Scores of one trial. Angle errors are in radians², sine errors in
/// squared sine units (the spatial-frequency scale), gain-product errors
/// normalized by the true gain-product energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub trial_seed: u64,
    /// The whole pipeline produced estimates.
    pub converged: bool,
    /// At least one ANM solve stopped at its iteration cap.
    pub solver_capped: bool,
    /// A stage saw an identically zero observation or a zero channel.
    pub degenerate: bool,
    /// A gain fit fell back to ridge regularization.
    pub ridge_fallback: bool,
    pub se_est: f64,
    pub se_perfect: f64,
    pub mse_theta_mr: f64,
    pub mse_phi_mr: f64,
    pub mse_theta_rb: f64,
    pub mse_phi_rb: f64,
    pub mse_delta: f64,
    pub mse_rho_prod: f64,
    pub sine_mse_theta_mr: f64,
    pub sine_mse_phi_mr: f64,
    pub sine_mse_theta_rb: f64,
    pub sine_mse_phi_rb: f64,
    pub sine_mse_delta: f64,
    /// Why the pipeline stopped, when it did.
    pub failure: Option<String>,
}

/// Names of the aggregated metrics, in report order.
pub const METRIC_NAMES: [&str; 13] = [
    "se_est",
    "se_perfect",
    "mse_theta_mr",
    "mse_phi_mr",
    "mse_theta_rb",
    "mse_phi_rb",
    "mse_delta",
    "mse_rho_prod",
    "sine_mse_theta_mr",
    "sine_mse_phi_mr",
    "sine_mse_theta_rb",
    "sine_mse_phi_rb",
    "sine_mse_delta",
];

impl TrialMetrics {
    fn failed(trial_seed: u64, reason: String) -> Self {
        Self {
            trial_seed,
            converged: false,
            solver_capped: false,
            degenerate: false,
            ridge_fallback: false,
            se_est: f64::NAN,
            se_perfect: f64::NAN,
            mse_theta_mr: f64::NAN,
            mse_phi_mr: f64::NAN,
            mse_theta_rb: f64::NAN,
            mse_phi_rb: f64::NAN,
            mse_delta: f64::NAN,
            mse_rho_prod: f64::NAN,
            sine_mse_theta_mr: f64::NAN,
            sine_mse_phi_mr: f64::NAN,
            sine_mse_theta_rb: f64::NAN,
            sine_mse_phi_rb: f64::NAN,
            sine_mse_delta: f64::NAN,
            failure: Some(reason),
        }
    }

    /// Values in the order of [`METRIC_NAMES`].
    pub fn values(&self) -> [f64; 13] {
        [
            self.se_est,
            self.se_perfect,
            self.mse_theta_mr,
            self.mse_phi_mr,
            self.mse_theta_rb,
            self.mse_phi_rb,
            self.mse_delta,
            self.mse_rho_prod,
            self.sine_mse_theta_mr,
            self.sine_mse_phi_mr,
            self.sine_mse_theta_rb,
            self.sine_mse_phi_rb,
            self.sine_mse_delta,
        ]
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        METRIC_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values()[i])
    }
}

/// Random streams of a trial, all derived from its seed.
struct TrialRngs {
    channel: ChaCha8Rng,
    noise: ChaCha8Rng,
    schedule_seed: u64,
}

impl TrialRngs {
    fn new(seed: u64) -> Self {
        let mut noise = ChaCha8Rng::seed_from_u64(seed);
        noise.set_stream(1);
        Self {
            channel: ChaCha8Rng::seed_from_u64(seed),
            noise,
            schedule_seed: splitmix64(seed ^ 0x5EED_5C4E_D01E_0001),
        }
    }
}

/// Runs one trial. Estimation failures are reported in the metrics, never
/// as an error; errors mean the configuration itself is inconsistent.
pub fn run_trial(
    cfg: &ExperimentConfig,
    setup: &ResolvedSetup,
    p_t_dbm: f64,
    trial_seed: u64,
) -> Result<TrialMetrics> {
    let arrays = cfg.link_arrays()?;
    let mut rngs = TrialRngs::new(trial_seed);
    let real = ChannelRealization::sample(
        &mut rngs.channel,
        arrays,
        cfg.n_paths_mr,
        cfg.n_paths_rb,
        &cfg.sampler,
    )?;
    let p_t = dbm_to_watts(p_t_dbm);
    let train1 = TrainingConfig::generate(&setup.stage1, &arrays, p_t, rngs.schedule_seed)?;
    let train2 = if setup.stage2 == setup.stage1 {
        train1.clone()
    } else {
        TrainingConfig::generate(&setup.stage2, &arrays, p_t, splitmix64(rngs.schedule_seed))?
    };
    let (beta1, beta2) = cfg
        .path_loss
        .amplitude_factors(cfg.geometry.d1(), cfg.geometry.d2())?;
    let sigma2_link = cfg.noise.sigma2();
    let sigma2 = if cfg.noiseless { 0.0 } else { sigma2_link };

    let obs1 = receive_at_ris(&real, &train1, beta1, sigma2, &mut rngs.noise)?;
    let obs2 = receive_at_bs(&real, &train2, beta2, sigma2, &mut rngs.noise)?;
    let stage1 = match estimate_stage1(&obs1, &train1, sigma2, beta1, cfg.n_paths_mr, &cfg.estimator) {
        Ok(s) => s,
        Err(e) => return Ok(TrialMetrics::failed(trial_seed, format!("stage 1: {e}"))),
    };
    let stage2 = match estimate_stage2(
        &obs2,
        &stage1,
        &train2,
        sigma2,
        beta2,
        cfg.n_paths_rb,
        &cfg.estimator,
    ) {
        Ok(s) => s,
        Err(e) => return Ok(TrialMetrics::failed(trial_seed, format!("stage 2: {e}"))),
    };
    let design = match LinkDesign::from_estimates(
        &stage2.cascaded,
        &stage2.h_hat_rb,
        &stage1.h_hat_mr,
        &cfg.phase_design,
    ) {
        Ok(d) => d,
        Err(e) => return Ok(TrialMetrics::failed(trial_seed, format!("design: {e}"))),
    };
    let perfect = design.with_channels(&real.h_rb, &real.h_mr)?;
    let se_est = spectral_efficiency(&real.h_rb, &real.h_mr, &design, p_t, sigma2_link, beta2)?;
    let se_perfect =
        spectral_efficiency(&real.h_rb, &real.h_mr, &perfect, p_t, sigma2_link, beta2)?;

    let perm_mr = match_paths(&stage1.hop, &real.params_mr);
    let perm_rb = match_paths(&stage2.hop, &real.params_rb);
    let mr = hop_errors(&stage1.hop, &real.params_mr, &perm_mr);
    let rb = hop_errors(&stage2.hop, &real.params_rb, &perm_rb);
    let (mse_delta, sine_mse_delta, mse_rho_prod) =
        cascaded_errors(&stage2.cascaded, &real, &perm_mr, &perm_rb)?;

    Ok(TrialMetrics {
        trial_seed,
        converged: true,
        solver_capped: !(stage1.hop.anm.converged && stage2.hop.anm.converged),
        degenerate: stage1.hop.degenerate || stage2.hop.degenerate,
        ridge_fallback: stage1.hop.gains.ridge_fallback || stage2.hop.gains.ridge_fallback,
        se_est,
        se_perfect,
        mse_theta_mr: mr.aod_rad,
        mse_phi_mr: mr.aoa_rad,
        mse_theta_rb: rb.aod_rad,
        mse_phi_rb: rb.aoa_rad,
        mse_delta,
        mse_rho_prod,
        sine_mse_theta_mr: mr.aod_sine,
        sine_mse_phi_mr: mr.aoa_sine,
        sine_mse_theta_rb: rb.aod_sine,
        sine_mse_phi_rb: rb.aoa_sine,
        sine_mse_delta,
        failure: None,
    })
}

/// Circular distance between sines on the period-2 circle.
fn sine_distance(a: f64, b: f64) -> f64 {
    circular_distance(a, b, 2.0)
}

/// `perm[l]` is the estimated path matched to true path `l`, minimizing the
/// summed sine distances of both angles.
pub fn match_paths(est: &HopEstimate, truth: &PathParams) -> Vec<usize> {
    let est_aod: Vec<f64> = est.aod_freqs.iter().map(|&f| sine_from_frequency(f)).collect();
    let est_aoa: Vec<f64> = est.aoa_freqs.iter().map(|&f| sine_from_frequency(f)).collect();
    let (t_aod, t_aoa) = (truth.aod_sines(), truth.aoa_sines());
    let cost = DMatrix::from_fn(t_aod.len(), est_aod.len(), |l, j| {
        sine_distance(est_aod[j], t_aod[l]) + sine_distance(est_aoa[j], t_aoa[l])
    });
    hungarian(&cost)
}

struct HopErrors {
    aod_rad: f64,
    aoa_rad: f64,
    aod_sine: f64,
    aoa_sine: f64,
}

fn hop_errors(est: &HopEstimate, truth: &PathParams, perm: &[usize]) -> HopErrors {
    let n = truth.n_paths() as f64;
    let mut e = HopErrors {
        aod_rad: 0.0,
        aoa_rad: 0.0,
        aod_sine: 0.0,
        aoa_sine: 0.0,
    };
    for (l, &j) in perm.iter().enumerate() {
        e.aod_rad += (est.params.aod[j] - truth.aod[l]).powi(2) / n;
        e.aoa_rad += (est.params.aoa[j] - truth.aoa[l]).powi(2) / n;
        e.aod_sine += sine_distance(sine_from_frequency(est.aod_freqs[j]), truth.aod[l].sin()).powi(2) / n;
        e.aoa_sine += sine_distance(sine_from_frequency(est.aoa_freqs[j]), truth.aoa[l].sin()).powi(2) / n;
    }
    e
}

/// Angle-difference errors (radians², sine²) and the normalized
/// gain-product error, with cascaded indices matched through both hops.
fn cascaded_errors(
    est: &CascadedParams,
    real: &ChannelRealization,
    perm_mr: &[usize],
    perm_rb: &[usize],
) -> Result<(f64, f64, f64)> {
    let truth = CascadedParams::new(
        &real.params_mr.aoa,
        &real.params_rb.aod,
        &real.params_mr.gains,
        &real.params_rb.gains,
    )?;
    let (l_mr, l_rb) = truth.delta.shape();
    let (mut rad, mut sine, mut num, mut den) = (0.0, 0.0, 0.0, 0.0);
    for (p, &pe) in perm_rb.iter().enumerate().take(l_rb) {
        for (l, &le) in perm_mr.iter().enumerate().take(l_mr) {
            let d_est = est.delta[(le, pe)];
            let d_true = truth.delta[(l, p)];
            rad += (d_est - d_true).powi(2);
            sine += sine_distance(d_est.sin(), d_true.sin()).powi(2);
            let r_est: Complex64 = est.rho_prod[le + pe * l_mr];
            let r_true = truth.rho_prod[l + p * l_mr];
            num += (r_est - r_true).norm_sqr();
            den += r_true.norm_sqr();
        }
    }
    let n = (l_mr * l_rb) as f64;
    Ok((rad / n, sine / n, num / den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::SetupSelector;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            setups: vec![SetupSelector::Table(1)],
            p_t_sweep_dbm: vec![20.0],
            n_trials: 1,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn same_seed_same_metrics() {
        let cfg = small_config();
        let setup = cfg.validate().unwrap().remove(0);
        let a = run_trial(&cfg, &setup, 20.0, 42).unwrap();
        let b = run_trial(&cfg, &setup, 20.0, 42).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        assert!(a.converged);
        assert!(a.se_perfect >= a.se_est);
        for v in &a.values()[2..] {
            assert!(*v >= 0.0);
        }
    }
}
