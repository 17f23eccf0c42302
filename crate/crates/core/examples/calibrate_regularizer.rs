//! Sweeps the regularization scale factor on a fixed set of trials and
//! reports the resulting angle MSE, to pick the factor for a deployment.
//!
//! Pass a trial count as the first argument (default 20).

use ris_anm::harness::{run_cells, ExperimentConfig, SetupSelector};

fn main() -> ris_anm::Result<()> {
    let n_trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    println!("{:>6} {:>14} {:>14} {:>10}", "scale", "mse_theta_mr", "mse_phi_rb", "capped");
    for scale in [0.1, 0.3, 1.0] {
        let mut cfg = ExperimentConfig {
            setups: vec![SetupSelector::Table(1)],
            n_trials,
            seed: 2,
            p_t_sweep_dbm: vec![10.0],
            ..ExperimentConfig::default()
        };
        cfg.estimator.reg_scale = scale;
        let report = run_cells(&cfg)?;
        let get = |m: &str| report.rows.iter().find(|r| r.metric == m).map_or(f64::NAN, |r| r.mean);
        println!(
            "{scale:>6} {:>14.3e} {:>14.3e} {:>10}",
            get("mse_theta_mr"),
            get("mse_phi_rb"),
            report.cells[0].solver_capped
        );
    }
    Ok(())
}
