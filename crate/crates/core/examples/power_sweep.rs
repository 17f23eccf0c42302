//! Small Monte Carlo power sweep over the three setups; prints the mean MSE
//! and SE per cell and writes CSV and SVG outputs to `out/power_sweep`.
//!
//! Pass a trial count as the first argument (default 20).

use ris_anm::harness::{run_experiment, ExperimentConfig};

fn main() -> ris_anm::Result<()> {
    let n_trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    let cfg = ExperimentConfig {
        n_trials,
        seed: 1,
        p_t_sweep_dbm: vec![0.0, 10.0, 20.0],
        output_dir: "out/power_sweep".into(),
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&cfg)?;
    println!("{:<8} {:>6} {:>14} {:>14} {:>8} {:>8}", "setup", "P_t", "mse_theta_mr", "mse_phi_rb", "se_est", "failed");
    for cell in &report.cells {
        let get = |m: &str| {
            report
                .rows
                .iter()
                .find(|r| r.setup == cell.setup && r.p_t_dbm == cell.p_t_dbm && r.metric == m)
                .map_or(f64::NAN, |r| r.mean)
        };
        println!(
            "{:<8} {:>6} {:>14.3e} {:>14.3e} {:>8.3} {:>8}",
            cell.setup,
            cell.p_t_dbm,
            get("mse_theta_mr"),
            get("mse_phi_rb"),
            get("se_est"),
            cell.failed
        );
    }
    println!("outputs in {}", cfg.output_dir.display());
    Ok(())
}
