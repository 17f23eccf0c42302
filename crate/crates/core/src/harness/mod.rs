//! Monte Carlo experiment runner: configuration, per-trial metrics,
//! aggregation and output files.

pub mod config;
pub mod plot;
pub mod report;
pub mod seed;
pub mod stats;
pub mod trial;

use std::time::Instant;

use rayon::prelude::*;

pub use config::{ArraySizes, ExperimentConfig, Overrides, ResolvedSetup, SetupSelector};
pub use report::{emit_outputs, AggregateReport, CellSummary, CellTrials, MetricRow};
pub use stats::RunningStats;
pub use trial::{run_trial, TrialMetrics, METRIC_NAMES};

use crate::error::Result;

/// Runs every (setup, transmit power) cell of `cfg` without writing files.
/// Trials run in parallel; results are reduced in trial order, so the
/// report does not depend on the thread count.
pub fn run_cells(cfg: &ExperimentConfig) -> Result<AggregateReport> {
    let setups = cfg.validate()?;
    let baseline = match &cfg.baseline {
        Some(p) => report::read_baseline(p)?,
        None => Vec::new(),
    };
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    let mut trials = Vec::new();
    for (si, setup) in setups.iter().enumerate() {
        for &p_t in &cfg.p_t_sweep_dbm {
            let start = Instant::now();
            let setup_key = if cfg.pair_setups { None } else { Some(si) };
            let metrics = (0..cfg.n_trials)
                .into_par_iter()
                .map(|i| run_trial(cfg, setup, p_t, seed::trial_seed(cfg.seed, setup_key, p_t, i)))
                .collect::<Result<Vec<_>>>()?;
            let cell = CellTrials {
                setup: setup.label.clone(),
                p_t_dbm: p_t,
                trials: metrics,
            };
            let (summary, cell_rows) = report::summarize_cell(&cell, start.elapsed().as_secs_f64());
            rows.extend(cell_rows);
            cells.push(summary);
            trials.push(cell);
        }
    }
    Ok(AggregateReport {
        config: cfg.clone(),
        rows,
        cells,
        trials,
        baseline,
    })
}

/// Checks the output directory, runs the experiment and writes its files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AggregateReport> {
    cfg.validate()?;
    report::prepare_output_dir(&cfg.output_dir)?;
    let report = run_cells(cfg)?;
    emit_outputs(&report, &cfg.output_dir)?;
    Ok(report)
}
