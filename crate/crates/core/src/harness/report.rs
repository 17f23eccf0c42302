//! Aggregation of trial metrics and the files written for a run.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use super::config::ExperimentConfig;
use super::plot::{LineChart, Series};
use super::stats::RunningStats;
use super::trial::{TrialMetrics, METRIC_NAMES};
use crate::error::{Error, Result};

/// One line of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub setup: String,
    pub p_t_dbm: f64,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
}

/// Bookkeeping for one (setup, transmit power) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub setup: String,
    pub p_t_dbm: f64,
    pub n_trials: usize,
    /// Trials whose pipeline stopped with an estimation error.
    pub failed: usize,
    /// Trials in which an ANM solve hit its iteration cap.
    pub solver_capped: usize,
    pub degenerate: usize,
    pub ridge_fallback: usize,
    /// Wall-clock time of the cell; kept out of the CSV files so they stay
    /// reproducible byte for byte.
    pub wall_clock_secs: f64,
}

/// Trials of one cell in trial-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTrials {
    pub setup: String,
    pub p_t_dbm: f64,
    pub trials: Vec<TrialMetrics>,
}

/// A reference curve point from a user-supplied file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselinePoint {
    pub series: String,
    pub p_t_dbm: f64,
    pub metric: String,
    pub value: f64,
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub config: ExperimentConfig,
    pub rows: Vec<MetricRow>,
    pub cells: Vec<CellSummary>,
    pub trials: Vec<CellTrials>,
    pub baseline: Vec<BaselinePoint>,
}

/// Per-metric statistics over the converged trials, in the order of
/// [`METRIC_NAMES`].
pub fn aggregate_metrics(trials: &[TrialMetrics]) -> Vec<RunningStats> {
    let mut stats = vec![RunningStats::new(); METRIC_NAMES.len()];
    for t in trials.iter().filter(|t| t.converged) {
        for (s, v) in stats.iter_mut().zip(t.values()) {
            s.push(v);
        }
    }
    stats
}

/// Summary and metric rows of one cell.
pub fn summarize_cell(cell: &CellTrials, wall_clock_secs: f64) -> (CellSummary, Vec<MetricRow>) {
    let count = |f: &dyn Fn(&TrialMetrics) -> bool| cell.trials.iter().filter(|t| f(t)).count();
    let summary = CellSummary {
        setup: cell.setup.clone(),
        p_t_dbm: cell.p_t_dbm,
        n_trials: cell.trials.len(),
        failed: count(&|t| !t.converged),
        solver_capped: count(&|t| t.solver_capped),
        degenerate: count(&|t| t.degenerate),
        ridge_fallback: count(&|t| t.ridge_fallback),
        wall_clock_secs,
    };
    let rows = METRIC_NAMES
        .iter()
        .zip(aggregate_metrics(&cell.trials))
        .map(|(name, s)| MetricRow {
            setup: cell.setup.clone(),
            p_t_dbm: cell.p_t_dbm,
            metric: (*name).to_string(),
            mean: s.mean(),
            stderr: s.stderr(),
            n: s.count(),
        })
        .collect();
    (summary, rows)
}

fn csv_bytes<T: Serialize>(records: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

/// `metrics.csv` contents.
pub fn metrics_csv(rows: &[MetricRow]) -> Result<Vec<u8>> {
    if rows.is_empty() {
        return Ok(b"setup,p_t_dbm,metric,mean,stderr,n\n".to_vec());
    }
    csv_bytes(rows)
}

/// Parses a `metrics.csv` file.
pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Parses a baseline file (`series,p_t_dbm,metric,value`).
pub fn read_baseline(path: &Path) -> Result<Vec<BaselinePoint>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn trials_csv(cells: &[CellTrials]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "setup",
        "p_t_dbm",
        "trial",
        "trial_seed",
        "converged",
        "solver_capped",
        "degenerate",
        "ridge_fallback",
    ];
    header.extend(METRIC_NAMES);
    header.push("failure");
    w.write_record(&header)?;
    for cell in cells {
        for (i, t) in cell.trials.iter().enumerate() {
            let mut rec = vec![
                cell.setup.clone(),
                cell.p_t_dbm.to_string(),
                i.to_string(),
                t.trial_seed.to_string(),
                t.converged.to_string(),
                t.solver_capped.to_string(),
                t.degenerate.to_string(),
                t.ridge_fallback.to_string(),
            ];
            rec.extend(t.values().iter().map(|v| v.to_string()));
            rec.push(t.failure.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
    }
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

#[derive(Serialize)]
struct FailureRow<'a> {
    setup: &'a str,
    p_t_dbm: f64,
    n_trials: usize,
    failed: usize,
    solver_capped: usize,
    degenerate: usize,
    ridge_fallback: usize,
}

/// One chart written for every run.
struct PlotSpec {
    stem: &'static str,
    title: &'static str,
    y_label: &'static str,
    log_y: bool,
    /// Metric drawn solid for each setup.
    solid: &'static str,
    /// Optional companion metric drawn dashed for each setup.
    dashed: Option<&'static str>,
}

const fn mse_plot(stem: &'static str, title: &'static str, y_label: &'static str) -> PlotSpec {
    PlotSpec {
        stem,
        title,
        y_label,
        log_y: true,
        solid: stem,
        dashed: None,
    }
}

const PLOTS: [PlotSpec; 6] = [
    mse_plot("mse_theta_mr", "MSE of the MS-RIS AoD", "MSE [rad^2]"),
    mse_plot("mse_phi_rb", "MSE of the RIS-BS AoA", "MSE [rad^2]"),
    mse_plot("mse_delta", "MSE of the angle differences", "MSE [rad^2]"),
    mse_plot("mse_rho_prod", "NMSE of the gain products", "NMSE"),
    PlotSpec {
        stem: "se",
        title: "Average spectral efficiency",
        y_label: "SE [bits/s/Hz]",
        log_y: false,
        solid: "se_est",
        dashed: Some("se_perfect"),
    },
    mse_plot("mse_phi_mr", "MSE of the MS-RIS AoA", "MSE [rad^2]"),
];

/// Line charts of the report, one series per setup plus baselines.
pub fn charts(report: &AggregateReport) -> Vec<(String, LineChart)> {
    let mut setups: Vec<&str> = Vec::new();
    for r in &report.rows {
        if !setups.contains(&r.setup.as_str()) {
            setups.push(&r.setup);
        }
    }
    let series_for = |setup: &str, metric: &str, label: String, dashed: bool| Series {
        label,
        points: report
            .rows
            .iter()
            .filter(|r| r.setup == setup && r.metric == metric)
            .map(|r| (r.p_t_dbm, r.mean))
            .collect(),
        dashed,
    };
    PLOTS
        .iter()
        .map(|&PlotSpec { stem, title, y_label, log_y, solid, dashed }| {
            let mut series = Vec::new();
            for s in &setups {
                let label = match dashed {
                    Some(_) => format!("{s} (estimated CSI)"),
                    None => (*s).to_string(),
                };
                series.push(series_for(s, solid, label, false));
                if let Some(d) = dashed {
                    series.push(series_for(s, d, format!("{s} (perfect CSI)"), true));
                }
            }
            let mut names: Vec<&str> = Vec::new();
            for b in report.baseline.iter().filter(|b| b.metric == solid) {
                if !names.contains(&b.series.as_str()) {
                    names.push(&b.series);
                }
            }
            for name in names {
                series.push(Series {
                    label: format!("{name} (reference)"),
                    points: report
                        .baseline
                        .iter()
                        .filter(|b| b.series == name && b.metric == solid)
                        .map(|b| (b.p_t_dbm, b.value))
                        .collect(),
                    dashed: true,
                });
            }
            (
                stem.to_string(),
                LineChart {
                    title: title.into(),
                    x_label: "P_t [dBm]".into(),
                    y_label: y_label.into(),
                    log_y,
                    series,
                },
            )
        })
        .collect()
}

/// Creates the output directory and checks that files can be created in it.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    NamedTempFile::new_in(dir)?;
    Ok(())
}

/// Writes every file into temporaries first and renames them into place;
/// on failure nothing written by this call is left behind.
fn write_all_or_nothing(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<PathBuf>> {
    let mut staged = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let mut tmp = NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        staged.push((tmp, dir.join(name)));
    }
    let mut written: Vec<PathBuf> = Vec::new();
    for (tmp, target) in staged {
        if let Err(e) = tmp.persist(&target) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(Error::Io(e.error));
        }
        written.push(target);
    }
    Ok(written)
}

/// Writes `metrics.csv`, `failures.csv`, `trials.csv`, `config.json` and one
/// SVG per chart into `dir`, returning the paths written.
pub fn emit_outputs(report: &AggregateReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let failures: Vec<FailureRow> = report
        .cells
        .iter()
        .map(|c| FailureRow {
            setup: &c.setup,
            p_t_dbm: c.p_t_dbm,
            n_trials: c.n_trials,
            failed: c.failed,
            solver_capped: c.solver_capped,
            degenerate: c.degenerate,
            ridge_fallback: c.ridge_fallback,
        })
        .collect();
    let mut files = vec![
        ("metrics.csv".to_string(), metrics_csv(&report.rows)?),
        ("failures.csv".to_string(), csv_bytes(&failures)?),
        ("trials.csv".to_string(), trials_csv(&report.trials)?),
        ("config.json".to_string(), (report.config.to_json()? + "\n").into_bytes()),
    ];
    for (stem, chart) in charts(report) {
        files.push((format!("{stem}.svg"), chart.to_svg().into_bytes()));
    }
    write_all_or_nothing(dir, &files)
}
