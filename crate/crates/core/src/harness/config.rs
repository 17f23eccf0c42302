//! Experiment configuration: JSON schema, defaults, CLI overrides and
//! validation.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{hop_separation, Geometry2D, LinkArrays, PathLossModel, PathSampler};
use crate::error::{Error, Result};
use crate::pipeline::{EstimatorConfig, PhaseDesign};
use crate::signal::{NoiseModel, TrainingSpec};

/// A training setup: a row of the hybrid-RIS parameter table or explicit
/// schedules for the two stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetupSelector {
    Table(u8),
    Explicit(ExplicitSetup),
}

/// Explicit schedules; stage 2 reuses the stage-1 schedule when omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitSetup {
    pub label: String,
    pub stage1: TrainingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage2: Option<TrainingSpec>,
}

/// Schedules of one setup after resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSetup {
    pub label: String,
    /// Schedule whose active-element observations feed stage 1.
    pub stage1: TrainingSpec,
    /// Schedule whose BS observations feed stage 2.
    pub stage2: TrainingSpec,
}

impl SetupSelector {
    pub fn resolve(&self) -> Result<ResolvedSetup> {
        match self {
            Self::Table(n) => {
                let spec = TrainingSpec::table_setup(*n)?;
                Ok(ResolvedSetup {
                    label: format!("setup{n}"),
                    stage1: spec.clone(),
                    stage2: spec,
                })
            }
            Self::Explicit(e) => Ok(ResolvedSetup {
                label: e.label.clone(),
                stage1: e.stage1.clone(),
                stage2: e.stage2.clone().unwrap_or_else(|| e.stage1.clone()),
            }),
        }
    }
}

/// Element counts of the three arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySizes {
    pub n_bs: usize,
    pub n_ris: usize,
    pub n_ms: usize,
}

impl Default for ArraySizes {
    fn default() -> Self {
        Self {
            n_bs: 16,
            n_ris: 32,
            n_ms: 16,
        }
    }
}

/// Everything a Monte Carlo run depends on. Every field has a default, so
/// `{}` is a valid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub setups: Vec<SetupSelector>,
    pub geometry: Geometry2D,
    pub arrays: ArraySizes,
    pub n_paths_mr: usize,
    pub n_paths_rb: usize,
    pub sampler: PathSampler,
    pub path_loss: PathLossModel,
    pub noise: NoiseModel,
    /// Train without noise; the link SNR in the SE still uses `noise`.
    pub noiseless: bool,
    pub estimator: EstimatorConfig,
    pub phase_design: PhaseDesign,
    pub p_t_sweep_dbm: Vec<f64>,
    pub n_trials: usize,
    pub seed: u64,
    /// Use the same trial seeds for every setup (paired comparisons).
    pub pair_setups: bool,
    pub output_dir: PathBuf,
    /// Reference curves to overlay on the plots (CSV with columns
    /// `series,p_t_dbm,metric,value`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            setups: vec![
                SetupSelector::Table(1),
                SetupSelector::Table(2),
                SetupSelector::Table(3),
            ],
            geometry: Geometry2D::paper_default(),
            arrays: ArraySizes::default(),
            n_paths_mr: 2,
            n_paths_rb: 2,
            sampler: PathSampler::default(),
            path_loss: PathLossModel::default(),
            noise: NoiseModel::default(),
            noiseless: false,
            estimator: EstimatorConfig::default(),
            phase_design: PhaseDesign::default(),
            p_t_sweep_dbm: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            n_trials: 1000,
            seed: 0,
            pair_setups: false,
            output_dir: PathBuf::from("out"),
            baseline: None,
        }
    }
}

/// Command-line overrides applied on top of a configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub setup: Option<u8>,
    pub p_t_sweep_dbm: Option<Vec<f64>>,
    pub n_trials: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

/// Parses `start:step:stop` (inclusive) or a single value.
pub fn parse_sweep(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("invalid number {p:?} in sweep {text:?}")))
        })
        .collect::<Result<_>>()?;
    match parts.as_slice() {
        [v] => Ok(vec![*v]),
        [start, step, stop] => {
            if !(*step > 0.0) || stop < start {
                return Err(Error::config(format!(
                    "sweep {text:?} needs a positive step and start <= stop"
                )));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(Error::config(format!(
            "sweep {text:?} must be a single value or start:step:stop"
        ))),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("invalid configuration: {e}")))
    }

    /// Reads a JSON configuration file; a missing or unreadable file is an
    /// I/O error, malformed content a configuration error.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.setup {
            self.setups = vec![SetupSelector::Table(s)];
        }
        if let Some(sweep) = &o.p_t_sweep_dbm {
            self.p_t_sweep_dbm = sweep.clone();
        }
        if let Some(n) = o.n_trials {
            self.n_trials = n;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
    }

    pub fn link_arrays(&self) -> Result<LinkArrays> {
        LinkArrays::new(self.arrays.n_bs, self.arrays.n_ris, self.arrays.n_ms)
    }

    pub fn resolved_setups(&self) -> Result<Vec<ResolvedSetup>> {
        self.setups.iter().map(SetupSelector::resolve).collect()
    }

    /// Checks every invariant and returns the resolved setups.
    pub fn validate(&self) -> Result<Vec<ResolvedSetup>> {
        if self.setups.is_empty() {
            return Err(Error::config("at least one setup is required"));
        }
        if self.p_t_sweep_dbm.is_empty() {
            return Err(Error::config("the transmit-power sweep is empty"));
        }
        if let Some(p) = self.p_t_sweep_dbm.iter().find(|p| !p.is_finite()) {
            return Err(Error::config(format!("transmit power {p} dBm is not finite")));
        }
        if self.n_trials == 0 {
            return Err(Error::config("n_trials must be at least 1"));
        }
        if self.n_paths_mr == 0 || self.n_paths_rb == 0 {
            return Err(Error::config("each hop needs at least one path"));
        }
        let arrays = self.link_arrays().map_err(|e| Error::config(e.to_string()))?;
        self.geometry.validate().map_err(|e| Error::config(e.to_string()))?;
        self.path_loss.validate().map_err(|e| Error::config(e.to_string()))?;
        self.estimator.validate()?;
        if !(self.noise.sigma2() > 0.0 && self.noise.sigma2().is_finite()) {
            return Err(Error::config("noise power must be positive and finite"));
        }
        if !(self.sampler.sine_bound > 0.0 && self.sampler.sine_bound <= 1.0) {
            return Err(Error::config("sampler sine_bound must lie in (0, 1]"));
        }
        for (n, sep, hop) in [
            (self.n_paths_mr, hop_separation(arrays.ris, arrays.ms), "MS-RIS"),
            (self.n_paths_rb, hop_separation(arrays.bs, arrays.ris), "RIS-BS"),
        ] {
            if n > 1 && n as f64 * sep >= 2.0 * self.sampler.sine_bound {
                return Err(Error::config(format!(
                    "{n} paths with separation {sep} do not fit the {hop} sector"
                )));
            }
        }
        let resolved = self.resolved_setups()?;
        let mut labels = HashSet::new();
        for s in &resolved {
            if !labels.insert(s.label.clone()) {
                return Err(Error::config(format!("duplicate setup label {:?}", s.label)));
            }
            s.stage1.validate(&arrays)?;
            s.stage2.validate(&arrays)?;
            if s.stage2.n_active >= arrays.ris.n_elements() {
                return Err(Error::config(format!(
                    "setup {:?}: stage 2 needs at least one reflecting element",
                    s.label
                )));
            }
        }
        Ok(resolved)
    }
}
