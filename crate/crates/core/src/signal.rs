//! Uplink training for the hybrid RIS: pilot and combiner matrices, the
//! per-block RIS phase schedule with its active (receiving) elements, and
//! the noisy observations at the RIS and at the BS.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{standard_complex_normal, ChannelRealization, LinkArrays, PhaseControl};
use crate::error::{Error, Result};
use crate::linalg::{cis, hstack, unitary_dft, vstack, CMat, ZERO};

/// How pilot or combiner columns are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamKind {
    /// Leading columns of the unitary DFT matrix.
    Dft,
    /// `T` orthonormal DFT-spaced beams centered on broadside, with spatial
    /// frequencies `(c − (T − 1)/2) / N` for `c = 0, …, T − 1`.
    #[default]
    DftBroadside,
    /// I.i.d. uniform-phase entries with unit-norm columns.
    RandomUnitModulus,
}

/// Where the active RIS elements sit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivePlacement {
    /// `M` indices evenly spaced over the surface.
    #[default]
    Uniform,
    /// `M` indices drawn without replacement.
    Random,
}

/// Whether the active set changes between training blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveVariation {
    /// The same elements receive in every block.
    Fixed,
    /// Uniform placement shifts cyclically by one element per block; random
    /// placement redraws the set per block.
    #[default]
    PerBlock,
}

/// Dimensions and design choices of a training schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSpec {
    /// Active RIS elements per block, `M`.
    pub n_active: usize,
    /// RF chains at the RIS, `N_RF,R`.
    pub n_rf_ris: usize,
    /// Training blocks, `K`.
    pub n_blocks: usize,
    /// Pilot beams per block, `T`.
    pub n_beams: usize,
    /// BS combining beams, `N_C,B`.
    pub n_bs_beams: usize,
    /// RF chains at the BS, `N_RF,B`.
    pub n_rf_bs: usize,
    #[serde(default)]
    pub pilot: BeamKind,
    #[serde(default)]
    pub combiner: BeamKind,
    #[serde(default)]
    pub placement: ActivePlacement,
    #[serde(default)]
    pub variation: ActiveVariation,
}

impl TrainingSpec {
    /// Rows of the hybrid-RIS parameter table (setups 1, 2 and 3).
    pub fn table_setup(setup: u8) -> Result<Self> {
        let m = match setup {
            1 => 8,
            2 => 4,
            3 => 2,
            other => {
                return Err(Error::config(format!(
                    "unknown setup {other}; expected 1, 2 or 3"
                )))
            }
        };
        Ok(Self {
            n_active: m,
            n_rf_ris: m,
            n_blocks: 5,
            n_beams: 8,
            n_bs_beams: 8,
            n_rf_bs: 8,
            pilot: BeamKind::default(),
            combiner: BeamKind::default(),
            placement: ActivePlacement::Uniform,
            variation: ActiveVariation::default(),
        })
    }

    pub fn validate(&self, arrays: &LinkArrays) -> Result<()> {
        let n_r = arrays.ris.n_elements();
        let n_m = arrays.ms.n_elements();
        let n_b = arrays.bs.n_elements();
        let positive = [
            ("n_active", self.n_active),
            ("n_rf_ris", self.n_rf_ris),
            ("n_blocks", self.n_blocks),
            ("n_beams", self.n_beams),
            ("n_bs_beams", self.n_bs_beams),
            ("n_rf_bs", self.n_rf_bs),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        if self.n_active > n_r {
            return Err(Error::config(format!(
                "{} active elements exceed the {n_r}-element RIS",
                self.n_active
            )));
        }
        if self.n_beams > n_m {
            return Err(Error::config(format!(
                "{} pilot beams exceed the {n_m} MS antennas",
                self.n_beams
            )));
        }
        if self.n_bs_beams > n_b {
            return Err(Error::config(format!(
                "{} combining beams exceed the {n_b} BS antennas",
                self.n_bs_beams
            )));
        }
        Ok(())
    }

    /// `K · T · ⌈N_C,B / N_RF,B⌉ · ⌈M / N_RF,R⌉`.
    pub fn overhead(&self) -> usize {
        overhead(
            self.n_blocks,
            self.n_beams,
            self.n_bs_beams,
            self.n_rf_bs,
            self.n_active,
            self.n_rf_ris,
        )
    }
}

/// Training overhead `K · T · ⌈N_C,B / N_RF,B⌉ · ⌈M / N_RF,R⌉` in channel uses.
pub fn overhead(
    n_blocks: usize,
    n_beams: usize,
    n_bs_beams: usize,
    n_rf_bs: usize,
    n_active: usize,
    n_rf_ris: usize,
) -> usize {
    n_blocks * n_beams * n_bs_beams.div_ceil(n_rf_bs) * n_active.div_ceil(n_rf_ris)
}

/// A concrete training schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub n_blocks: usize,
    pub n_beams: usize,
    /// Pilot matrix `X` (N_M × T); each column has squared norm `pilot_power`.
    pub pilot: CMat,
    /// BS combiner `W_B` (N_B × N_C,B) with unit-norm columns.
    pub bs_combiner: CMat,
    /// Zero-based active RIS indices for each block, sorted ascending.
    pub active_sets: Vec<Vec<usize>>,
    /// RIS phase matrix `Ω_k` of each block.
    pub phase_schedule: Vec<PhaseControl>,
    /// Transmit power per channel use in watts.
    pub pilot_power: f64,
    pub n_rf_ris: usize,
    pub n_rf_bs: usize,
}

fn random_unit_modulus<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let scale = 1.0 / (rows as f64).sqrt();
    let mut m = CMat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = cis(rng.random_range(0.0..2.0 * PI)) * scale;
        }
    }
    m
}

fn broadside_dft(rows: usize, cols: usize) -> CMat {
    let scale = 1.0 / (rows as f64).sqrt();
    let center = (cols as f64 - 1.0) / 2.0;
    CMat::from_fn(rows, cols, |m, c| {
        let freq = (c as f64 - center) / rows as f64;
        cis(2.0 * PI * m as f64 * freq) * scale
    })
}

fn beam_matrix<R: Rng + ?Sized>(kind: BeamKind, rows: usize, cols: usize, rng: &mut R) -> CMat {
    match kind {
        BeamKind::Dft => unitary_dft(rows).columns(0, cols).into_owned(),
        BeamKind::DftBroadside => broadside_dft(rows, cols),
        BeamKind::RandomUnitModulus => random_unit_modulus(rng, rows, cols),
    }
}

fn uniform_indices(n: usize, m: usize, shift: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..m).map(|i| (i * n / m + shift) % n).collect();
    v.sort_unstable();
    v
}

impl TrainingConfig {
    /// Builds the schedule from a seed: pilots and combiners per `spec`,
    /// active sets per the placement rule, and i.i.d. uniform phases on the
    /// passive elements of every block.
    pub fn generate(
        spec: &TrainingSpec,
        arrays: &LinkArrays,
        pilot_power: f64,
        seed: u64,
    ) -> Result<Self> {
        spec.validate(arrays)?;
        if !(pilot_power > 0.0 && pilot_power.is_finite()) {
            return Err(Error::config(format!(
                "pilot power must be positive, got {pilot_power}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_r = arrays.ris.n_elements();
        let pilot = beam_matrix(spec.pilot, arrays.ms.n_elements(), spec.n_beams, &mut rng)
            * Complex64::new(pilot_power.sqrt(), 0.0);
        let bs_combiner =
            beam_matrix(spec.combiner, arrays.bs.n_elements(), spec.n_bs_beams, &mut rng);

        let random_set = |rng: &mut ChaCha8Rng| {
            let mut v = sample_indices(rng, n_r, spec.n_active).into_vec();
            v.sort_unstable();
            v
        };
        let mut active_sets = Vec::with_capacity(spec.n_blocks);
        let fixed_random = match spec.placement {
            ActivePlacement::Random => Some(random_set(&mut rng)),
            ActivePlacement::Uniform => None,
        };
        for k in 0..spec.n_blocks {
            let set = match (spec.placement, spec.variation) {
                (ActivePlacement::Uniform, ActiveVariation::Fixed) => {
                    uniform_indices(n_r, spec.n_active, 0)
                }
                (ActivePlacement::Uniform, ActiveVariation::PerBlock) => {
                    uniform_indices(n_r, spec.n_active, k)
                }
                (ActivePlacement::Random, ActiveVariation::Fixed) => {
                    fixed_random.clone().expect("drawn above")
                }
                (ActivePlacement::Random, ActiveVariation::PerBlock) => {
                    if k == 0 {
                        fixed_random.clone().expect("drawn above")
                    } else {
                        random_set(&mut rng)
                    }
                }
            };
            active_sets.push(set);
        }

        let phase_schedule = active_sets
            .iter()
            .map(|set| {
                let mut diag: Vec<Complex64> =
                    (0..n_r).map(|_| cis(rng.random_range(0.0..2.0 * PI))).collect();
                for &i in set {
                    diag[i] = ZERO;
                }
                PhaseControl::from_diagonal(diag).expect("unit or zero entries")
            })
            .collect();

        Ok(Self {
            n_blocks: spec.n_blocks,
            n_beams: spec.n_beams,
            pilot,
            bs_combiner,
            active_sets,
            phase_schedule,
            pilot_power,
            n_rf_ris: spec.n_rf_ris,
            n_rf_bs: spec.n_rf_bs,
        })
    }

    pub fn n_active(&self) -> usize {
        self.active_sets.first().map_or(0, |s| s.len())
    }

    pub fn n_ris(&self) -> usize {
        self.phase_schedule.first().map_or(0, |p| p.len())
    }

    pub fn n_bs_beams(&self) -> usize {
        self.bs_combiner.ncols()
    }

    /// Active set of the first block (the only one under a fixed schedule).
    pub fn active_set(&self) -> &[usize] {
        self.active_sets.first().map_or(&[], |s| s.as_slice())
    }

    /// `K · T · ⌈N_C,B / N_RF,B⌉ · ⌈M / N_RF,R⌉`.
    pub fn training_overhead(&self) -> usize {
        overhead(
            self.n_blocks,
            self.n_beams,
            self.n_bs_beams(),
            self.n_rf_bs,
            self.n_active(),
            self.n_rf_ris,
        )
    }

    /// Row selection `W_H,k` (M × N_R) picking the active elements of block k.
    pub fn selection(&self, k: usize) -> CMat {
        let set = &self.active_sets[k];
        let mut w = CMat::zeros(set.len(), self.n_ris());
        for (row, &i) in set.iter().enumerate() {
            w[(row, i)] = Complex64::new(1.0, 0.0);
        }
        w
    }

    /// All selections stacked row-wise, `W_H` (MK × N_R).
    pub fn stacked_selection(&self) -> CMat {
        vstack(&(0..self.n_blocks).map(|k| self.selection(k)).collect::<Vec<_>>())
    }

    /// `U = [Ω_1 H X, …, Ω_K H X]` (N_R × TK) for any MS → RIS channel `H`.
    pub fn reflected_pilots(&self, h_mr: &CMat) -> CMat {
        let hx = h_mr * &self.pilot;
        hstack(
            &self
                .phase_schedule
                .iter()
                .map(|omega| omega.apply_left(&hx))
                .collect::<Vec<_>>(),
        )
    }

    /// Serializes the schedule with complex entries as `[re, im]` pairs.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ScheduleDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScheduleDocument = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// JSON form of a [`TrainingConfig`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleDocument {
    pub n_blocks: usize,
    pub n_beams: usize,
    pub pilot_power: f64,
    pub n_rf_ris: usize,
    pub n_rf_bs: usize,
    /// Row-major `[re, im]` entries.
    pub pilot: Vec<Vec<[f64; 2]>>,
    pub bs_combiner: Vec<Vec<[f64; 2]>>,
    pub active_sets: Vec<Vec<usize>>,
    /// Diagonal of each `Ω_k`.
    pub phase_schedule: Vec<Vec<[f64; 2]>>,
}

fn to_pairs(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::config("ragged matrix in schedule document"));
    }
    Ok(CMat::from_fn(n, m, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

impl From<&TrainingConfig> for ScheduleDocument {
    fn from(c: &TrainingConfig) -> Self {
        Self {
            n_blocks: c.n_blocks,
            n_beams: c.n_beams,
            pilot_power: c.pilot_power,
            n_rf_ris: c.n_rf_ris,
            n_rf_bs: c.n_rf_bs,
            pilot: to_pairs(&c.pilot),
            bs_combiner: to_pairs(&c.bs_combiner),
            active_sets: c.active_sets.clone(),
            phase_schedule: c
                .phase_schedule
                .iter()
                .map(|p| p.diagonal().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }
}

impl TryFrom<ScheduleDocument> for TrainingConfig {
    type Error = Error;

    fn try_from(d: ScheduleDocument) -> Result<Self> {
        let phase_schedule = d
            .phase_schedule
            .iter()
            .map(|diag| {
                PhaseControl::from_diagonal(
                    diag.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        if phase_schedule.len() != d.n_blocks || d.active_sets.len() != d.n_blocks {
            return Err(Error::config("schedule block counts disagree"));
        }
        Ok(Self {
            n_blocks: d.n_blocks,
            n_beams: d.n_beams,
            pilot: from_pairs(&d.pilot)?,
            bs_combiner: from_pairs(&d.bs_combiner)?,
            active_sets: d.active_sets,
            phase_schedule,
            pilot_power: d.pilot_power,
            n_rf_ris: d.n_rf_ris,
            n_rf_bs: d.n_rf_bs,
        })
    }
}

/// Thermal noise from a power spectral density and a bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    pub density_dbm_per_hz: f64,
    pub bandwidth_hz: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            density_dbm_per_hz: -173.0,
            bandwidth_hz: 1e8,
        }
    }
}

impl NoiseModel {
    /// Noise power `σ²` in watts.
    pub fn sigma2(&self) -> f64 {
        10f64.powf((self.density_dbm_per_hz + 10.0 * self.bandwidth_hz.log10() - 30.0) / 10.0)
    }
}

/// Converts dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Matrix of i.i.d. CN(0, σ²) entries.
pub fn complex_noise<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, sigma2: f64) -> CMat {
    if sigma2 == 0.0 {
        return CMat::zeros(rows, cols);
    }
    let s = sigma2.sqrt();
    let mut m = CMat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = standard_complex_normal(rng) * s;
        }
    }
    m
}

/// Pilots received by the active RIS elements over all blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct RisObservation {
    /// `Y_H` (MK × T): per-block receptions stacked row-wise.
    pub y_h: CMat,
    /// `W_H` (MK × N_R): stacked row selections.
    pub selection: CMat,
}

/// Pilots received at the BS through the reflecting RIS elements.
#[derive(Debug, Clone, PartialEq)]
pub struct BsObservation {
    /// `Y` (N_C,B × TK): per-block receptions stacked column-wise.
    pub y: CMat,
    /// Noise-free `U = [Ω_1 H_MR X, …, Ω_K H_MR X]`, for diagnostics only.
    pub u_true: CMat,
}

fn check_dims(real: &ChannelRealization, cfg: &TrainingConfig) -> Result<()> {
    let (n_r, n_m) = real.h_mr.shape();
    let n_b = real.h_rb.nrows();
    if cfg.pilot.nrows() != n_m
        || cfg.n_ris() != n_r
        || cfg.bs_combiner.nrows() != n_b
        || cfg.phase_schedule.len() != cfg.n_blocks
        || cfg.active_sets.len() != cfg.n_blocks
    {
        return Err(Error::domain(format!(
            "training schedule (N_M {}, N_R {}, N_B {}, K {}) does not match the channel ({n_m}, {n_r}, {n_b})",
            cfg.pilot.nrows(),
            cfg.n_ris(),
            cfg.bs_combiner.nrows(),
            cfg.n_blocks
        )));
    }
    Ok(())
}

/// `Y_H,k = W_H,k (β1 H_MR X + Z1,k)` for every block, stacked row-wise.
pub fn receive_at_ris<R: Rng + ?Sized>(
    real: &ChannelRealization,
    cfg: &TrainingConfig,
    beta1: f64,
    sigma2: f64,
    rng: &mut R,
) -> Result<RisObservation> {
    check_dims(real, cfg)?;
    let clean = &real.h_mr * &cfg.pilot * Complex64::new(beta1, 0.0);
    let t = cfg.n_beams;
    let blocks: Vec<CMat> = cfg
        .active_sets
        .iter()
        .map(|set| {
            // only the selected rows of Z1,k survive W_H,k
            let noise = complex_noise(rng, set.len(), t, sigma2);
            CMat::from_fn(set.len(), t, |r, c| clean[(set[r], c)] + noise[(r, c)])
        })
        .collect();
    Ok(RisObservation {
        y_h: vstack(&blocks),
        selection: cfg.stacked_selection(),
    })
}

/// `Y_k = β2 W_Bᴴ H_RB Ω_k H_MR X + W_Bᴴ Z2,k`, stacked column-wise.
pub fn receive_at_bs<R: Rng + ?Sized>(
    real: &ChannelRealization,
    cfg: &TrainingConfig,
    beta2: f64,
    sigma2: f64,
    rng: &mut R,
) -> Result<BsObservation> {
    check_dims(real, cfg)?;
    let u_true = cfg.reflected_pilots(&real.h_mr);
    let wh = cfg.bs_combiner.adjoint();
    let clean = &wh * &real.h_rb * &u_true * Complex64::new(beta2, 0.0);
    let n_b = real.h_rb.nrows();
    let noise_blocks: Vec<CMat> = (0..cfg.n_blocks)
        .map(|_| &wh * complex_noise(rng, n_b, cfg.n_beams, sigma2))
        .collect();
    Ok(BsObservation {
        y: clean + hstack(&noise_blocks),
        u_true,
    })
}

/// One block of passive-RIS training: pilot, BS combiner and RIS phases.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveBlock {
    pub pilot: CMat,
    pub combiner: CMat,
    pub omega: PhaseControl,
}

/// `Y_P,k = β2 W_kᴴ H_RB Ω_k H_MR X_k + W_kᴴ Z_k` for each block.
pub fn receive_passive<R: Rng + ?Sized>(
    real: &ChannelRealization,
    schedule: &[PassiveBlock],
    beta2: f64,
    sigma2: f64,
    rng: &mut R,
) -> Result<Vec<CMat>> {
    let (n_r, n_m) = real.h_mr.shape();
    let n_b = real.h_rb.nrows();
    schedule
        .iter()
        .map(|blk| {
            if blk.pilot.nrows() != n_m || blk.combiner.nrows() != n_b || blk.omega.len() != n_r {
                return Err(Error::domain("passive block dimensions do not match the channel"));
            }
            let wh = blk.combiner.adjoint();
            let clean = &wh
                * &real.h_rb
                * blk.omega.apply_left(&real.h_mr)
                * &blk.pilot
                * Complex64::new(beta2, 0.0);
            let noise = complex_noise(rng, n_b, blk.pilot.ncols(), sigma2);
            Ok(clean + wh * noise)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{PathSampler, LinkArrays};
    use crate::linalg::{frobenius_sq, max_abs_diff};

    fn realization(seed: u64) -> ChannelRealization {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ChannelRealization::sample(
            &mut rng,
            LinkArrays::paper_default(),
            2,
            2,
            &PathSampler::default(),
        )
        .unwrap()
    }

    fn setup(n: u8) -> TrainingConfig {
        let spec = TrainingSpec::table_setup(n).unwrap();
        TrainingConfig::generate(&spec, &LinkArrays::paper_default(), 1e-2, 7).unwrap()
    }

    #[test]
    fn table_rows() {
        let s1 = TrainingSpec::table_setup(1).unwrap();
        assert_eq!(
            (s1.n_active, s1.n_rf_ris, s1.n_blocks, s1.n_beams, s1.n_bs_beams, s1.n_rf_bs),
            (8, 8, 5, 8, 8, 8)
        );
        assert_eq!(TrainingSpec::table_setup(3).unwrap().n_active, 2);
        assert!(TrainingSpec::table_setup(4).is_err());
        for n in 1..=3 {
            assert_eq!(setup(n).training_overhead(), 40);
        }
    }

    #[test]
    fn overhead_formula_rounds_up() {
        assert_eq!(overhead(2, 3, 5, 2, 3, 2), 36);
    }

    #[test]
    fn oversized_specs_are_rejected() {
        let arrays = LinkArrays::paper_default();
        let mut s = TrainingSpec::table_setup(1).unwrap();
        s.n_active = 33;
        assert!(matches!(TrainingConfig::generate(&s, &arrays, 1.0, 0), Err(Error::Config(_))));
        let mut s = TrainingSpec::table_setup(1).unwrap();
        s.n_beams = 17;
        assert!(matches!(TrainingConfig::generate(&s, &arrays, 1.0, 0), Err(Error::Config(_))));
        let mut s = TrainingSpec::table_setup(1).unwrap();
        s.n_bs_beams = 17;
        assert!(matches!(TrainingConfig::generate(&s, &arrays, 1.0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn schedule_invariants() {
        let cfg = setup(1);
        for k in 0..cfg.n_blocks {
            let d = cfg.phase_schedule[k].diagonal();
            for (i, z) in d.iter().enumerate() {
                if cfg.active_sets[k].contains(&i) {
                    assert_eq!(*z, ZERO);
                } else {
                    assert!((z.norm() - 1.0).abs() < 1e-12);
                }
            }
        }
        assert_ne!(cfg.phase_schedule[0], cfg.phase_schedule[1]);
        assert_eq!(cfg.active_set(), &[0, 4, 8, 12, 16, 20, 24, 28]);
        for j in 0..cfg.pilot.ncols() {
            let p: f64 = cfg.pilot.column(j).iter().map(|z| z.norm_sqr()).sum();
            assert!((p - 1e-2).abs() < 1e-14);
        }
        for j in 0..cfg.bs_combiner.ncols() {
            assert!((cfg.bs_combiner.column(j).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn schedule_is_deterministic() {
        assert_eq!(setup(2), setup(2));
    }

    #[test]
    fn per_block_sets_rotate() {
        let mut spec = TrainingSpec::table_setup(1).unwrap();
        spec.variation = ActiveVariation::PerBlock;
        let cfg = TrainingConfig::generate(&spec, &LinkArrays::paper_default(), 1.0, 1).unwrap();
        assert_eq!(cfg.active_sets[1], vec![1, 5, 9, 13, 17, 21, 25, 29]);
        spec.placement = ActivePlacement::Random;
        let cfg = TrainingConfig::generate(&spec, &LinkArrays::paper_default(), 1.0, 1).unwrap();
        assert!(cfg.active_sets.iter().all(|s| s.len() == 8));
        assert_ne!(cfg.active_sets[0], cfg.active_sets[1]);
    }

    #[test]
    fn selection_picks_active_rows() {
        let cfg = setup(2);
        let real = realization(1);
        let sel = cfg.selection(0) * &real.h_mr;
        for (r, &i) in cfg.active_set().iter().enumerate() {
            for c in 0..16 {
                assert_eq!(sel[(r, c)], real.h_mr[(i, c)]);
            }
        }
    }

    #[test]
    fn noiseless_full_observation_is_exact() {
        let arrays = LinkArrays::paper_default();
        let spec = TrainingSpec {
            n_active: 32,
            n_rf_ris: 32,
            n_blocks: 1,
            n_beams: 16,
            n_bs_beams: 16,
            n_rf_bs: 16,
            ..TrainingSpec::table_setup(1).unwrap()
        };
        let cfg = TrainingConfig::generate(&spec, &arrays, 1.0, 2).unwrap();
        let real = realization(2);
        let obs = receive_at_ris(&real, &cfg, 0.7, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let expect = &real.h_mr * &cfg.pilot * Complex64::new(0.7, 0.0);
        assert_eq!(obs.selection, CMat::identity(32, 32));
        assert!(max_abs_diff(&obs.y_h, &expect) < 1e-14);
    }

    #[test]
    fn observation_shapes_for_setup_one() {
        let cfg = setup(1);
        let real = realization(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ris = receive_at_ris(&real, &cfg, 1.0, 1.0, &mut rng).unwrap();
        assert_eq!(ris.y_h.shape(), (40, 8));
        assert_eq!(ris.selection.shape(), (40, 32));
        let bs = receive_at_bs(&real, &cfg, 1.0, 1.0, &mut rng).unwrap();
        assert_eq!(bs.y.shape(), (8, 40));
        assert_eq!(bs.u_true.shape(), (32, 40));
    }

    #[test]
    fn ris_noise_energy_matches_expectation() {
        let cfg = setup(1);
        let real = realization(4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sigma2 = 0.3;
        let clean = receive_at_ris(&real, &cfg, 1.0, 0.0, &mut rng).unwrap().y_h;
        let draws = 10_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let y = receive_at_ris(&real, &cfg, 1.0, sigma2, &mut rng).unwrap().y_h;
            acc += frobenius_sq(&(y - &clean));
        }
        let expect = 40.0 * 8.0 * sigma2;
        assert!((acc / draws as f64 - expect).abs() < 0.05 * expect);
    }

    #[test]
    fn fully_active_ris_reflects_nothing() {
        let arrays = LinkArrays::paper_default();
        let spec = TrainingSpec {
            n_active: 32,
            n_rf_ris: 32,
            n_blocks: 1,
            ..TrainingSpec::table_setup(1).unwrap()
        };
        let cfg = TrainingConfig::generate(&spec, &arrays, 1.0, 5).unwrap();
        let real = realization(5);
        let bs = receive_at_bs(&real, &cfg, 1.0, 0.0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert!(bs.y.iter().all(|z| *z == ZERO));
    }

    #[test]
    fn noiseless_bs_signal_matches_blockwise_assembly() {
        let cfg = setup(1);
        let real = realization(6);
        let beta2 = 0.25;
        let bs = receive_at_bs(&real, &cfg, beta2, 0.0, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let t = cfg.n_beams;
        for k in 0..cfg.n_blocks {
            let omega = cfg.phase_schedule[k].to_matrix();
            let u_k = &omega * &real.h_mr * &cfg.pilot;
            let y_k = cfg.bs_combiner.adjoint() * &real.h_rb * &u_k * Complex64::new(beta2, 0.0);
            assert!(max_abs_diff(&bs.u_true.columns(k * t, t).into_owned(), &u_k) < 1e-12);
            assert!(max_abs_diff(&bs.y.columns(k * t, t).into_owned(), &y_k) < 1e-12);
        }
    }

    #[test]
    fn passive_matches_hybrid_without_active_elements() {
        let arrays = LinkArrays::paper_default();
        let spec = TrainingSpec::table_setup(1).unwrap();
        let cfg = TrainingConfig::generate(&spec, &arrays, 1.0, 8).unwrap();
        let real = realization(8);
        // replace the schedule by fully reflecting phases
        let full: Vec<PhaseControl> = (0..cfg.n_blocks)
            .map(|k| PhaseControl::from_phases(&vec![0.3 * k as f64; 32]))
            .collect();
        let hybrid_cfg = TrainingConfig {
            active_sets: vec![Vec::new(); cfg.n_blocks],
            phase_schedule: full.clone(),
            ..cfg.clone()
        };
        let hybrid =
            receive_at_bs(&real, &hybrid_cfg, 0.5, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let blocks: Vec<PassiveBlock> = full
            .into_iter()
            .map(|omega| PassiveBlock {
                pilot: cfg.pilot.clone(),
                combiner: cfg.bs_combiner.clone(),
                omega,
            })
            .collect();
        let passive =
            receive_passive(&real, &blocks, 0.5, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(max_abs_diff(&hstack(&passive), &hybrid.y) < 1e-12);
    }

    #[test]
    fn scalar_passive_chain() {
        let p = crate::channel::PathParams::new(vec![0.0], vec![0.0], vec![Complex64::new(2.0, 0.0)])
            .unwrap();
        let q = crate::channel::PathParams::new(vec![0.0], vec![0.0], vec![Complex64::new(0.0, 3.0)])
            .unwrap();
        // two-element arrays are the smallest allowed; use the [0,0] entry chain
        let arrays = LinkArrays::new(2, 2, 2).unwrap();
        let real = ChannelRealization::new(p, q, arrays).unwrap();
        let e0 = CMat::from_fn(2, 1, |i, _| if i == 0 { Complex64::new(1.0, 0.0) } else { ZERO });
        let blk = PassiveBlock {
            pilot: e0.clone(),
            combiner: e0,
            omega: PhaseControl::identity(2),
        };
        let y = receive_passive(&real, &[blk], 1.5, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        // H_RB[0,:] · H_MR[:,0] = 2 elements · (3j · 2)
        assert!((y[0][(0, 0)] - Complex64::new(0.0, 1.5 * 2.0 * 6.0)).norm() < 1e-12);
    }

    #[test]
    fn combined_noise_covariance() {
        let real = realization(9);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = random_unit_modulus(&mut rng, 16, 3);
        let blk = PassiveBlock {
            pilot: CMat::zeros(16, 1),
            combiner: w.clone(),
            omega: PhaseControl::identity(32),
        };
        let sigma2 = 2.0;
        let draws = 10_000;
        let mut cov = CMat::zeros(3, 3);
        for _ in 0..draws {
            let y = &receive_passive(&real, std::slice::from_ref(&blk), 1.0, sigma2, &mut rng)
                .unwrap()[0];
            cov += y * y.adjoint();
        }
        cov /= Complex64::new(draws as f64, 0.0);
        let expect = w.adjoint() * &w * Complex64::new(sigma2, 0.0);
        assert!(max_abs_diff(&cov, &expect) < 0.06 * sigma2);
    }

    #[test]
    fn noise_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let sigma2 = 0.5;
        let n = 100_000;
        let z = complex_noise(&mut rng, n, 1, sigma2);
        let mean: Complex64 = z.iter().sum::<Complex64>() / n as f64;
        let var = z.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (n - 1) as f64;
        assert!(mean.norm() < 5.0 * (sigma2 / n as f64).sqrt());
        assert!((var - sigma2).abs() < 0.05 * sigma2);
    }

    #[test]
    fn thermal_noise_power() {
        let s = NoiseModel::default().sigma2();
        assert!((s - 10f64.powf(-12.3)).abs() < 1e-20);
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let cfg = setup(3);
        let text = cfg.to_json().unwrap();
        let back = TrainingConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
