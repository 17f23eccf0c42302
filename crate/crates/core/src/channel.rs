//! Geometric ULA channels for the MS → RIS → BS link.
//!
//! Angles are radians in (−π/2, π/2). With half-wavelength spacing the array
//! response is `exp(jπ n sin θ)`, a complex sinusoid whose cycles-per-element
//! frequency is `ν = sin θ / 2`. Estimators work with `ν` folded into [0, 1);
//! [`spatial_frequency`] and [`sine_from_frequency`] convert between the two.
//! Path separations are measured on the sine axis, which has period 2.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, CMat, CVec, ZERO};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// A uniform linear array with half-wavelength element spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    n_elements: usize,
}

impl ArrayGeometry {
    pub fn new(n_elements: usize) -> Result<Self> {
        if n_elements < 2 {
            return Err(Error::domain(format!(
                "an array needs at least 2 elements, got {n_elements}"
            )));
        }
        Ok(Self { n_elements })
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    /// Element spacing in wavelengths.
    pub fn spacing(&self) -> f64 {
        0.5
    }

    /// Smallest sine separation between paths the array can resolve
    /// reliably, `4/N`.
    pub fn resolution_separation(&self) -> f64 {
        4.0 / self.n_elements as f64
    }
}

/// The three arrays of the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkArrays {
    pub bs: ArrayGeometry,
    pub ris: ArrayGeometry,
    pub ms: ArrayGeometry,
}

impl LinkArrays {
    pub fn new(n_bs: usize, n_ris: usize, n_ms: usize) -> Result<Self> {
        Ok(Self {
            bs: ArrayGeometry::new(n_bs)?,
            ris: ArrayGeometry::new(n_ris)?,
            ms: ArrayGeometry::new(n_ms)?,
        })
    }

    /// N_B = 16, N_R = 32, N_M = 16.
    pub fn paper_default() -> Self {
        Self::new(16, 32, 16).expect("valid sizes")
    }
}

fn check_angle(angle: f64) -> Result<()> {
    if angle.is_finite() && angle > -FRAC_PI_2 && angle < FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "angle {angle} rad lies outside (-pi/2, pi/2)"
        )))
    }
}

/// Normalized spatial frequency `sin(angle)/2` folded into [0, 1).
pub fn spatial_frequency(angle: f64) -> f64 {
    frequency_from_sine(angle.sin())
}

/// Folds a sine value onto the [0, 1) frequency circle.
pub fn frequency_from_sine(sine: f64) -> f64 {
    let f = (0.5 * sine).rem_euclid(1.0);
    // rem_euclid can return exactly 1.0 for tiny negative inputs
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Inverse of [`frequency_from_sine`], returning a sine in [−1, 1).
pub fn sine_from_frequency(freq: f64) -> f64 {
    let s = 2.0 * freq.rem_euclid(1.0);
    if s >= 1.0 {
        s - 2.0
    } else {
        s
    }
}

/// Wrap-around distance between two points on a circle of the given period.
pub fn circular_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Array response `α(angle)` with entries `exp(jπ n sin(angle))`, n = 0..N−1.
pub fn array_response(geometry: ArrayGeometry, angle: f64) -> Result<CVec> {
    check_angle(angle)?;
    Ok(response_from_sine(geometry.n_elements, angle.sin()))
}

/// Array response parameterized directly by the sine of the angle. Any real
/// sine is accepted, which also covers the angle-difference responses of the
/// cascaded channel.
pub fn response_from_sine(n: usize, sine: f64) -> CVec {
    CVec::from_fn(n, |i, _| cis(PI * i as f64 * sine))
}

/// Array response parameterized by a [0, 1) spatial frequency.
pub fn response_from_frequency(n: usize, freq: f64) -> CVec {
    CVec::from_fn(n, |i, _| cis(2.0 * PI * i as f64 * freq))
}

/// Steering matrix whose columns are responses for each sine.
pub fn steering_matrix(n: usize, sines: &[f64]) -> CMat {
    let mut a = CMat::zeros(n, sines.len());
    for (l, &s) in sines.iter().enumerate() {
        a.set_column(l, &response_from_sine(n, s));
    }
    a
}

/// Geometric parameters of one hop: departure angles at the transmitter,
/// arrival angles at the receiver and complex path gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub aod: Vec<f64>,
    pub aoa: Vec<f64>,
    pub gains: Vec<Complex64>,
}

impl PathParams {
    pub fn new(aod: Vec<f64>, aoa: Vec<f64>, gains: Vec<Complex64>) -> Result<Self> {
        let p = Self { aod, aoa, gains };
        p.check_shape()?;
        for &a in p.aod.iter().chain(&p.aoa) {
            check_angle(a)?;
        }
        Ok(p)
    }

    fn check_shape(&self) -> Result<()> {
        let l = self.gains.len();
        if l == 0 || self.aod.len() != l || self.aoa.len() != l {
            return Err(Error::domain(format!(
                "path lists must share a nonzero length (aod {}, aoa {}, gains {})",
                self.aod.len(),
                self.aoa.len(),
                l
            )));
        }
        Ok(())
    }

    pub fn n_paths(&self) -> usize {
        self.gains.len()
    }

    pub fn aod_sines(&self) -> Vec<f64> {
        self.aod.iter().map(|a| a.sin()).collect()
    }

    pub fn aoa_sines(&self) -> Vec<f64> {
        self.aoa.iter().map(|a| a.sin()).collect()
    }

    pub fn aod_frequencies(&self) -> Vec<f64> {
        self.aod.iter().map(|&a| spatial_frequency(a)).collect()
    }

    pub fn aoa_frequencies(&self) -> Vec<f64> {
        self.aoa.iter().map(|&a| spatial_frequency(a)).collect()
    }

    /// Smallest pairwise circular sine separation over both path ends.
    pub fn min_separation(&self) -> f64 {
        min_pairwise(&self.aod_sines()).min(min_pairwise(&self.aoa_sines()))
    }
}

fn min_pairwise(sines: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..sines.len() {
        for j in i + 1..sines.len() {
            best = best.min(circular_distance(sines[i], sines[j], 2.0));
        }
    }
    best
}

/// Draws hop parameters: sines uniform on `[−sine_bound, sine_bound]`,
/// pairwise separated by `min_sep` at both ends, gains i.i.d. CN(0, 1).
///
/// The default bound of 0.5 keeps every difference `sin φ − sin θ` inside
/// [−1, 1] so the cascaded angle differences are real angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSampler {
    pub sine_bound: f64,
    pub max_attempts: usize,
}

impl Default for PathSampler {
    fn default() -> Self {
        Self {
            sine_bound: 0.5,
            max_attempts: 100_000,
        }
    }
}

impl PathSampler {
    pub fn sample<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n_paths: usize,
        min_sep: f64,
    ) -> Result<PathParams> {
        if n_paths == 0 {
            return Err(Error::config("at least one path is required"));
        }
        if !(self.sine_bound > 0.0 && self.sine_bound < 1.0) {
            return Err(Error::config(format!(
                "sine bound {} must lie in (0, 1)",
                self.sine_bound
            )));
        }
        if n_paths > 1 && n_paths as f64 * min_sep >= 2.0 * self.sine_bound {
            return Err(Error::config(format!(
                "{n_paths} paths separated by {min_sep} do not fit in a sine interval of width {}",
                2.0 * self.sine_bound
            )));
        }
        let aod = self.separated_sines(rng, n_paths, min_sep)?;
        let aoa = self.separated_sines(rng, n_paths, min_sep)?;
        let gains = (0..n_paths).map(|_| standard_complex_normal(rng)).collect();
        Ok(PathParams {
            aod: aod.into_iter().map(f64::asin).collect(),
            aoa: aoa.into_iter().map(f64::asin).collect(),
            gains,
        })
    }

    fn separated_sines<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n_paths: usize,
        min_sep: f64,
    ) -> Result<Vec<f64>> {
        let b = self.sine_bound;
        for _ in 0..self.max_attempts {
            let s: Vec<f64> = (0..n_paths).map(|_| rng.random_range(-b..=b)).collect();
            if n_paths == 1 || min_pairwise(&s) >= min_sep {
                return Ok(s);
            }
        }
        Err(Error::config(format!(
            "no separated draw of {n_paths} paths at separation {min_sep} after {} attempts",
            self.max_attempts
        )))
    }
}

/// [`PathSampler::sample`] with default bounds. `min_sep` applies at both
/// ends of the hop, so pass the larger of the two arrays' requirements
/// (see [`hop_separation`]).
pub fn sample_path_params<R: Rng + ?Sized>(
    rng: &mut R,
    n_paths: usize,
    min_sep: f64,
) -> Result<PathParams> {
    PathSampler::default().sample(rng, n_paths, min_sep)
}

/// Separation `max(4/N_rx, 4/N_tx)` that satisfies both arrays of a hop.
pub fn hop_separation(rx: ArrayGeometry, tx: ArrayGeometry) -> f64 {
    rx.resolution_separation().max(tx.resolution_separation())
}

/// One draw from CN(0, 1).
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `Σ_l ρ_l α_rx(φ_l) α_txᴴ(θ_l)`.
pub fn build_channel(
    params: &PathParams,
    rx: ArrayGeometry,
    tx: ArrayGeometry,
) -> Result<CMat> {
    params.check_shape()?;
    let a_rx = steering_matrix(rx.n_elements(), &params.aoa_sines());
    let a_tx = steering_matrix(tx.n_elements(), &params.aod_sines());
    let mut scaled = a_rx;
    for (l, g) in params.gains.iter().enumerate() {
        for v in scaled.column_mut(l).iter_mut() {
            *v *= *g;
        }
    }
    Ok(scaled * a_tx.adjoint())
}

/// Both hops of one channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// MS → RIS channel, N_R × N_M.
    pub h_mr: CMat,
    /// RIS → BS channel, N_B × N_R.
    pub h_rb: CMat,
    pub params_mr: PathParams,
    pub params_rb: PathParams,
    pub arrays: LinkArrays,
}

impl ChannelRealization {
    pub fn new(params_mr: PathParams, params_rb: PathParams, arrays: LinkArrays) -> Result<Self> {
        let h_mr = build_channel(&params_mr, arrays.ris, arrays.ms)?;
        let h_rb = build_channel(&params_rb, arrays.bs, arrays.ris)?;
        Ok(Self {
            h_mr,
            h_rb,
            params_mr,
            params_rb,
            arrays,
        })
    }

    /// Draws both hops with the per-hop separation [`hop_separation`].
    pub fn sample<R: Rng + ?Sized>(
        rng: &mut R,
        arrays: LinkArrays,
        n_paths_mr: usize,
        n_paths_rb: usize,
        sampler: &PathSampler,
    ) -> Result<Self> {
        let mr = sampler.sample(rng, n_paths_mr, hop_separation(arrays.ris, arrays.ms))?;
        let rb = sampler.sample(rng, n_paths_rb, hop_separation(arrays.bs, arrays.ris))?;
        Self::new(mr, rb, arrays)
    }
}

/// Diagonal RIS phase-control matrix, stored by its diagonal. Entries are
/// unit-modulus (reflecting) or zero (active, receiving).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseControl {
    diag: Vec<Complex64>,
}

const UNIT_TOL: f64 = 1e-9;

impl PhaseControl {
    pub fn from_diagonal(diag: Vec<Complex64>) -> Result<Self> {
        for (i, z) in diag.iter().enumerate() {
            let m = z.norm();
            if !(m < UNIT_TOL || (m - 1.0).abs() < UNIT_TOL) {
                return Err(Error::domain(format!(
                    "phase entry {i} has modulus {m}; expected 0 or 1"
                )));
            }
        }
        Ok(Self { diag })
    }

    /// Accepts a square matrix that must be diagonal.
    pub fn from_matrix(m: &CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::domain("phase control matrix must be square"));
        }
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if i != j && m[(i, j)].norm() > UNIT_TOL {
                    return Err(Error::domain(format!(
                        "phase control matrix has off-diagonal entry at ({i}, {j})"
                    )));
                }
            }
        }
        Self::from_diagonal(m.diagonal().iter().copied().collect())
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        Self {
            diag: phases.iter().map(|&p| cis(p)).collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            diag: vec![Complex64::new(1.0, 0.0); n],
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self { diag: vec![ZERO; n] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diagonal(&self) -> &[Complex64] {
        &self.diag
    }

    pub fn to_matrix(&self) -> CMat {
        CMat::from_diagonal(&CVec::from_column_slice(&self.diag))
    }

    /// `Ω · m`, scaling row i by the i-th diagonal entry.
    pub fn apply_left(&self, m: &CMat) -> CMat {
        let mut out = m.clone();
        for (i, w) in self.diag.iter().enumerate() {
            for v in out.row_mut(i).iter_mut() {
                *v *= *w;
            }
        }
        out
    }

    /// `m · Ω`, scaling column i by the i-th diagonal entry.
    pub fn apply_right(&self, m: &CMat) -> CMat {
        let mut out = m.clone();
        for (i, w) in self.diag.iter().enumerate() {
            for v in out.column_mut(i).iter_mut() {
                *v *= *w;
            }
        }
        out
    }
}

fn check_phase_len(real: &ChannelRealization, omega: &PhaseControl) -> Result<()> {
    let n_r = real.arrays.ris.n_elements();
    if omega.len() != n_r {
        return Err(Error::domain(format!(
            "phase control has {} entries but the RIS has {n_r} elements",
            omega.len()
        )));
    }
    Ok(())
}

/// Cascaded channel `H_RB Ω H_MR` (N_B × N_M).
pub fn cascaded_channel(real: &ChannelRealization, omega: &PhaseControl) -> Result<CMat> {
    check_phase_len(real, omega)?;
    Ok(&real.h_rb * omega.apply_left(&real.h_mr))
}

/// Effective channel `diag(ρ_RB) A_RISᴴ(θ_RB) Ω A_RIS(φ_MR) diag(ρ_MR)`
/// (L_RB × L_MR).
pub fn effective_channel(real: &ChannelRealization, omega: &PhaseControl) -> Result<CMat> {
    check_phase_len(real, omega)?;
    let n_r = real.arrays.ris.n_elements();
    let a_theta = steering_matrix(n_r, &real.params_rb.aod_sines());
    let a_phi = steering_matrix(n_r, &real.params_mr.aoa_sines());
    let core = a_theta.adjoint() * omega.apply_left(&a_phi);
    Ok(scale_rows_cols(&core, &real.params_rb.gains, &real.params_mr.gains))
}

/// The same effective channel evaluated entry by entry from the angle
/// differences: `G[p, l] = ρ_RB,p ρ_MR,l · ωᵀ α(sin φ_MR,l − sin θ_RB,p)`.
pub fn effective_channel_from_differences(
    real: &ChannelRealization,
    omega: &PhaseControl,
) -> Result<CMat> {
    check_phase_len(real, omega)?;
    let n_r = real.arrays.ris.n_elements();
    let theta = real.params_rb.aod_sines();
    let phi = real.params_mr.aoa_sines();
    let g = DMatrix::from_fn(theta.len(), phi.len(), |p, l| {
        let a = response_from_sine(n_r, phi[l] - theta[p]);
        let inner: Complex64 = omega
            .diagonal()
            .iter()
            .zip(a.iter())
            .map(|(w, x)| w * x)
            .sum();
        real.params_rb.gains[p] * real.params_mr.gains[l] * inner
    });
    Ok(g)
}

fn scale_rows_cols(m: &CMat, rows: &[Complex64], cols: &[Complex64]) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| rows[i] * m[(i, j)] * cols[j])
}

/// How the path-loss value enters the signal amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeConvention {
    /// Amplitude `sqrt(β)`: the received signal is attenuated by the loss.
    #[default]
    Attenuation,
    /// Amplitude `sqrt(1/β)`, the literal reading of the signal model.
    Inverse,
}

/// Distance-based path loss `β(d) = β0 (d0/d)^γ` with `β0 = (λ/(4π d0))²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLossModel {
    pub d0: f64,
    pub gamma: f64,
    pub fc: f64,
    #[serde(default)]
    pub convention: AmplitudeConvention,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            d0: 1.0,
            gamma: 3.0,
            fc: 28e9,
            convention: AmplitudeConvention::Attenuation,
        }
    }
}

impl PathLossModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.d0 > 0.0 && self.gamma > 0.0 && self.fc > 0.0) {
            return Err(Error::config(format!(
                "path loss needs d0, gamma, fc > 0 (got {}, {}, {})",
                self.d0, self.gamma, self.fc
            )));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.fc
    }

    pub fn beta0(&self) -> f64 {
        (self.wavelength() / (4.0 * PI * self.d0)).powi(2)
    }

    /// `β(d1)` for one hop, or `β(d1, d2) = β0 (d0/(d1 d2))^γ` for the
    /// cascaded link when `d2` is given.
    pub fn path_loss(&self, d1: f64, d2: Option<f64>) -> Result<f64> {
        if !(d1 > 0.0) || d2.is_some_and(|d| !(d > 0.0)) {
            return Err(Error::domain(format!(
                "distances must be positive (d1 = {d1}, d2 = {d2:?})"
            )));
        }
        let d = d1 * d2.unwrap_or(1.0);
        Ok(self.beta0() * (self.d0 / d).powf(self.gamma))
    }

    /// Signal amplitude factor for a loss value under the configured convention.
    pub fn amplitude(&self, beta: f64) -> f64 {
        match self.convention {
            AmplitudeConvention::Attenuation => beta.sqrt(),
            AmplitudeConvention::Inverse => (1.0 / beta).sqrt(),
        }
    }

    /// `(β1, β2)`: amplitudes of the MS → RIS hop and of the cascaded link.
    pub fn amplitude_factors(&self, d1: f64, d2: f64) -> Result<(f64, f64)> {
        let b1 = self.path_loss(d1, None)?;
        let b2 = self.path_loss(d1, Some(d2))?;
        Ok((self.amplitude(b1), self.amplitude(b2)))
    }
}

/// Planar positions of the three nodes in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry2D {
    pub bs: (f64, f64),
    pub ris: (f64, f64),
    pub ms: (f64, f64),
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

impl Geometry2D {
    /// BS at the origin, MS at `(d_t, 0)`, RIS at `(d_t − d_x, d_y)`.
    pub fn layout(d_t: f64, d_x: f64, d_y: f64) -> Result<Self> {
        let g = Self {
            bs: (0.0, 0.0),
            ris: (d_t - d_x, d_y),
            ms: (d_t, 0.0),
        };
        g.validate()?;
        Ok(g)
    }

    /// `d_T = 25, d_x = 10, d_y = 2` meters.
    pub fn paper_default() -> Self {
        Self::layout(25.0, 10.0, 2.0).expect("valid layout")
    }

    pub fn validate(&self) -> Result<()> {
        let (d1, d2) = (self.d1(), self.d2());
        let ok = |d: f64| d.is_finite() && d > 0.0;
        if !(ok(d1) && ok(d2)) {
            return Err(Error::config(format!(
                "node distances must be positive (d1 = {d1}, d2 = {d2})"
            )));
        }
        Ok(())
    }

    /// MS-RIS distance.
    pub fn d1(&self) -> f64 {
        dist(self.ms, self.ris)
    }

    /// RIS-BS distance.
    pub fn d2(&self) -> f64 {
        dist(self.ris, self.bs)
    }
}
