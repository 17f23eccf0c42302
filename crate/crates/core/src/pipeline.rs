//! The two-stage estimator and the link design built on its output.
//!
//! Stage 1 denoises the pilots received by the active RIS elements and
//! recovers the MS → RIS channel. Stage 2 rebuilds what the RIS reflected
//! during training from the stage-1 estimate and recovers the RIS → BS
//! channel from the BS observation. The estimates then drive the RIS phase
//! design and the single-stream beamformers.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::anm::{regularizer, solve_anm, AnmProblem, SolverConfig, SolverDiagnostics};
use crate::channel::{
    response_from_frequency, response_from_sine, sine_from_frequency, PathParams, PhaseControl,
};
use crate::error::{Error, Result};
use crate::linalg::{frobenius, spectral_norm, vec, CMat, CVec, ZERO};
use crate::recovery::{ls_gains, root_music, CascadedParams, GainEstimate};
use crate::signal::{BsObservation, RisObservation, TrainingConfig};

/// Regularization and solver settings shared by both stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Multiplier on `σ_eff sqrt(N_a N_b log(N_a N_b))`, where `σ_eff` is
    /// the noise level seen through the sensing operators.
    pub reg_scale: f64,
    /// Lower bound on the regularization weight relative to
    /// `‖L‖₂ ‖R‖₂ ‖Y‖_F`, which keeps noiseless problems well posed.
    pub reg_floor: f64,
    pub solver: SolverConfig,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            reg_scale: 0.3,
            reg_floor: 1e-3,
            solver: SolverConfig::default(),
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.reg_scale >= 0.0 && self.reg_floor >= 0.0) {
            return Err(Error::config("reg_scale and reg_floor must be nonnegative"));
        }
        self.solver.validate()
    }

    /// Regularization weight for `Y ≈ L H R` with noise variance `sigma2`
    /// per observed entry.
    pub fn regularization(&self, problem_y: &CMat, left: &CMat, right: &CMat, sigma2: f64) -> Result<f64> {
        let op = spectral_norm(left) * spectral_norm(right);
        let sigma_eff = sigma2.sqrt() * op;
        let tau = regularizer(sigma_eff, left.ncols(), right.nrows(), self.reg_scale)?;
        Ok(tau.max(self.reg_floor * op * frobenius(problem_y)))
    }
}

/// Estimated parameters of one hop together with the solver report.
#[derive(Debug, Clone, PartialEq)]
pub struct HopEstimate {
    pub params: PathParams,
    /// Transmit-side frequencies in [0, 1), paired with `aoa_freqs`.
    pub aod_freqs: Vec<f64>,
    /// Receive-side frequencies in [0, 1).
    pub aoa_freqs: Vec<f64>,
    pub gains: GainEstimate,
    pub anm: SolverDiagnostics,
    /// The observation was identically zero; gains are zero and angles are
    /// placeholders.
    pub degenerate: bool,
}

/// Output of stage 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOneResult {
    pub hop: HopEstimate,
    /// `Ĥ_MR` (N_R × N_M) rebuilt from the estimated parameters.
    pub h_hat_mr: CMat,
}

impl StageOneResult {
    pub fn params_hat_mr(&self) -> &PathParams {
        &self.hop.params
    }
}

/// Output of stage 2.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTwoResult {
    pub hop: HopEstimate,
    /// `Ĥ_RB` (N_B × N_R).
    pub h_hat_rb: CMat,
    /// `Û = [Ω_1 Ĥ_MR X, …, Ω_K Ĥ_MR X]`.
    pub u_hat: CMat,
    pub cascaded: CascadedParams,
}

impl StageTwoResult {
    pub fn params_hat_rb(&self) -> &PathParams {
        &self.hop.params
    }
}

/// Keeps sines strictly inside (−1, 1) so they map to valid angles.
fn angle_from_frequency(f: f64) -> f64 {
    let s = sine_from_frequency(f).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
    s.asin()
}

/// Channel `Σ ρ_l α(f_l) α(g_l)ᴴ` from frequencies.
pub fn channel_from_frequencies(
    n_rx: usize,
    n_tx: usize,
    aoa_freqs: &[f64],
    aod_freqs: &[f64],
    gains: &[Complex64],
) -> CMat {
    let mut h = CMat::zeros(n_rx, n_tx);
    for ((&f, &g), &rho) in aoa_freqs.iter().zip(aod_freqs).zip(gains) {
        let a = response_from_frequency(n_rx, f);
        let b = response_from_frequency(n_tx, g);
        h += a * b.adjoint() * rho;
    }
    h
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Runs ANM, root-MUSIC on both Toeplitz blocks, and least squares over
/// every pairing of transmit and receive frequencies, keeping the pairing
/// with the smallest residual.
fn estimate_hop(
    y: &CMat,
    selection: &CMat,
    scale: f64,
    right: &CMat,
    sigma2: f64,
    n_paths: usize,
    est: &EstimatorConfig,
) -> Result<HopEstimate> {
    let left = selection * Complex64::new(scale, 0.0);
    let (n_a, n_b) = (left.ncols(), right.nrows());
    if frobenius(y) == 0.0 {
        return Ok(HopEstimate {
            params: PathParams {
                aod: vec![0.0; n_paths],
                aoa: vec![0.0; n_paths],
                gains: vec![ZERO; n_paths],
            },
            aod_freqs: vec![0.0; n_paths],
            aoa_freqs: vec![0.0; n_paths],
            gains: GainEstimate {
                gains: vec![ZERO; n_paths],
                residual: 0.0,
                ridge_fallback: false,
            },
            anm: SolverDiagnostics {
                iterations: 0,
                converged: true,
                primal_residual: 0.0,
                dual_residual: 0.0,
                objective: 0.0,
                min_eigenvalue: 0.0,
                psd_shift: 0.0,
                final_penalty: 0.0,
                trajectory: Vec::new(),
            },
            degenerate: true,
        });
    }
    let reg = est.regularization(y, &left, right, sigma2)?;
    let problem = AnmProblem::new(y.clone(), left, right.clone(), reg)?;
    let sol = solve_anm(&problem, &est.solver)?;
    let aoa = root_music(&sol.toeplitz_right, n_paths)?;
    let aod = root_music(&sol.toeplitz_left, n_paths)?;
    debug_assert_eq!((aoa.source_dim, aod.source_dim), (n_a, n_b));

    let y_vec: CVec = vec(y);
    let mut best: Option<(Vec<f64>, GainEstimate)> = None;
    for perm in permutations(n_paths) {
        let aod_perm: Vec<f64> = perm.iter().map(|&i| aod.freqs[i]).collect();
        let g = ls_gains(&y_vec, selection, right, &aod_perm, &aoa.freqs, scale)?;
        if best.as_ref().is_none_or(|(_, b)| g.residual < b.residual) {
            best = Some((aod_perm, g));
        }
    }
    let (aod_freqs, gains) = best.expect("at least one pairing");
    let params = PathParams {
        aod: aod_freqs.iter().map(|&f| angle_from_frequency(f)).collect(),
        aoa: aoa.freqs.iter().map(|&f| angle_from_frequency(f)).collect(),
        gains: gains.gains.clone(),
    };
    Ok(HopEstimate {
        params,
        aod_freqs,
        aoa_freqs: aoa.freqs,
        gains,
        anm: sol.diagnostics,
        degenerate: false,
    })
}

/// Stage 1: ANM on `(Y_H, β1 W_H, X)`, root-MUSIC for `θ̂_MR` (MS side) and
/// `φ̂_MR` (RIS side), least squares for `ρ̂_MR`.
pub fn estimate_stage1(
    obs: &RisObservation,
    cfg: &TrainingConfig,
    sigma2: f64,
    beta1: f64,
    n_paths: usize,
    est: &EstimatorConfig,
) -> Result<StageOneResult> {
    let hop = estimate_hop(&obs.y_h, &obs.selection, beta1, &cfg.pilot, sigma2, n_paths, est)?;
    let h_hat_mr = channel_from_frequencies(
        obs.selection.ncols(),
        cfg.pilot.nrows(),
        &hop.aoa_freqs,
        &hop.aod_freqs,
        &hop.params.gains,
    );
    Ok(StageOneResult { hop, h_hat_mr })
}

/// Stage 2: `Û` from the training phases and `Ĥ_MR`, ANM on
/// `(Y, β2 W_Bᴴ, Û)`, root-MUSIC for `θ̂_RB` (RIS side) and `φ̂_RB` (BS
/// side), least squares for `ρ̂_RB`, then the cascaded parameters.
pub fn estimate_stage2(
    obs: &BsObservation,
    stage1: &StageOneResult,
    cfg: &TrainingConfig,
    sigma2: f64,
    beta2: f64,
    n_paths: usize,
    est: &EstimatorConfig,
) -> Result<StageTwoResult> {
    let u_hat = cfg.reflected_pilots(&stage1.h_hat_mr);
    let combiner_h = cfg.bs_combiner.adjoint();
    let hop = estimate_hop(&obs.y, &combiner_h, beta2, &u_hat, sigma2, n_paths, est)?;
    let h_hat_rb = channel_from_frequencies(
        cfg.bs_combiner.nrows(),
        u_hat.nrows(),
        &hop.aoa_freqs,
        &hop.aod_freqs,
        &hop.params.gains,
    );
    let cascaded = CascadedParams::from_frequencies(
        &stage1.hop.aoa_freqs,
        &hop.aod_freqs,
        &stage1.hop.params.gains,
        &hop.params.gains,
    )?;
    Ok(StageTwoResult {
        hop,
        h_hat_rb,
        u_hat,
        cascaded,
    })
}

/// Options for the data-transmission phase design.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseDesign {
    /// Sweeps of coordinate-wise phase updates on `‖G‖_F²` after the
    /// closed-form alignment (0 disables refinement).
    pub refine_sweeps: usize,
    /// Uniform phase quantizer with this many bits.
    pub quantize_bits: Option<u32>,
}

/// `ω = conj(α(δ_i*))` aligned to the strongest cascaded path.
pub fn design_phase_matrix(cascaded: &CascadedParams, n_r: usize) -> Result<PhaseControl> {
    design_phase_matrix_with(cascaded, n_r, &PhaseDesign::default())
}

/// Index of the largest `|ρ_i|`.
pub fn strongest_path(cascaded: &CascadedParams) -> Option<usize> {
    cascaded
        .rho_prod
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i)
}

/// Phase design with optional refinement and quantization.
pub fn design_phase_matrix_with(
    cascaded: &CascadedParams,
    n_r: usize,
    opts: &PhaseDesign,
) -> Result<PhaseControl> {
    let best = strongest_path(cascaded)
        .ok_or_else(|| Error::domain("phase design needs at least one cascaded path"))?;
    let align = response_from_sine(n_r, cascaded.delta_vec[best].sin());
    let mut omega: Vec<Complex64> = align.iter().map(|z| z.conj()).collect();
    if opts.refine_sweeps > 0 {
        refine_phases(cascaded, &mut omega, opts.refine_sweeps);
    }
    if let Some(bits) = opts.quantize_bits {
        omega = quantize_phases(&omega, bits);
    }
    PhaseControl::from_diagonal(omega)
}

/// `‖G(ω)‖_F² = Σ_i |ρ_i|² |α(δ_i)ᵀ ω|²`.
pub fn effective_gain(cascaded: &CascadedParams, omega: &[Complex64]) -> f64 {
    cascaded
        .delta_vec
        .iter()
        .zip(&cascaded.rho_prod)
        .map(|(d, rho)| {
            let a = response_from_sine(omega.len(), d.sin());
            let inner: Complex64 = a.iter().zip(omega).map(|(x, w)| x * w).sum();
            rho.norm_sqr() * inner.norm_sqr()
        })
        .sum()
}

fn refine_phases(cascaded: &CascadedParams, omega: &mut [Complex64], sweeps: usize) {
    let n = omega.len();
    let responses: Vec<CVec> = cascaded
        .delta_vec
        .iter()
        .map(|d| response_from_sine(n, d.sin()))
        .collect();
    let weights: Vec<f64> = cascaded.rho_prod.iter().map(|r| r.norm_sqr()).collect();
    let mut sums: Vec<Complex64> = responses
        .iter()
        .map(|a| a.iter().zip(omega.iter()).map(|(x, w)| x * w).sum())
        .collect();
    for _ in 0..sweeps {
        for k in 0..n {
            // maximize Σ_i w_i |s_i − a_ik ω_k + a_ik ω|² over unit ω
            let mut g = ZERO;
            for (i, a) in responses.iter().enumerate() {
                let rest = sums[i] - a[k] * omega[k];
                g += weights[i] * rest.conj() * a[k];
            }
            if g.norm() == 0.0 {
                continue;
            }
            let new = (g / g.norm()).conj();
            for (i, a) in responses.iter().enumerate() {
                sums[i] += a[k] * (new - omega[k]);
            }
            omega[k] = new;
        }
    }
}

/// Rounds each phase to the nearest multiple of `2π / 2^bits`; zero entries
/// stay zero.
pub fn quantize_phases(omega: &[Complex64], bits: u32) -> Vec<Complex64> {
    let levels = 2f64.powi(bits as i32);
    let step = 2.0 * PI / levels;
    omega
        .iter()
        .map(|z| {
            if z.norm() == 0.0 {
                ZERO
            } else {
                Complex64::from_polar(1.0, (z.arg() / step).round() * step)
            }
        })
        .collect()
}

/// Transmit and receive beamformers for single-stream transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformers {
    pub w_bs: CVec,
    pub f_ms: CVec,
    /// The channel was zero and the vectors are arbitrary unit vectors.
    pub degenerate: bool,
}

/// Leading singular vectors of `Ĥ_RB Ω Ĥ_MR`.
pub fn design_beamformers(h_rb: &CMat, omega: &PhaseControl, h_mr: &CMat) -> Result<Beamformers> {
    if h_rb.ncols() != omega.len() || h_mr.nrows() != omega.len() {
        return Err(Error::domain("beamformer design dimensions do not match"));
    }
    let h = h_rb * omega.apply_left(h_mr);
    let (n_b, n_m) = h.shape();
    if frobenius(&h) == 0.0 {
        let mut w = CVec::zeros(n_b);
        let mut f = CVec::zeros(n_m);
        w[0] = Complex64::new(1.0, 0.0);
        f[0] = Complex64::new(1.0, 0.0);
        return Ok(Beamformers {
            w_bs: w,
            f_ms: f,
            degenerate: true,
        });
    }
    let svd = h.svd(true, true);
    let idx = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty");
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let w = u.column(idx).into_owned();
    let f = v_t.row(idx).adjoint();
    Ok(Beamformers {
        w_bs: w,
        f_ms: f,
        degenerate: false,
    })
}

/// Data-transmission configuration derived from channel estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkDesign {
    pub omega_data: PhaseControl,
    pub f_ms: CVec,
    pub w_bs: CVec,
}

impl LinkDesign {
    /// Phase design from the cascaded estimate, then beamformers from the
    /// estimated channels under that phase matrix.
    pub fn from_estimates(
        cascaded: &CascadedParams,
        h_hat_rb: &CMat,
        h_hat_mr: &CMat,
        phase: &PhaseDesign,
    ) -> Result<Self> {
        let omega = design_phase_matrix_with(cascaded, h_hat_mr.nrows(), phase)?;
        let bf = design_beamformers(h_hat_rb, &omega, h_hat_mr)?;
        Ok(Self {
            omega_data: omega,
            f_ms: bf.f_ms,
            w_bs: bf.w_bs,
        })
    }

    /// Same phase matrix, beamformers from other (e.g. true) channels.
    pub fn with_channels(&self, h_rb: &CMat, h_mr: &CMat) -> Result<Self> {
        let bf = design_beamformers(h_rb, &self.omega_data, h_mr)?;
        Ok(Self {
            omega_data: self.omega_data.clone(),
            f_ms: bf.f_ms,
            w_bs: bf.w_bs,
        })
    }
}

/// `log2(1 + p_t β2² |wᴴ H_RB Ω H_MR f|² / σ²)` on the given (true) channels.
pub fn spectral_efficiency(
    h_rb: &CMat,
    h_mr: &CMat,
    design: &LinkDesign,
    p_t: f64,
    sigma2: f64,
    beta2: f64,
) -> Result<f64> {
    if !(p_t > 0.0) {
        return Err(Error::domain(format!("transmit power must be positive, got {p_t}")));
    }
    let h = h_rb * design.omega_data.apply_left(h_mr);
    let g = (design.w_bs.adjoint() * h * &design.f_ms)[(0, 0)].norm_sqr();
    if g == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 + p_t * beta2 * beta2 * g / sigma2).log2())
}
