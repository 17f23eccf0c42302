//! Parameter extraction from denoised estimates: root-MUSIC frequencies,
//! least-squares path gains, estimate-to-truth matching, and the cascaded
//! quantities (angle differences and gain products) of the two-hop link.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{circular_distance, response_from_frequency, sine_from_frequency};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMat, CVec, ZERO};

/// Spatial frequencies in [0, 1) recovered from an N × N Toeplitz block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    /// Sorted ascending.
    pub freqs: Vec<f64>,
    pub source_dim: usize,
    pub n_sources: usize,
}

impl FrequencyEstimate {
    /// Sines of the angles, in [−1, 1).
    pub fn sines(&self) -> Vec<f64> {
        self.freqs.iter().map(|&f| sine_from_frequency(f)).collect()
    }

    /// Angles in radians.
    pub fn angles(&self) -> Vec<f64> {
        self.sines().into_iter().map(f64::asin).collect()
    }
}

/// Relative eigenvalue gap below which the signal and noise subspaces are
/// considered inseparable.
const SUBSPACE_GAP_TOL: f64 = 1e-9;
/// Roots farther than this outside the unit circle are never selected.
const DISK_TOL: f64 = 1e-6;
/// Candidate roots whose frequency lies this close to an already selected
/// root are its conjugate-reciprocal partner and are skipped.
const PARTNER_TOL: f64 = 1e-5;

/// Root-MUSIC on a Hermitian (Toeplitz) matrix with `n_sources` components.
///
/// The noise-subspace projector `P = E Eᴴ` defines
/// `Q(z) = Σ_k c_k z^k` with `c_k` the sum of the k-th superdiagonal of `P`,
/// which vanishes at `z = exp(j2πf)` for every source frequency `f`. Roots
/// inside or on the unit circle (to 1e-6) are ranked by `|1 − |z||`, ties
/// going to the larger magnitude, and the first `n_sources` distinct
/// frequencies are returned.
pub fn root_music(toeplitz: &CMat, n_sources: usize) -> Result<FrequencyEstimate> {
    let n = toeplitz.nrows();
    if toeplitz.ncols() != n {
        return Err(Error::domain("root_music needs a square matrix"));
    }
    if n_sources == 0 || n_sources >= n {
        return Err(Error::domain(format!(
            "root_music needs 0 < L < N, got L = {n_sources}, N = {n}"
        )));
    }
    let (vals, vecs) = hermitian_eigen(toeplitz);
    let top = vals[n - 1].abs().max(vals[0].abs());
    let gap = vals[n - n_sources] - vals[n - n_sources - 1];
    if !(top > 0.0) || !(gap > SUBSPACE_GAP_TOL * top) {
        return Err(Error::Estimation(format!(
            "no separation between signal and noise subspaces (gap {gap:.3e}, scale {top:.3e})"
        )));
    }
    let e = vecs.columns(0, n - n_sources);
    let p = e * e.adjoint();

    // ascending powers of z^(N-1) Q(z): coefficient i is c_{i-(N-1)}
    let mut coeffs = vec![ZERO; 2 * n - 1];
    for row in 0..n {
        for col in 0..n {
            coeffs[col + n - 1 - row] += p[(row, col)];
        }
    }
    let roots = polynomial_roots(&coeffs)?;

    let mut candidates: Vec<Complex64> = roots
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() <= 1.0 + DISK_TOL)
        .map(|(i, &z)| refine_double_root(&coeffs, &roots, i, z))
        .collect();
    candidates.sort_by(|a, b| {
        let da = (1.0 - a.norm()).abs();
        let db = (1.0 - b.norm()).abs();
        da.total_cmp(&db).then(b.norm().total_cmp(&a.norm()))
    });
    let mut freqs: Vec<f64> = Vec::with_capacity(n_sources);
    for z in candidates {
        let f = (z.arg() / (2.0 * PI)).rem_euclid(1.0);
        let f = if f >= 1.0 { 0.0 } else { f };
        if freqs.iter().all(|&g| circular_distance(f, g, 1.0) > PARTNER_TOL) {
            freqs.push(f);
            if freqs.len() == n_sources {
                break;
            }
        }
    }
    if freqs.len() < n_sources {
        return Err(Error::Estimation(format!(
            "found {} of {n_sources} root candidates",
            freqs.len()
        )));
    }
    freqs.sort_by(f64::total_cmp);
    Ok(FrequencyEstimate {
        freqs,
        source_dim: n,
        n_sources,
    })
}

/// Roots of `Σ_i coeffs[i] z^i` from the eigenvalues of the companion
/// matrix, each refined by a few Newton steps.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Estimation("zero polynomial".into()));
    }
    // drop negligible leading and trailing coefficients
    let mut hi = coeffs.len() - 1;
    while hi > 0 && coeffs[hi].norm() <= 1e-14 * scale {
        hi -= 1;
    }
    let mut lo = 0;
    while lo < hi && coeffs[lo].norm() <= 1e-14 * scale {
        lo += 1;
    }
    let c = &coeffs[lo..=hi];
    let deg = c.len() - 1;
    let mut roots = vec![ZERO; lo];
    if deg == 0 {
        return Ok(roots);
    }
    let lead = c[deg];
    let mut comp = CMat::zeros(deg, deg);
    for j in 0..deg {
        comp[(0, j)] = -c[deg - 1 - j] / lead;
    }
    for i in 1..deg {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    let schur = Schur::try_new(comp, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Estimation("companion eigenvalue iteration did not converge".into()))?;
    let eig = schur
        .eigenvalues()
        .ok_or_else(|| Error::Estimation("companion Schur form is not triangular".into()))?;
    for z0 in eig.iter() {
        roots.push(newton_polish(c, *z0));
    }
    Ok(roots)
}

fn eval_with_derivative(c: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = ZERO;
    let mut dp = ZERO;
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

fn newton_polish(c: &[Complex64], mut z: Complex64) -> Complex64 {
    let (mut p, _) = eval_with_derivative(c, z);
    for _ in 0..8 {
        let (_, dp) = eval_with_derivative(c, z);
        if dp.norm() == 0.0 {
            break;
        }
        let cand = z - p / dp;
        let (pc, _) = eval_with_derivative(c, cand);
        if pc.norm() < p.norm() {
            z = cand;
            p = pc;
        } else {
            break;
        }
    }
    z
}

/// Roots closer than this to another root are treated as one double root.
const DOUBLE_ROOT_TOL: f64 = 1e-5;

/// A source on the unit circle makes `Q` vanish to second order, and the
/// companion eigenvalues then split the root by about `sqrt(eps)`. For such a
/// pair the root is re-located as the nearby zero of `Q'`, which is simple.
fn refine_double_root(
    coeffs: &[Complex64],
    roots: &[Complex64],
    index: usize,
    z: Complex64,
) -> Complex64 {
    let partner = roots
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != index)
        .map(|(_, w)| *w)
        .min_by(|a, b| (a - z).norm().total_cmp(&(b - z).norm()));
    let Some(w) = partner else { return z };
    if (w - z).norm() > DOUBLE_ROOT_TOL {
        return z;
    }
    let deriv: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * i as f64)
        .collect();
    let start = (z + w) * 0.5;
    let refined = newton_polish(&deriv, start);
    if (refined - start).norm() < DOUBLE_ROOT_TOL {
        refined
    } else {
        z
    }
}

/// Least-squares path gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainEstimate {
    pub gains: Vec<Complex64>,
    /// Euclidean norm of the fit residual.
    pub residual: f64,
    /// Set when the regressor was numerically rank-deficient and a ridge
    /// term of 1e-10 (relative to its largest squared singular value) was
    /// added.
    pub ridge_fallback: bool,
}

/// Singular-value ratio below which the gain regressor counts as singular.
const REGRESSOR_COND_TOL: f64 = 1e-8;
const RIDGE: f64 = 1e-10;

/// Gains `ρ` minimizing `‖y − β (Rᵀ ⊗ L)(A*(θ) ⊙ A(φ)) ρ‖` where
/// `y = vec(Y)` stacks the columns of the `L.rows × R.cols` observation.
///
/// Column `l` of the regressor is evaluated as `β vec((L a_φl)(Rᴴ a_θl)ᴴ)`,
/// which equals the Khatri-Rao form without building the Kronecker product.
/// `aod_freqs` parameterize the transmit side (columns of `H`),
/// `aoa_freqs` the receive side (rows of `H`).
pub fn ls_gains(
    observed: &CVec,
    left_op: &CMat,
    right_op: &CMat,
    aod_freqs: &[f64],
    aoa_freqs: &[f64],
    scale: f64,
) -> Result<GainEstimate> {
    let l = aod_freqs.len();
    if l == 0 || aoa_freqs.len() != l {
        return Err(Error::domain(format!(
            "frequency lists must be nonempty and of equal length ({} vs {})",
            aod_freqs.len(),
            aoa_freqs.len()
        )));
    }
    let (rows, cols) = (left_op.nrows(), right_op.ncols());
    if observed.len() != rows * cols {
        return Err(Error::domain(format!(
            "observation has {} entries, operators imply {rows} x {cols}",
            observed.len()
        )));
    }
    let phi = gain_regressor(left_op, right_op, aod_freqs, aoa_freqs, scale);
    let (gains, ridge_fallback) = least_squares(&phi, observed);
    let fit = &phi * CVec::from_column_slice(&gains);
    let residual = (observed - fit).norm();
    Ok(GainEstimate {
        gains,
        residual,
        ridge_fallback,
    })
}

/// The `rows·cols × L` regressor of [`ls_gains`].
pub fn gain_regressor(
    left_op: &CMat,
    right_op: &CMat,
    aod_freqs: &[f64],
    aoa_freqs: &[f64],
    scale: f64,
) -> CMat {
    let (rows, cols) = (left_op.nrows(), right_op.ncols());
    let n_a = left_op.ncols();
    let n_b = right_op.nrows();
    let right_h = right_op.adjoint();
    let mut phi = CMat::zeros(rows * cols, aod_freqs.len());
    for (k, (&g, &f)) in aod_freqs.iter().zip(aoa_freqs).enumerate() {
        let u = left_op * response_from_frequency(n_a, f);
        let v = &right_h * response_from_frequency(n_b, g);
        for c in 0..cols {
            let vc = v[c].conj() * scale;
            for r in 0..rows {
                phi[(c * rows + r, k)] = u[r] * vc;
            }
        }
    }
    phi
}

/// Minimum-norm least squares via the SVD, falling back to ridge
/// regularization for a numerically singular regressor.
fn least_squares(phi: &CMat, y: &CVec) -> (Vec<Complex64>, bool) {
    let l = phi.ncols();
    let gram = phi.adjoint() * phi;
    let rhs = phi.adjoint() * y;
    let (vals, _) = hermitian_eigen(&gram);
    let top = vals[l - 1];
    if top <= 0.0 {
        return (vec![ZERO; l], false);
    }
    if vals[0] > (REGRESSOR_COND_TOL * REGRESSOR_COND_TOL) * top {
        let svd = phi.clone().svd(true, true);
        let sol = svd
            .solve(&CMat::from_column_slice(y.len(), 1, y.as_slice()), 0.0)
            .expect("both singular-vector sets were computed");
        return (sol.column(0).iter().copied().collect(), false);
    }
    let mut reg = gram;
    for i in 0..l {
        reg[(i, i)] += Complex64::new(RIDGE * top, 0.0);
    }
    let sol = reg
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .unwrap_or_else(|| CVec::zeros(l));
    (sol.iter().copied().collect(), true)
}

/// Assignment `perm` minimizing `Σ_i d(est[perm[i]], reference[i])` with
/// circular distance on [0, 1); `perm[i]` is the estimate matched to
/// reference entry `i`.
pub fn pair_and_order(est: &FrequencyEstimate, reference: &FrequencyEstimate) -> Vec<usize> {
    pair_values(&est.freqs, &reference.freqs, 1.0)
}

/// [`pair_and_order`] on raw values with a configurable period.
pub fn pair_values(est: &[f64], reference: &[f64], period: f64) -> Vec<usize> {
    assert_eq!(est.len(), reference.len(), "pairing needs equal lengths");
    let n = est.len();
    let cost = DMatrix::from_fn(n, n, |i, j| circular_distance(reference[i], est[j], period));
    hungarian(&cost)
}

/// Minimum-cost perfect assignment for a square cost matrix (Kuhn-Munkres
/// with potentials, O(n³)); `result[row] = column`.
pub fn hungarian(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(cost.ncols(), n, "hungarian needs a square matrix");
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0; n];
    for j in 1..=n {
        result[owner[j] - 1] = j - 1;
    }
    result
}

/// Angle differences and gain products of the cascaded link, indexed so
/// that entry `i = l + p·L_MR` pairs MS-RIS path `l` with RIS-BS path `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadedParams {
    /// `Δ[l, p] = asin(sin φ_MR,l − sin θ_RB,p)` (L_MR × L_RB).
    pub delta: DMatrix<f64>,
    /// Column-major vectorization of `delta`.
    pub delta_vec: Vec<f64>,
    /// `ρ_RB ⊗ ρ_MR`.
    pub rho_prod: Vec<Complex64>,
}

impl CascadedParams {
    pub fn new(
        phi_mr: &[f64],
        theta_rb: &[f64],
        rho_mr: &[Complex64],
        rho_rb: &[Complex64],
    ) -> Result<Self> {
        if phi_mr.len() != rho_mr.len() || theta_rb.len() != rho_rb.len() {
            return Err(Error::domain("angle and gain lists differ in length"));
        }
        let delta = angle_differences(phi_mr, theta_rb)?;
        Ok(Self {
            delta_vec: delta.as_slice().to_vec(),
            delta,
            rho_prod: gain_products(rho_rb, rho_mr)?,
        })
    }

    /// Same parameters from spatial frequencies. The sine difference is
    /// wrapped into [−1, 1), which leaves `α(δ)` unchanged because the array
    /// response is 2-periodic in the sine; estimated angles whose raw
    /// difference falls outside the asin domain stay usable.
    pub fn from_frequencies(
        phi_mr_freqs: &[f64],
        theta_rb_freqs: &[f64],
        rho_mr: &[Complex64],
        rho_rb: &[Complex64],
    ) -> Result<Self> {
        if phi_mr_freqs.len() != rho_mr.len() || theta_rb_freqs.len() != rho_rb.len() {
            return Err(Error::domain("frequency and gain lists differ in length"));
        }
        let delta = DMatrix::from_fn(phi_mr_freqs.len(), theta_rb_freqs.len(), |l, p| {
            sine_from_frequency(phi_mr_freqs[l] - theta_rb_freqs[p]).asin()
        });
        Ok(Self {
            delta_vec: delta.as_slice().to_vec(),
            delta,
            rho_prod: gain_products(rho_rb, rho_mr)?,
        })
    }

    pub fn len(&self) -> usize {
        self.rho_prod.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho_prod.is_empty()
    }

    /// Effective channel `G[p, l] = ρ_i ωᵀ α(δ_i)` with `i = l + p·L_MR`.
    pub fn effective_channel(&self, omega: &[Complex64]) -> CMat {
        let (l_mr, l_rb) = self.delta.shape();
        CMat::from_fn(l_rb, l_mr, |p, l| {
            let i = l + p * l_mr;
            let s = self.delta_vec[i].sin();
            let inner: Complex64 = omega
                .iter()
                .enumerate()
                .map(|(k, w)| w * Complex64::from_polar(1.0, PI * k as f64 * s))
                .sum();
            self.rho_prod[i] * inner
        })
    }
}

const ASIN_SLACK: f64 = 1e-12;

/// `Δ[l, p] = asin(sin φ_l − sin θ_p)`. Arguments within 1e-12 beyond ±1 are
/// clamped; larger excursions are a domain error.
pub fn angle_differences(phi_mr: &[f64], theta_rb: &[f64]) -> Result<DMatrix<f64>> {
    for &a in phi_mr.iter().chain(theta_rb) {
        if !(a.abs() < PI / 2.0) {
            return Err(Error::domain(format!("angle {a} lies outside (-pi/2, pi/2)")));
        }
    }
    let mut out = DMatrix::zeros(phi_mr.len(), theta_rb.len());
    for (l, &phi) in phi_mr.iter().enumerate() {
        for (p, &theta) in theta_rb.iter().enumerate() {
            let arg = phi.sin() - theta.sin();
            if arg.abs() > 1.0 + ASIN_SLACK {
                return Err(Error::domain(format!(
                    "sin(phi) - sin(theta) = {arg} lies outside [-1, 1]"
                )));
            }
            out[(l, p)] = arg.clamp(-1.0, 1.0).asin();
        }
    }
    Ok(out)
}

/// Kronecker product `ρ_RB ⊗ ρ_MR`.
pub fn gain_products(rho_rb: &[Complex64], rho_mr: &[Complex64]) -> Result<Vec<Complex64>> {
    if rho_rb.is_empty() || rho_mr.is_empty() {
        return Err(Error::domain("gain lists must be nonempty"));
    }
    Ok(rho_rb
        .iter()
        .flat_map(|b| rho_mr.iter().map(move |m| b * m))
        .collect())
}
