//! ADMM for the Toeplitz-constrained semidefinite program.
//!
//! The structured variable `Θ = [[T_a, H], [Hᴴ, T_b]]` carries the objective
//! and the Toeplitz structure; a copy `Z` carries the cone constraint
//! `Z ⪰ 0`; `Z = Θ` is enforced with the multiplier `Λ`. One sweep is
//!
//! ```text
//! Θ ← argmin f(Θ) − ⟨Λ, Θ⟩ + ρ/2 ‖Z − Θ‖²      (closed form, see below)
//! Θ̃ ← α Θ + (1 − α) Z                           (over-relaxation)
//! Z ← Π_psd(Θ̃ − Λ/ρ)
//! Λ ← Λ + ρ (Z − Θ̃)
//! ```
//!
//! The `H` block solves `A H B + 2ρ H = C` with `A = LᴴL`, `B = RRᴴ`;
//! both are diagonalized once, so the solve is four small products and an
//! elementwise division. The Toeplitz blocks are diagonal averages.
//!
//! The problem is first normalized so that `‖L‖₂ = ‖R‖₂ = ‖Y‖_F = 1`,
//! which makes tolerances and the penalty scale-free.

use num_complex::Complex64;

use super::projection::{psd_project_hermitian, toeplitz_from_generator, toeplitz_generator};
use super::{
    AnmProblem, AnmSolution, IterationRecord, Penalty, SolverConfig, SolverDiagnostics,
};
use crate::error::{Error, Result};
use crate::linalg::{
    frobenius, frobenius_sq, hermitian_eigen, hermitian_part, min_eigenvalue, spectral_norm, CMat,
};

/// Smallest relative eigenvalue of `LᴴL` or `RRᴴ` treated as nonzero when
/// deciding whether an unregularized problem has a unique solution.
const RANK_TOL: f64 = 1e-10;

/// Iterations between penalty updates under residual balancing.
const ADAPT_EVERY: usize = 25;
/// Imbalance of the scaled residuals that triggers a penalty update.
const ADAPT_RATIO: f64 = 3.0;
const RHO_MIN: f64 = 1e-5;
const RHO_MAX: f64 = 1e5;

/// Solves the regularized atomic-norm problem. Hitting `max_iters` is not an
/// error: the best iterate is returned with `diagnostics.converged = false`.
pub fn solve_anm(problem: &AnmProblem, cfg: &SolverConfig) -> Result<AnmSolution> {
    problem.validate()?;
    cfg.validate()?;
    let (na, nb) = (problem.n_a(), problem.n_b());
    let s_l = spectral_norm(&problem.left_op);
    let s_r = spectral_norm(&problem.right_op);
    let s_y = frobenius(&problem.observed);

    if s_l == 0.0 || s_r == 0.0 {
        if problem.reg == 0.0 {
            return Err(Error::IllPosed("zero sensing operator without regularization".into()));
        }
        return Ok(zero_solution(problem, 0.5 * frobenius_sq(&problem.observed)));
    }

    let lp = &problem.left_op / Complex64::new(s_l, 0.0);
    let rp = &problem.right_op / Complex64::new(s_r, 0.0);
    let (da, ua) = hermitian_eigen(&(lp.adjoint() * &lp));
    let (db, ub) = hermitian_eigen(&(&rp * rp.adjoint()));
    if problem.reg == 0.0 && (da[0] < RANK_TOL || db[0] < RANK_TOL) {
        return Err(Error::IllPosed(
            "rank-deficient sensing operator without regularization".into(),
        ));
    }
    if s_y == 0.0 {
        return Ok(zero_solution(problem, 0.0));
    }

    let yp = &problem.observed / Complex64::new(s_y, 0.0);
    let regp = problem.reg / (s_l * s_r * s_y);
    let n = na + nb;
    let c0 = ua.adjoint() * (lp.adjoint() * &yp * rp.adjoint()) * &ub;
    let (ua_h, ub_h) = (ua.adjoint(), ub.adjoint());
    let alpha = cfg.relaxation;
    let wa = regp / (2.0 * na as f64);
    let wb = regp / (2.0 * nb as f64);

    let mut rho = match cfg.penalty {
        Penalty::Fixed(r) => r,
        Penalty::Auto => auto_penalty(regp),
    };
    let mut z = CMat::zeros(n, n);
    let mut lam = CMat::zeros(n, n);
    let mut theta = CMat::zeros(n, n);
    let mut trajectory = Vec::new();
    let mut best: Option<(f64, CMat)> = None;
    let (mut r_norm, mut s_norm) = (f64::INFINITY, f64::INFINITY);
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=cfg.max_iters {
        iterations = it;
        // H block: diagonalized Sylvester-type solve
        let mut c = z.view((0, na), (na, nb)) * Complex64::new(2.0 * rho, 0.0);
        c += lam.view((0, na), (na, nb)) * Complex64::new(2.0, 0.0);
        let mut ht = &ua_h * c * &ub + &c0;
        for j in 0..nb {
            for i in 0..na {
                ht[(i, j)] /= da[i] * db[j] + 2.0 * rho;
            }
        }
        let h = &ua * ht * &ub_h;

        // Toeplitz blocks: averages of Z + (Λ − w I)/ρ
        let inv_rho = Complex64::new(1.0 / rho, 0.0);
        let ma = z.view((0, 0), (na, na)) + lam.view((0, 0), (na, na)) * inv_rho;
        let mb = z.view((na, na), (nb, nb)) + lam.view((na, na), (nb, nb)) * inv_rho;
        let mut ga = toeplitz_generator(&ma);
        let mut gb = toeplitz_generator(&mb);
        ga[0].re -= wa / rho;
        gb[0].re -= wb / rho;

        theta.view_mut((0, 0), (na, na)).copy_from(&toeplitz_from_generator(&ga));
        theta.view_mut((na, na), (nb, nb)).copy_from(&toeplitz_from_generator(&gb));
        theta.view_mut((0, na), (na, nb)).copy_from(&h);
        theta.view_mut((na, 0), (nb, na)).copy_from(&h.adjoint());

        let relaxed = if alpha == 1.0 {
            theta.clone()
        } else {
            &theta * Complex64::new(alpha, 0.0) + &z * Complex64::new(1.0 - alpha, 0.0)
        };
        let target = hermitian_part(&(&relaxed - &lam * inv_rho));
        let (z_new, _) = psd_project_hermitian(target);
        let dlam = (&z_new - &relaxed) * Complex64::new(rho, 0.0);
        let dz = frobenius(&(&z_new - &z));
        lam += &dlam;
        z = z_new;

        r_norm = frobenius(&(&z - &theta));
        s_norm = rho * dz;
        let scale_n = n as f64;
        let eps_pri = scale_n * cfg.abs_tol + cfg.rel_tol * frobenius(&z).max(frobenius(&theta));
        let eps_dual = scale_n * cfg.abs_tol + cfg.rel_tol * frobenius(&lam);

        if cfg.trace_every > 0 && (it % cfg.trace_every == 0 || it == 1) {
            trajectory.push(IterationRecord {
                iteration: it,
                primal_residual: r_norm,
                dual_residual: s_norm,
                penalty: rho,
                merit: rho * dz * dz + frobenius_sq(&dlam) / rho,
            });
        }

        if r_norm <= eps_pri && s_norm <= eps_dual {
            converged = true;
            break;
        }
        let score = (r_norm / eps_pri).max(s_norm / eps_dual);
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, theta.clone()));
        }
        if cfg.adaptive_penalty && it % ADAPT_EVERY == 0 {
            // balance the tolerance-scaled residuals
            let ratio = ((r_norm / eps_pri) / (s_norm / eps_dual).max(f64::MIN_POSITIVE)).sqrt();
            if !(1.0 / ADAPT_RATIO..=ADAPT_RATIO).contains(&ratio) {
                rho = (rho * ratio.clamp(0.1, 10.0)).clamp(RHO_MIN, RHO_MAX);
            }
        }
    }

    let chosen = if converged {
        theta
    } else {
        best.map(|(_, t)| t).unwrap_or(theta)
    };
    let k = Complex64::new(s_y / (s_l * s_r), 0.0);
    let h_hat = chosen.view((0, na), (na, nb)) * k;
    let mut t_a = chosen.view((0, 0), (na, na)) * k;
    let mut t_b = chosen.view((na, na), (nb, nb)) * k;

    // restore semidefiniteness of the structured iterate exactly
    let block = crate::linalg::block2(&t_a, &h_hat, &h_hat.adjoint(), &t_b);
    let mut min_eig = min_eigenvalue(&block);
    let mut psd_shift = 0.0;
    if min_eig < 0.0 {
        let scale = block.iter().map(|z| z.norm()).fold(0.0, f64::max);
        psd_shift = -min_eig + 1e-13 * scale;
        for i in 0..na {
            t_a[(i, i)].re += psd_shift;
        }
        for i in 0..nb {
            t_b[(i, i)].re += psd_shift;
        }
        min_eig = min_eigenvalue(&crate::linalg::block2(&t_a, &h_hat, &h_hat.adjoint(), &t_b));
    }

    let objective = problem.objective(&h_hat, &t_b, &t_a);
    Ok(AnmSolution {
        h_hat,
        toeplitz_left: t_b,
        toeplitz_right: t_a,
        diagnostics: SolverDiagnostics {
            iterations,
            converged,
            primal_residual: r_norm,
            dual_residual: s_norm,
            objective,
            min_eigenvalue: min_eig,
            psd_shift,
            final_penalty: rho,
            trajectory,
        },
    })
}

/// Starting penalty for a normalized regularization weight.
fn auto_penalty(regp: f64) -> f64 {
    (10.0 * regp).clamp(1e-3, 0.1)
}

fn zero_solution(problem: &AnmProblem, objective: f64) -> AnmSolution {
    let (na, nb) = (problem.n_a(), problem.n_b());
    AnmSolution {
        h_hat: CMat::zeros(na, nb),
        toeplitz_left: CMat::zeros(nb, nb),
        toeplitz_right: CMat::zeros(na, na),
        diagnostics: SolverDiagnostics {
            iterations: 0,
            converged: true,
            primal_residual: 0.0,
            dual_residual: 0.0,
            objective,
            min_eigenvalue: 0.0,
            psd_shift: 0.0,
            final_penalty: 0.0,
            trajectory: Vec::new(),
        },
    }
}
