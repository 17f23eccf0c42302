//! Regularized atomic-norm denoising of a bilinearly observed low-rank matrix.
//!
//! Given `Y ≈ L H R` with `H = A_a(f) diag(c) A_bᴴ(g)` a sum of a few
//! array-response outer products, the estimator solves
//!
//! ```text
//! minimize   reg/(2 N_b) tr(T_b) + reg/(2 N_a) tr(T_a) + ½‖L H R − Y‖²_F
//! subject to [[T_a, H], [Hᴴ, T_b]] ⪰ 0,   T_a, T_b Hermitian Toeplitz
//! ```
//!
//! where `H` is `N_a × N_b`. The column space of `H` (receive side) is
//! captured by `T_a`, its row space (transmit side) by `T_b`; root-MUSIC on
//! each block returns the corresponding spatial frequencies.

mod admm;
pub mod projection;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{block2, CMat};

pub use admm::solve_anm;
pub use projection::{psd_project, toeplitz_average, toeplitz_from_generator, toeplitz_generator};

/// One denoising instance `Y ≈ left_op · H · right_op`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnmProblem {
    pub observed: CMat,
    pub left_op: CMat,
    pub right_op: CMat,
    pub reg: f64,
}

impl AnmProblem {
    pub fn new(observed: CMat, left_op: CMat, right_op: CMat, reg: f64) -> Result<Self> {
        let p = Self {
            observed,
            left_op,
            right_op,
            reg,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (yr, yc) = self.observed.shape();
        if self.left_op.nrows() != yr || self.right_op.ncols() != yc {
            return Err(Error::domain(format!(
                "operators {:?} and {:?} do not fit an observation of shape {:?}",
                self.left_op.shape(),
                self.right_op.shape(),
                (yr, yc)
            )));
        }
        if self.n_a() < 2 || self.n_b() < 2 {
            return Err(Error::domain("the unknown needs at least two rows and two columns"));
        }
        if !(self.reg >= 0.0 && self.reg.is_finite()) {
            return Err(Error::domain(format!(
                "regularization weight must be finite and nonnegative, got {}",
                self.reg
            )));
        }
        Ok(())
    }

    /// Rows of the unknown (receive side).
    pub fn n_a(&self) -> usize {
        self.left_op.ncols()
    }

    /// Columns of the unknown (transmit side).
    pub fn n_b(&self) -> usize {
        self.right_op.nrows()
    }

    /// Objective value of a candidate `(H, T_b, T_a)`.
    pub fn objective(&self, h: &CMat, toeplitz_left: &CMat, toeplitz_right: &CMat) -> f64 {
        let fit = &self.left_op * h * &self.right_op - &self.observed;
        let data = 0.5 * fit.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let tb = toeplitz_left.trace().re / (2.0 * self.n_b() as f64);
        let ta = toeplitz_right.trace().re / (2.0 * self.n_a() as f64);
        self.reg * (ta + tb) + data
    }
}

/// Initial ADMM penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    /// Derived from the normalized regularization weight.
    Auto,
    /// A fixed starting value on the normalized problem.
    Fixed(f64),
}

/// Iteration controls of the splitting solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub penalty: Penalty,
    /// Residual balancing: every 25 iterations the penalty is multiplied by
    /// the square root of the ratio of the tolerance-scaled primal and dual
    /// residuals when that ratio leaves [1/3, 3].
    pub adaptive_penalty: bool,
    /// Over-relaxation factor in (0, 2); 1 is plain ADMM.
    pub relaxation: f64,
    /// Store residuals every this many iterations in the diagnostics (0 = off).
    pub trace_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 3000,
            abs_tol: 1e-7,
            rel_tol: 1e-5,
            penalty: Penalty::Auto,
            adaptive_penalty: true,
            relaxation: 1.6,
            trace_every: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::config("solver tolerances must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be positive"));
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(Error::config("relaxation must lie in (0, 2)"));
        }
        if let Penalty::Fixed(r) = self.penalty {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::config("penalty must be positive"));
            }
        }
        Ok(())
    }
}

/// Residuals at one recorded iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub penalty: f64,
    /// `ρ‖Z⁺ − Z‖² + ‖Λ⁺ − Λ‖²/ρ` on the normalized problem; non-increasing
    /// under a fixed penalty without over-relaxation.
    pub merit: f64,
}

/// Convergence report of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective: f64,
    /// Smallest eigenvalue of the returned block matrix.
    pub min_eigenvalue: f64,
    /// Amount added to both Toeplitz diagonals to restore semidefiniteness.
    pub psd_shift: f64,
    pub final_penalty: f64,
    pub trajectory: Vec<IterationRecord>,
}

impl SolverDiagnostics {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Denoised estimate and its Toeplitz certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct AnmSolution {
    /// `Ĥ` (N_a × N_b).
    pub h_hat: CMat,
    /// Transmit-side Toeplitz block (N_b × N_b).
    pub toeplitz_left: CMat,
    /// Receive-side Toeplitz block (N_a × N_a).
    pub toeplitz_right: CMat,
    pub diagnostics: SolverDiagnostics,
}

impl AnmSolution {
    /// `[[T_left, Ĥᴴ], [Ĥ, T_right]]`, positive semidefinite by construction.
    pub fn block_matrix(&self) -> CMat {
        block2(
            &self.toeplitz_left,
            &self.h_hat.adjoint(),
            &self.h_hat,
            &self.toeplitz_right,
        )
    }
}

/// `scale · σ · sqrt(n_a n_b log(n_a n_b))`.
pub fn regularizer(sigma: f64, n_a: usize, n_b: usize, scale: f64) -> Result<f64> {
    let n = (n_a * n_b) as f64;
    if n_a * n_b < 2 {
        return Err(Error::domain(format!(
            "regularizer needs n_a * n_b >= 2, got {}",
            n_a * n_b
        )));
    }
    if !(sigma >= 0.0) {
        return Err(Error::domain(format!("noise level must be nonnegative, got {sigma}")));
    }
    Ok(scale * sigma * (n * n.ln()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regularizer_values() {
        assert_eq!(regularizer(0.0, 32, 16, 1.0).unwrap(), 0.0);
        let r = regularizer(1.0, 32, 16, 1.0).unwrap();
        assert!((r - (512.0f64 * 512f64.ln()).sqrt()).abs() < 1e-12);
        assert!(matches!(regularizer(1.0, 1, 1, 1.0), Err(Error::Domain(_))));
        assert!(matches!(regularizer(-1.0, 4, 4, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn problem_shape_checks() {
        let y = CMat::zeros(3, 4);
        assert!(AnmProblem::new(y.clone(), CMat::zeros(3, 5), CMat::zeros(6, 4), 1.0).is_ok());
        assert!(AnmProblem::new(y.clone(), CMat::zeros(2, 5), CMat::zeros(6, 4), 1.0).is_err());
        assert!(AnmProblem::new(y, CMat::zeros(3, 5), CMat::zeros(6, 4), -1.0).is_err());
    }

    #[test]
    fn solver_config_checks() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            relaxation: 2.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
