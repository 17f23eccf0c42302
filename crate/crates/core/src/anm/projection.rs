//! Euclidean projections used by the splitting solver.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, hermitian_part, CMat};

/// Largest tolerated deviation from Hermitian symmetry for [`psd_project`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Nearest positive semidefinite matrix in Frobenius norm: eigenvalues below
/// zero are clipped. The input must be Hermitian to within
/// [`HERMITIAN_TOL`] (relative to its largest entry when that exceeds one).
pub fn psd_project(block: &CMat) -> Result<CMat> {
    if block.nrows() != block.ncols() {
        return Err(Error::domain("psd_project needs a square matrix"));
    }
    let scale = block.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let defect = hermitian_defect(block);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::domain(format!(
            "matrix deviates from Hermitian symmetry by {defect:.3e}"
        )));
    }
    Ok(psd_project_hermitian(hermitian_part(block)).0)
}

/// Projection of an exactly Hermitian matrix, also returning the smallest
/// eigenvalue of the input.
pub(crate) fn psd_project_hermitian(h: CMat) -> (CMat, f64) {
    let n = h.nrows();
    if n == 0 {
        return (h, 0.0);
    }
    let eig = h.clone().symmetric_eigen();
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| eig.eigenvalues[i] > 0.0);
    if neg.is_empty() {
        return (h, min_eig);
    }
    // rebuild from whichever eigenvalue set is smaller
    let (set, sign) = if pos.len() <= neg.len() { (&pos, 1.0) } else { (&neg, -1.0) };
    let mut w = CMat::zeros(n, set.len());
    for (c, &i) in set.iter().enumerate() {
        let s = Complex64::new((sign * eig.eigenvalues[i]).sqrt(), 0.0);
        for r in 0..n {
            w[(r, c)] = eig.eigenvectors[(r, i)] * s;
        }
    }
    let low_rank = &w * w.adjoint();
    let out = if sign > 0.0 { low_rank } else { h + low_rank };
    (hermitian_part(&out), min_eig)
}

/// Orthogonal projection onto the Hermitian Toeplitz matrices: the input is
/// symmetrized and every diagonal replaced by its mean.
pub fn toeplitz_average(block: &CMat) -> CMat {
    assert_eq!(block.nrows(), block.ncols(), "toeplitz_average needs a square matrix");
    let gen = toeplitz_generator(block);
    toeplitz_from_generator(&gen)
}

/// First column of the Hermitian Toeplitz projection of `block`:
/// `t[k]` is the mean of the k-th subdiagonal of `(block + blockᴴ)/2`.
pub fn toeplitz_generator(block: &CMat) -> Vec<Complex64> {
    let n = block.nrows();
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n - k {
                // subdiagonal entry (i + k, i) and the conjugate of its mirror
                acc += block[(i + k, i)] + block[(i, i + k)].conj();
            }
            let t = acc / (2.0 * (n - k) as f64);
            if k == 0 {
                Complex64::new(t.re, 0.0)
            } else {
                t
            }
        })
        .collect()
}

/// Hermitian Toeplitz matrix with first column `gen`.
pub fn toeplitz_from_generator(gen: &[Complex64]) -> CMat {
    let n = gen.len();
    CMat::from_fn(n, n, |i, j| {
        if i >= j {
            gen[i - j]
        } else {
            gen[j - i].conj()
        }
    })
}

/// True when `m` is Hermitian Toeplitz to within `tol` entrywise.
pub fn is_hermitian_toeplitz(m: &CMat, tol: f64) -> bool {
    let n = m.nrows();
    if m.ncols() != n {
        return false;
    }
    for i in 0..n {
        for j in 0..n {
            let expect = if i >= j { m[(i - j, 0)] } else { m[(j - i, 0)].conj() };
            if (m[(i, j)] - expect).norm() > tol {
                return false;
            }
        }
    }
    true
}
