//! Dense symmetric linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues below `-NEG_EIG_TOL * λ_max` mark a matrix as not PSD.
pub const NEG_EIG_TOL: f64 = 1e-10;
/// Largest clipped negative spectral mass, relative to the trace, that a repair may remove.
pub const REPAIR_MASS_TOL: f64 = 1e-6;

/// Outcome of a PSD check.
#[derive(Clone, Debug)]
pub struct PsdCheck {
    /// The (possibly repaired) matrix.
    pub matrix: DMatrix<f64>,
    pub repaired: bool,
    pub clipped_mass: f64,
}

/// Check that `m` is positive semidefinite. A fast Cholesky attempt settles
/// the strictly positive definite case; otherwise negative eigenvalues are
/// clipped when their mass is small enough.
pub fn ensure_psd(m: DMatrix<f64>) -> Result<PsdCheck> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Model("covariance matrix is not square".into()));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Model("covariance matrix has non-finite entries".into()));
    }
    if n == 0 || m.clone().cholesky().is_some() {
        return Ok(PsdCheck { matrix: m, repaired: false, clipped_mass: 0.0 });
    }
    let eig = SymmetricEigen::new(m.clone());
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if lmin >= -NEG_EIG_TOL * lmax.max(f64::MIN_POSITIVE) {
        return Ok(PsdCheck { matrix: m, repaired: false, clipped_mass: 0.0 });
    }
    let trace: f64 = m.diagonal().iter().sum();
    let clipped: f64 = eig.eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
    if clipped > REPAIR_MASS_TOL * trace.abs() {
        return Err(Error::Model(format!(
            "covariance is not positive semidefinite: smallest eigenvalue {lmin:e}, \
             clipped mass {clipped:e} exceeds {REPAIR_MASS_TOL:e} of the trace"
        )));
    }
    let clipped_vals = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    let mut fixed = v * DMatrix::from_diagonal(&clipped_vals) * v.transpose();
    symmetrize(&mut fixed);
    Ok(PsdCheck { matrix: fixed, repaired: true, clipped_mass: clipped })
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let a = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = a;
            m[(j, i)] = a;
        }
    }
}

/// Pivoted Cholesky factor `L` (n × n, trailing columns zero past the rank)
/// with `L Lᵀ = m` up to the dropped Schur complement, whose diagonal is
/// below `tol * max diag`. Returns the factor and the numerical rank.
pub fn pivoted_cholesky(m: &DMatrix<f64>, tol: f64) -> Result<(DMatrix<f64>, usize)> {
    let n = m.nrows();
    let max_diag = (0..n).map(|i| m[(i, i)]).fold(0.0, f64::max);
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut resid: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    let mut used = vec![false; n];
    let mut rank = 0;
    while rank < n {
        let mut piv = usize::MAX;
        let mut best = f64::NEG_INFINITY;
        for i in 0..n {
            if !used[i] && resid[i] > best {
                best = resid[i];
                piv = i;
            }
        }
        if best <= tol * max_diag {
            break;
        }
        used[piv] = true;
        let d = best.sqrt();
        l[(piv, rank)] = d;
        for i in 0..n {
            if used[i] {
                continue;
            }
            let mut s = m[(i, piv)];
            for k in 0..rank {
                s -= l[(i, k)] * l[(piv, k)];
            }
            let v = s / d;
            l[(i, rank)] = v;
            resid[i] -= v * v;
        }
        rank += 1;
    }
    let worst = (0..n).filter(|&i| !used[i]).map(|i| resid[i]).fold(0.0, f64::min);
    if worst < -1e-8 * max_diag.max(1.0) {
        return Err(Error::Numerical(format!(
            "pivoted Cholesky met a negative residual pivot {worst:e}; matrix is not PSD"
        )));
    }
    Ok((l, rank))
}

/// Inverse square root of a symmetric positive definite matrix via its
/// eigendecomposition. Fails when an eigenvalue is not positive.
pub fn inv_sqrt_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if let Some(bad) = eig.eigenvalues.iter().find(|&&l| l <= 1e-14 * lmax.max(f64::MIN_POSITIVE)) {
        return Err(Error::Numerical(format!(
            "block covariance is singular (eigenvalue {bad:e}); supply a ridge"
        )));
    }
    let d = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&d) * v.transpose())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Submatrix `m[rows, cols]`.
pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_factor() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (l, r) = pivoted_cholesky(&m, 1e-12).unwrap();
        assert_eq!(r, 1);
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]));
    }

    #[test]
    fn factor_reproduces_matrix() {
        let a = DMatrix::from_fn(6, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let m = &a * a.transpose();
        let (l, r) = pivoted_cholesky(&m, 1e-12).unwrap();
        assert_eq!(r, 4);
        assert!((&l * l.transpose() - &m).amax() < 1e-10);
    }

    #[test]
    fn repair_and_reject() {
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(0, 0)] = -1e-9;
        let fixed = ensure_psd(m).unwrap();
        assert!(fixed.repaired);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(ensure_psd(bad).is_err());
    }

    #[test]
    fn inverse_square_root() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let w = inv_sqrt_spd(&m).unwrap();
        assert!((&w * &m * &w - DMatrix::<f64>::identity(2, 2)).amax() < 1e-13);
    }
}
