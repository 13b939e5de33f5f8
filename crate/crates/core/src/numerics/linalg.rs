use nalgebra::{DMatrix, DVector};

use crate::error::{Result, ZadrError};

/// Condition number above which inverses fall back to a pseudo-inverse.
pub const MAX_CONDITION: f64 = 1e12;

/// Result of inverting a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricInverse {
    pub inverse: DMatrix<f64>,
    /// True when eigenvalues were truncated.
    pub pseudo: bool,
    pub condition: f64,
}

/// Inverts a symmetric matrix through its eigen-decomposition. When the
/// matrix is not positive definite or its condition number exceeds
/// [`MAX_CONDITION`], eigenvalues below `max|λ| / MAX_CONDITION` in
/// magnitude are dropped and the Moore–Penrose inverse is returned.
pub fn symmetric_inverse(m: &DMatrix<f64>) -> Result<SymmetricInverse> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(ZadrError::DimensionMismatch("matrix is not square".into()));
    }
    if n == 0 {
        return Ok(SymmetricInverse { inverse: DMatrix::zeros(0, 0), pseudo: false, condition: 1.0 });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(ZadrError::NonFiniteObjective);
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let max_abs = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min_val = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    let condition = if min_val > 0.0 { max_abs / min_val } else { f64::INFINITY };
    let pseudo = !(condition <= MAX_CONDITION);
    let cutoff = max_abs / MAX_CONDITION;
    let inv_vals = DVector::from_iterator(
        n,
        eig.eigenvalues.iter().map(|&v| {
            if pseudo && v.abs() <= cutoff {
                0.0
            } else {
                1.0 / v
            }
        }),
    );
    let q = &eig.eigenvectors;
    let mut inverse = q * DMatrix::from_diagonal(&inv_vals) * q.transpose();
    symmetrize(&mut inverse);
    Ok(SymmetricInverse { inverse, pseudo, condition })
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
}

pub fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, k, |i, j| rows[i][j])
}

/// Ordinary least squares `(X'X)^{-1} X'Z`. Returns the `(p+1) x d`
/// coefficients and `(X'X)^{-1}`.
pub fn least_squares(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if x.nrows() != z.nrows() {
        return Err(ZadrError::DimensionMismatch(format!(
            "design has {} rows, response has {}",
            x.nrows(),
            z.nrows()
        )));
    }
    let xtx = x.transpose() * x;
    let svals = xtx.clone().singular_values();
    let smax = svals.max();
    let smin = svals.min();
    if !(smin > smax * 1e-13) {
        return Err(ZadrError::SingularDesign);
    }
    let chol = xtx.cholesky().ok_or(ZadrError::SingularDesign)?;
    let xtx_inv = chol.inverse();
    let coef = chol.solve(&(x.transpose() * z));
    Ok((coef, xtx_inv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_well_conditioned_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let inv = symmetric_inverse(&m).unwrap();
        assert!(!inv.pseudo);
        let id = &m * &inv.inverse;
        assert!((id - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn singular_matrix_uses_pseudo_inverse() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let inv = symmetric_inverse(&m).unwrap();
        assert!(inv.pseudo);
        // pinv of [[1,1],[1,1]] is [[.25,.25],[.25,.25]]
        for v in inv.inverse.iter() {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn least_squares_recovers_noiseless_coefficients() {
        let x = DMatrix::from_fn(6, 2, |i, j| if j == 0 { 1.0 } else { i as f64 * 0.5 });
        let b0 = DMatrix::from_row_slice(2, 2, &[0.3, -1.0, 2.0, 0.25]);
        let z = &x * &b0;
        let (b, _) = least_squares(&x, &z).unwrap();
        assert!((b - b0).norm() < 1e-10);
    }

    #[test]
    fn rank_deficient_design() {
        let x = DMatrix::from_fn(4, 2, |_, _| 1.0);
        let z = DMatrix::from_element(4, 1, 0.5);
        assert!(matches!(least_squares(&x, &z), Err(ZadrError::SingularDesign)));
    }
}
