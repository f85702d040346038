//! Small dense helpers on top of `nalgebra`.

use nalgebra::{DMatrix, SymmetricEigen};

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Singular values, descending.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// `(A + A^T) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `<A, B> = tr(A^T B)`.
pub fn frob_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Largest `α` with `X + α D ⪰ 0` for `X ≻ 0` (infinite if `D ⪰ 0`).
///
/// Returns `None` if `X` is not numerically positive definite.
pub fn max_step_psd(x: &DMatrix<f64>, d: &DMatrix<f64>) -> Option<f64> {
    let chol = x.clone().cholesky()?;
    let l = chol.l();
    // L^{-1} D L^{-T}
    let linv_d = l.solve_lower_triangular(d)?;
    let mut m = l.solve_lower_triangular(&linv_d.transpose())?;
    symmetrize(&mut m);
    let lmin = sym_eigenvalues(&m).first().copied().unwrap_or(0.0);
    if lmin >= 0.0 {
        Some(f64::INFINITY)
    } else {
        Some(-1.0 / lmin)
    }
}
