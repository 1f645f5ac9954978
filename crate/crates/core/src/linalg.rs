//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, LU, Dyn};

use crate::error::{Error, Result};

/// Condition threshold above which a system is treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `Aᵀ x = b` from the LU factors of `A` (`P A = L U`).
pub fn lu_solve_transpose(lu: &LU<f64, Dyn, Dyn>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let u = lu.u();
    let l = lu.l();
    let y = u.tr_solve_upper_triangular(b)?;
    let mut w = l.tr_solve_lower_triangular(&y)?;
    lu.p().inv_permute_rows(&mut w);
    Some(w)
}

/// Estimate of the 1-norm condition number `‖A‖₁ ‖A⁻¹‖₁` from an LU factorisation.
///
/// Hager's iteration with Higham's alternating-sign safeguard, the scheme behind
/// LAPACK's `dgecon`. Returns `f64::INFINITY` for an exactly singular factor or
/// when the solves overflow.
pub fn condition_estimate(a: &DMatrix<f64>, lu: &LU<f64, Dyn, Dyn>) -> f64 {
    let k = a.nrows();
    if k == 0 {
        return 1.0;
    }
    if !lu.is_invertible() {
        return f64::INFINITY;
    }
    let anorm = norm1(a);
    if anorm == 0.0 {
        return f64::INFINITY;
    }

    let mut x = DVector::from_element(k, 1.0 / k as f64);
    let mut est = 0.0_f64;
    let mut last_j = usize::MAX;
    for _ in 0..5 {
        let Some(y) = lu.solve(&x) else {
            return f64::INFINITY;
        };
        est = est.max(y.lp_norm(1));
        let sign = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let Some(z) = lu_solve_transpose(lu, &sign) else {
            return f64::INFINITY;
        };
        let j = z.iamax();
        if z[j].abs() <= z.dot(&x) || j == last_j {
            break;
        }
        last_j = j;
        x.fill(0.0);
        x[j] = 1.0;
    }

    let alt = DVector::from_fn(k, |i, _| {
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        s * (1.0 + i as f64 / (k.max(2) - 1) as f64)
    });
    if let Some(y) = lu.solve(&alt) {
        est = est.max(2.0 * y.lp_norm(1) / (3.0 * k as f64));
    }

    let cond = anorm * est;
    if cond.is_finite() {
        cond
    } else {
        f64::INFINITY
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn symmetric_min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().symmetric_eigenvalues().min()
}

/// Numerical rank: number of singular values above `rel_tol · σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> (usize, f64, f64) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0, 0.0, 0.0);
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smax == 0.0 {
        return (0, 0.0, 0.0);
    }
    let rank = sv.iter().filter(|&&s| s > rel_tol * smax).count();
    (rank, smax, smin)
}

pub(crate) fn ensure_finite_matrix(what: &'static str, m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn ensure_finite_vector(what: &'static str, v: &DVector<f64>) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
