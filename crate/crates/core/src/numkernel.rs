//! Dense linear-algebra kernels with an explicit numerical-rank policy.
//!
//! Every pseudoinverse, projection, and null-space computation in the crate
//! goes through [`rank_factor`], so all downstream rank decisions inherit a
//! single tolerance rule: a singular value counts toward the rank when it
//! exceeds `rel_tol * sigma_max * max(rows, cols)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative tolerance for the numerical-rank cutoff.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Rank-revealing orthogonal factorization of a dense matrix.
///
/// `range_basis` spans the column space, `rowspace_basis` the row space;
/// both have orthonormal columns (`rank` of them each).
#[derive(Debug, Clone)]
pub struct RankFactorization {
    pub rank: usize,
    pub range_basis: DMatrix<f64>,
    pub rowspace_basis: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub tolerance_used: f64,
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    Ok(())
}

fn check_finite_vec(v: &DVector<f64>) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("vector has non-finite entries".into()));
    }
    Ok(())
}

/// Compute a rank-revealing factorization of `m` via SVD.
///
/// The numerical rank is the number of singular values above
/// `rel_tol * sigma_max * max(rows, cols)`.
pub fn rank_factor(m: &DMatrix<f64>, rel_tol: f64) -> Result<RankFactorization> {
    check_finite(m)?;
    if rel_tol <= 0.0 || !rel_tol.is_finite() {
        return Err(Error::Input(format!("rel_tol must be positive, got {rel_tol}")));
    }
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(RankFactorization {
            rank: 0,
            range_basis: DMatrix::zeros(rows, 0),
            rowspace_basis: DMatrix::zeros(cols, 0),
            singular_values: vec![],
            tolerance_used: 0.0,
        });
    }

    let (u, singular_values, v) = jacobi_svd(m)?;
    debug_assert_eq!(singular_values.len(), k);

    let sigma_max = singular_values[0];
    let threshold = rel_tol * sigma_max * rows.max(cols) as f64;
    let rank = singular_values.iter().take_while(|&&s| s > threshold).count();

    Ok(RankFactorization {
        rank,
        range_basis: u.columns(0, rank).into_owned(),
        rowspace_basis: v.columns(0, rank).into_owned(),
        singular_values,
        tolerance_used: threshold,
    })
}

/// Thin SVD `M = U diag(sigma) V^T` via cyclic one-sided Jacobi rotations,
/// with singular values sorted descending.
///
/// Jacobi is used instead of a bidiagonalization SVD because the designs this
/// crate analyzes routinely contain exactly duplicated or exactly dependent
/// columns, where rotation-based orthogonalization stays accurate to machine
/// precision. The matrices are small and dense, so the extra sweeps are cheap.
fn jacobi_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let transposed = m.nrows() < m.ncols();
    let mut b = if transposed { m.transpose() } else { m.clone() };
    let k = b.ncols();
    let mut v = DMatrix::<f64>::identity(k, k);

    const EPS: f64 = 1e-14;
    const MAX_SWEEPS: usize = 100;
    // Columns below this squared norm are numerically zero; rotating against
    // them only churns rounding noise.
    let floor = (f64::EPSILON * b.iter().fold(0.0f64, |m, x| m.max(x.abs())) * k as f64).powi(2);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha = b.column(p).norm_squared();
                let beta = b.column(q).norm_squared();
                let gamma = b.column(p).dot(&b.column(q));
                if gamma.abs() <= EPS * (alpha * beta).sqrt() || alpha <= floor || beta <= floor {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                // tan of the rotation angle; zeta = 0 (equal norms) rotates
                // by 45 degrees, which resolves exactly duplicated columns.
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..b.nrows() {
                    let bp = b[(i, p)];
                    let bq = b[(i, q)];
                    b[(i, p)] = c * bp - s * bq;
                    b[(i, q)] = s * bp + c * bq;
                }
                for i in 0..k {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Internal("jacobi svd failed to converge".into()));
    }

    let mut order: Vec<usize> = (0..k).collect();
    let norms: Vec<f64> = (0..k).map(|j| b.column(j).norm()).collect();
    order.sort_by(|&a, &c| norms[c].total_cmp(&norms[a]));

    let singular_values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut u = DMatrix::zeros(b.nrows(), k);
    let mut v_sorted = DMatrix::zeros(k, k);
    for (out, &j) in order.iter().enumerate() {
        if norms[j] > 0.0 {
            u.set_column(out, &(b.column(j) / norms[j]));
        }
        v_sorted.set_column(out, &v.column(j));
    }
    if transposed {
        Ok((v_sorted, singular_values, u))
    } else {
        Ok((u, singular_values, v_sorted))
    }
}

impl RankFactorization {
    /// Apply the pseudoinverse: `M^+ v = V_r diag(1/sigma) U_r^T v`.
    pub fn pinv_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut coeffs = self.range_basis.transpose() * v;
        for i in 0..self.rank {
            coeffs[i] /= self.singular_values[i];
        }
        &self.rowspace_basis * coeffs
    }

    /// Apply the pseudoinverse of the transpose: `(M^T)^+ w = U_r diag(1/sigma) V_r^T w`.
    pub fn pinv_t_apply(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut coeffs = self.rowspace_basis.transpose() * w;
        for i in 0..self.rank {
            coeffs[i] /= self.singular_values[i];
        }
        &self.range_basis * coeffs
    }

    /// Orthogonal projector onto the row space, as a dense cols x cols matrix.
    pub fn rowspace_projector(&self) -> DMatrix<f64> {
        &self.rowspace_basis * self.rowspace_basis.transpose()
    }

    /// Orthogonal projector onto the column space, as a dense rows x rows matrix.
    pub fn colspace_projector(&self) -> DMatrix<f64> {
        &self.range_basis * self.range_basis.transpose()
    }
}

/// Minimum-l2-norm solution of `min ||v - M x||_2`, i.e. `M^+ v`.
pub fn pinv_apply(m: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    check_finite_vec(v)?;
    if v.len() != m.nrows() {
        return Err(Error::Dimension(format!(
            "pinv_apply: vector length {} != matrix rows {}",
            v.len(),
            m.nrows()
        )));
    }
    Ok(rank_factor(m, DEFAULT_RANK_TOL)?.pinv_apply(v))
}

/// Orthogonal projection of `v` onto row(M).
pub fn project_rowspace(m: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    check_finite_vec(v)?;
    if v.len() != m.ncols() {
        return Err(Error::Dimension(format!(
            "project_rowspace: vector length {} != matrix cols {}",
            v.len(),
            m.ncols()
        )));
    }
    let f = rank_factor(m, DEFAULT_RANK_TOL)?;
    Ok(&f.rowspace_basis * (f.rowspace_basis.transpose() * v))
}

/// Orthonormal basis of null(M), returned as the columns of a cols x (cols - rank)
/// matrix. Zero columns when the null space is trivial.
pub fn nullspace_basis(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let f = rank_factor(m, DEFAULT_RANK_TOL)?;
    let n = m.ncols();
    let dim = n - f.rank;
    if dim == 0 {
        return Ok(DMatrix::zeros(n, 0));
    }
    // The thin SVD only carries min(m,n) right singular vectors, so complete
    // the complement of the row space by factoring I - V_r V_r^T.
    let complement = DMatrix::identity(n, n) - f.rowspace_projector();
    let cf = rank_factor(&complement, DEFAULT_RANK_TOL)?;
    // The projector has eigenvalues 0/1; its numerical rank is the null dimension.
    if cf.rank != dim {
        return Err(Error::Internal(format!(
            "null-space dimension mismatch: projector rank {} vs expected {}",
            cf.rank, dim
        )));
    }
    Ok(cf.range_basis)
}

/// Numerical rank at the default tolerance.
pub fn rank(m: &DMatrix<f64>) -> Result<usize> {
    Ok(rank_factor(m, DEFAULT_RANK_TOL)?.rank)
}
