//! Optimality diagnostics: lasso objective, KKT verification, equicorrelation
//! extraction, and general-position testing.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel;

/// Default relative tolerance for equicorrelation membership.
pub const DEFAULT_EQUI_TOL: f64 = 1e-9;

/// Maximum p accepted by the exhaustive general-position check.
pub const DEFAULT_GP_MAX_P: usize = 12;

/// A lasso problem: design matrix, response, and tuning parameter.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub lambda: f64,
}

impl ProblemInstance {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, lambda: f64) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::Input("design matrix must be nonempty".into()));
        }
        if y.len() != x.nrows() {
            return Err(Error::Dimension(format!(
                "response length {} != design rows {}",
                y.len(),
                x.nrows()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("instance has non-finite values".into()));
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::Input(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        Ok(ProblemInstance { x, y, lambda })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// The smallest lambda at which zero is optimal: `||X^T y||_inf`.
    pub fn lambda_max(&self) -> f64 {
        (self.x.transpose() * &self.y).amax()
    }

    pub fn with_lambda(&self, lambda: f64) -> ProblemInstance {
        ProblemInstance { x: self.x.clone(), y: self.y.clone(), lambda }
    }
}

/// Equicorrelation set and signs at a given lambda.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquiState {
    /// Strictly increasing variable indices (0-based).
    pub members: Vec<usize>,
    /// One sign (+1/-1) per member.
    pub signs: Vec<i8>,
    pub lambda: f64,
}

impl EquiState {
    pub fn empty(lambda: f64) -> Self {
        EquiState { members: vec![], signs: vec![], lambda }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn sign_of(&self, i: usize) -> Option<i8> {
        self.members.binary_search(&i).ok().map(|k| self.signs[k])
    }

    /// Insert a member, keeping indices sorted. Returns its position.
    pub fn insert(&mut self, i: usize, sign: i8) -> usize {
        let pos = self.members.binary_search(&i).unwrap_err();
        self.members.insert(pos, i);
        self.signs.insert(pos, sign);
        pos
    }

    /// Remove a member by variable index.
    pub fn remove(&mut self, i: usize) {
        if let Ok(pos) = self.members.binary_search(&i) {
            self.members.remove(pos);
            self.signs.remove(pos);
        }
    }

    /// Columns of `x` restricted to the members, in member order.
    pub fn submatrix(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        if self.members.is_empty() {
            return DMatrix::zeros(x.nrows(), 0);
        }
        DMatrix::from_columns(&self.members.iter().map(|&i| x.column(i)).collect::<Vec<_>>())
    }

    /// Sign vector as f64.
    pub fn sign_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.signs.len(), self.signs.iter().map(|&s| s as f64))
    }

    /// Scatter a member-indexed vector into a length-p vector, zeros elsewhere.
    pub fn embed(&self, values: &DVector<f64>, p: usize) -> DVector<f64> {
        let mut out = DVector::zeros(p);
        for (k, &i) in self.members.iter().enumerate() {
            out[i] = values[k];
        }
        out
    }
}

/// Graded KKT diagnostics for a candidate solution.
#[derive(Debug, Clone, Serialize)]
pub struct KktReport {
    pub stationarity_gap: f64,
    pub sign_violation: f64,
    pub equi_state: EquiState,
    pub passed: bool,
    pub tol: f64,
}

/// The lasso objective `0.5 ||y - X beta||^2 + lambda ||beta||_1`.
pub fn lasso_objective(inst: &ProblemInstance, beta: &DVector<f64>) -> Result<f64> {
    if beta.len() != inst.p() {
        return Err(Error::Dimension(format!(
            "beta length {} != p {}",
            beta.len(),
            inst.p()
        )));
    }
    let r = &inst.y - &inst.x * beta;
    Ok(0.5 * r.norm_squared() + inst.lambda * beta.iter().map(|b| b.abs()).sum::<f64>())
}

/// Verify the KKT conditions for `beta` at `inst.lambda > 0`.
///
/// The stationarity gap is the worst deviation of the correlations from
/// lambda: for active coordinates `| |X_i^T r| - lambda |`, and for all
/// coordinates the positive part `(|X_i^T r| - lambda)_+`. The sign violation
/// is the worst `|sign(beta_i) - X_i^T r / lambda|` over active coordinates.
pub fn check_kkt(inst: &ProblemInstance, beta: &DVector<f64>, tol: f64) -> Result<KktReport> {
    if inst.lambda == 0.0 {
        return Err(Error::Unsupported(
            "check_kkt requires lambda > 0; at lambda = 0 verify the least-squares normal equations instead".into(),
        ));
    }
    if beta.len() != inst.p() {
        return Err(Error::Dimension(format!(
            "beta length {} != p {}",
            beta.len(),
            inst.p()
        )));
    }
    let lambda = inst.lambda;
    let residual = &inst.y - &inst.x * beta;
    let corr = inst.x.transpose() * &residual;

    let mut stationarity_gap: f64 = 0.0;
    let mut sign_violation: f64 = 0.0;
    // Coefficients at rounding-noise level count as zero for the sign test;
    // a coordinate crossing zero at a knot otherwise scores a full sign flip.
    let zero_tol = 1e-10 * beta.amax().max(1.0);
    for i in 0..inst.p() {
        let a = corr[i].abs();
        if beta[i].abs() > zero_tol {
            stationarity_gap = stationarity_gap.max((a - lambda).abs());
            // Absolute, in correlation units: an active coordinate needs
            // corr_i = lambda * sign(beta_i). Dividing by lambda instead
            // would turn rounding noise into large gaps as lambda -> 0.
            sign_violation = sign_violation.max((corr[i] - lambda * beta[i].signum()).abs());
        }
        stationarity_gap = stationarity_gap.max(a - lambda);
    }

    let fit = &inst.x * beta;
    let equi_state = equicorrelation(inst, &fit, DEFAULT_EQUI_TOL)?;

    Ok(KktReport {
        stationarity_gap,
        sign_violation,
        equi_state,
        passed: stationarity_gap <= tol && sign_violation <= tol,
        tol,
    })
}

/// Extract the equicorrelation set and signs from the (unique) fit.
///
/// Membership uses a relative threshold `tol_eq * max(lambda, ||X^T(y-fit)||_inf)`.
pub fn equicorrelation(inst: &ProblemInstance, fit: &DVector<f64>, tol_eq: f64) -> Result<EquiState> {
    if inst.lambda <= 0.0 {
        return Err(Error::Unsupported("equicorrelation is defined for lambda > 0".into()));
    }
    if fit.len() != inst.n() {
        return Err(Error::Dimension(format!(
            "fit length {} != n {}",
            fit.len(),
            inst.n()
        )));
    }
    let corr = inst.x.transpose() * (&inst.y - fit);
    let scale = inst.lambda.max(corr.amax());
    if scale == 0.0 && fit.amax() > 0.0 {
        return Err(Error::Internal(
            "zero residual correlation with nonzero fit at lambda > 0".into(),
        ));
    }
    let threshold = tol_eq * scale;
    let mut members = vec![];
    let mut signs = vec![];
    for i in 0..inst.p() {
        if (corr[i].abs() - inst.lambda).abs() <= threshold {
            members.push(i);
            signs.push(if corr[i] >= 0.0 { 1 } else { -1 });
        }
    }
    Ok(EquiState { members, signs, lambda: inst.lambda })
}

/// Witness of a general-position violation: a signed subset whose affine span
/// contains another signed column.
#[derive(Debug, Clone, Serialize)]
pub struct GpWitness {
    pub subset: Vec<usize>,
    pub subset_signs: Vec<i8>,
    pub contained: usize,
    pub contained_sign: i8,
}

/// Exhaustively test whether the columns of `x` are in general position: no
/// k+1 signed columns (k < n) have an affine span containing another signed
/// column. Returns a witness on failure.
pub fn general_position_check(x: &DMatrix<f64>, max_p: usize) -> Result<(bool, Option<GpWitness>)> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    let (n, p) = x.shape();
    if p > max_p {
        return Err(Error::Capability(format!(
            "general_position_check is exhaustive; p = {p} exceeds the configured bound {max_p}"
        )));
    }
    let norm_scale = x.amax().max(1.0);

    // Subsets of size m = k+1 <= n, signs on the subset (first sign fixed +1 by
    // the +/- symmetry of the definition), and a signed outside column.
    for mask in 1u32..(1u32 << p) {
        let m = mask.count_ones() as usize;
        if m > n {
            continue;
        }
        let subset: Vec<usize> = (0..p).filter(|i| mask >> i & 1 == 1).collect();
        for sign_bits in 0..(1u32 << (m - 1)) {
            let mut signs = vec![1i8; m];
            for j in 1..m {
                if sign_bits >> (j - 1) & 1 == 1 {
                    signs[j] = -1;
                }
            }
            // Affine system: [sigma_j X_j ; 1] a = [tau X_i ; 1].
            let mut lhs = DMatrix::zeros(n + 1, m);
            for (col, (&j, &sg)) in subset.iter().zip(&signs).enumerate() {
                for row in 0..n {
                    lhs[(row, col)] = sg as f64 * x[(row, j)];
                }
                lhs[(n, col)] = 1.0;
            }
            let f = numkernel::rank_factor(&lhs, numkernel::DEFAULT_RANK_TOL)?;
            for i in 0..p {
                if mask >> i & 1 == 1 {
                    continue;
                }
                for tau in [1i8, -1] {
                    let mut rhs = DVector::zeros(n + 1);
                    for row in 0..n {
                        rhs[row] = tau as f64 * x[(row, i)];
                    }
                    rhs[n] = 1.0;
                    // Membership in the affine span: zero least-squares residual.
                    let sol = f.pinv_apply(&rhs);
                    let res = (&lhs * sol - &rhs).amax();
                    if res <= 1e-8 * norm_scale {
                        return Ok((
                            false,
                            Some(GpWitness {
                                subset,
                                subset_signs: signs,
                                contained: i,
                                contained_sign: tau,
                            }),
                        ));
                    }
                }
            }
        }
    }
    Ok((true, None))
}
