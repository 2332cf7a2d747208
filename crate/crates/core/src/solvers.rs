//! Independent reference solvers: coordinate-descent lasso, elastic net, and
//! proximal-gradient l1-penalized minimization for smooth strictly convex
//! losses (logistic, Poisson).
//!
//! These are the oracles the path and polytope code is validated against, so
//! convergence is always certified by optimality-condition gaps rather than
//! step-size heuristics.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kkt::ProblemInstance;

/// Linear predictors beyond this magnitude abort the Poisson solve.
const POISSON_PREDICTOR_CAP: f64 = 30.0;

/// Loss function for the generalized l1-penalized problem `min f(X beta) + lambda ||beta||_1`.
#[derive(Debug, Clone)]
pub struct LossSpec {
    pub kind: LossKind,
    pub response: DVector<f64>,
    /// Skip the typical response-range validation (paper-style "typically but
    /// not necessarily" ranges).
    pub allow_any_response: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Squared,
    Logistic,
    Poisson,
}

impl LossSpec {
    pub fn new(kind: LossKind, response: DVector<f64>) -> Result<Self> {
        let spec = LossSpec { kind, response, allow_any_response: false };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.response.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("response has non-finite values".into()));
        }
        if self.allow_any_response {
            return Ok(());
        }
        match self.kind {
            LossKind::Squared => {}
            LossKind::Logistic => {
                if self.response.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                    return Err(Error::Input(
                        "logistic responses must lie in [0,1] (set allow_any_response to override)".into(),
                    ));
                }
            }
            LossKind::Poisson => {
                if self.response.iter().any(|&v| v < 0.0) {
                    return Err(Error::Input(
                        "poisson responses must be >= 0 (set allow_any_response to override)".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// f(u).
    pub fn value(&self, u: &DVector<f64>) -> Result<f64> {
        match self.kind {
            LossKind::Squared => Ok(0.5 * (&self.response - u).norm_squared()),
            LossKind::Logistic => Ok(u
                .iter()
                .zip(self.response.iter())
                .map(|(&ui, &yi)| {
                    // log(1 + e^u) computed stably for either sign of u.
                    let softplus = if ui > 0.0 { ui + (-ui).exp().ln_1p() } else { ui.exp().ln_1p() };
                    -yi * ui + softplus
                })
                .sum()),
            LossKind::Poisson => {
                if u.amax() > POISSON_PREDICTOR_CAP {
                    return Err(Error::NonConvergence(format!(
                        "poisson linear predictor exceeded the cap {POISSON_PREDICTOR_CAP}; iterates diverged"
                    )));
                }
                Ok(u
                    .iter()
                    .zip(self.response.iter())
                    .map(|(&ui, &yi)| -yi * ui + ui.exp())
                    .sum())
            }
        }
    }

    /// gradient of f at u.
    pub fn gradient(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        match self.kind {
            LossKind::Squared => Ok(u - &self.response),
            LossKind::Logistic => Ok(DVector::from_iterator(
                u.len(),
                u.iter().zip(self.response.iter()).map(|(&ui, &yi)| {
                    let sigma = if ui >= 0.0 {
                        1.0 / (1.0 + (-ui).exp())
                    } else {
                        let e = ui.exp();
                        e / (1.0 + e)
                    };
                    sigma - yi
                }),
            )),
            LossKind::Poisson => {
                if u.amax() > POISSON_PREDICTOR_CAP {
                    return Err(Error::NonConvergence(format!(
                        "poisson linear predictor exceeded the cap {POISSON_PREDICTOR_CAP}; iterates diverged"
                    )));
                }
                Ok(DVector::from_iterator(
                    u.len(),
                    u.iter().zip(self.response.iter()).map(|(&ui, &yi)| ui.exp() - yi),
                ))
            }
        }
    }
}

/// Solution plus the optimality gap it was certified at.
#[derive(Debug, Clone, Serialize)]
pub struct SolveCertificate {
    pub solution: Vec<f64>,
    pub kkt_gap: f64,
    pub iterations: usize,
}

impl SolveCertificate {
    pub fn beta(&self) -> DVector<f64> {
        DVector::from_vec(self.solution.clone())
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// KKT gap for the lasso at `beta`: worst stationarity deviation over active
/// coordinates plus worst bound excess over inactive ones, and the sign
/// mismatch scaled back to correlation units.
fn lasso_kkt_gap(x: &DMatrix<f64>, corr: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> f64 {
    let _ = x;
    let mut gap: f64 = 0.0;
    for i in 0..beta.len() {
        if beta[i] != 0.0 {
            gap = gap.max((corr[i] - beta[i].signum() * lambda).abs());
        } else {
            gap = gap.max(corr[i].abs() - lambda);
        }
    }
    gap
}

/// Cyclic coordinate descent with soft-thresholding for the lasso.
///
/// Terminates when the KKT gap drops to `tol` (in correlation units).
pub fn coordinate_descent(inst: &ProblemInstance, tol: f64) -> Result<SolveCertificate> {
    coordinate_descent_from(inst, tol, DVector::zeros(inst.p()))
}

/// Coordinate descent from a caller-supplied starting point.
pub fn coordinate_descent_from(
    inst: &ProblemInstance,
    tol: f64,
    start: DVector<f64>,
) -> Result<SolveCertificate> {
    if inst.lambda <= 0.0 {
        return Err(Error::Input("coordinate_descent requires lambda > 0".into()));
    }
    if start.len() != inst.p() {
        return Err(Error::Dimension("start length != p".into()));
    }
    let (x, y, lambda) = (&inst.x, &inst.y, inst.lambda);
    let p = inst.p();
    let col_sq: Vec<f64> = (0..p).map(|j| x.column(j).norm_squared()).collect();

    let mut beta = start;
    let mut residual = y - x * &beta;
    let max_sweeps = 200_000;
    for sweep in 0..max_sweeps {
        for j in 0..p {
            if col_sq[j] <= 0.0 {
                continue;
            }
            let old = beta[j];
            let rho = x.column(j).dot(&residual) + col_sq[j] * old;
            let new = soft_threshold(rho, lambda) / col_sq[j];
            if new != old {
                residual += x.column(j) * (old - new);
                beta[j] = new;
            }
        }
        if sweep % 8 == 0 || sweep > 50 {
            // Recompute the residual occasionally to shed accumulated drift.
            residual = y - x * &beta;
            let corr = x.transpose() * &residual;
            let gap = lasso_kkt_gap(x, &corr, &beta, lambda);
            if gap <= tol {
                return Ok(SolveCertificate {
                    solution: beta.iter().copied().collect(),
                    kkt_gap: gap,
                    iterations: sweep + 1,
                });
            }
        }
    }
    let corr = x.transpose() * (y - x * &beta);
    let gap = lasso_kkt_gap(x, &corr, &beta, lambda);
    Err(Error::NonConvergence(format!(
        "coordinate descent: KKT gap {gap:.3e} > tol {tol:.3e} after {max_sweeps} sweeps"
    )))
}

/// Elastic-net KKT gap: stationarity of `X^T r - lambda2 beta` against lambda1.
fn enet_kkt_gap(grad_like: &DVector<f64>, beta: &DVector<f64>, lambda1: f64) -> f64 {
    let mut gap: f64 = 0.0;
    for i in 0..beta.len() {
        if beta[i] != 0.0 {
            gap = gap.max((grad_like[i] - beta[i].signum() * lambda1).abs());
        } else {
            gap = gap.max(grad_like[i].abs() - lambda1);
        }
    }
    gap
}

/// Unique minimizer of `0.5||y - X b||^2 + lambda1 ||b||_1 + lambda2/2 ||b||^2`.
///
/// Coordinate descent identifies the working set; a strictly convex linear
/// solve on that set then polishes the iterate, which keeps the method exact
/// even as lambda2 approaches zero (where plain coordinate descent crawls
/// along null(X) directions).
pub fn elastic_net(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda1: f64,
    lambda2: f64,
    tol: f64,
) -> Result<SolveCertificate> {
    if lambda1 <= 0.0 || lambda2 <= 0.0 {
        return Err(Error::Input("elastic_net requires lambda1 > 0 and lambda2 > 0".into()));
    }
    if y.len() != x.nrows() {
        return Err(Error::Dimension("response length != design rows".into()));
    }
    let p = x.ncols();
    let col_sq: Vec<f64> = (0..p).map(|j| x.column(j).norm_squared()).collect();

    let mut beta: DVector<f64> = DVector::zeros(p);
    let mut iterations = 0usize;
    let max_outer = 4_000;
    for _ in 0..max_outer {
        // A few plain coordinate sweeps to move the working set.
        for _ in 0..5 {
            let mut residual = y - x * &beta;
            for j in 0..p {
                let old = beta[j];
                let rho = x.column(j).dot(&residual) + col_sq[j] * old;
                let new = soft_threshold(rho, lambda1) / (col_sq[j] + lambda2);
                if new != old {
                    residual += x.column(j) * (old - new);
                    beta[j] = new;
                }
            }
            iterations += 1;
        }

        let residual = y - x * &beta;
        let grad_like = x.transpose() * &residual - lambda2 * &beta;
        if enet_kkt_gap(&grad_like, &beta, lambda1) <= tol {
            break;
        }

        // Working set: current support plus coordinates violating the bound.
        let mut active: Vec<usize> = vec![];
        let mut signs: Vec<f64> = vec![];
        for j in 0..p {
            if beta[j] != 0.0 {
                active.push(j);
                signs.push(beta[j].signum());
            } else if grad_like[j].abs() > lambda1 {
                active.push(j);
                signs.push(grad_like[j].signum());
            }
        }
        if active.is_empty() {
            break;
        }
        // Solve (X_A^T X_A + lambda2 I) b = X_A^T y - lambda1 s exactly.
        // Coordinates whose exact solution disagrees with the pinned sign
        // belong at zero; drop them and re-solve until the set is consistent.
        loop {
            let xa =
                DMatrix::from_columns(&active.iter().map(|&j| x.column(j)).collect::<Vec<_>>());
            let k = active.len();
            let mut gram = xa.transpose() * &xa;
            for i in 0..k {
                gram[(i, i)] += lambda2;
            }
            let rhs = xa.transpose() * y
                - lambda1 * DVector::from_iterator(k, signs.iter().copied());
            let Some(chol) = gram.clone().cholesky() else { break };
            let mut sub = chol.solve(&rhs);
            if sub.iter().zip(&signs).all(|(&b, &s)| b * s >= 0.0) {
                // The factored system has condition ~ sigma_max^2 / lambda2,
                // so the plain solve carries a forward error near
                // eps / lambda2. Refine with compensated residuals of the
                // original (un-Grammed) equations; keep the refinement only
                // if it stays in the pinned sign orthant.
                let refined =
                    refine_ridge_solve(&xa, y, &signs, lambda1, lambda2, &chol, sub.clone());
                if refined.iter().zip(&signs).all(|(&b, &s)| b * s >= 0.0) {
                    sub = refined;
                }
                let mut candidate = DVector::zeros(p);
                for (idx, &j) in active.iter().enumerate() {
                    candidate[j] = sub[idx];
                }
                beta = candidate;
                break;
            }
            let keep: Vec<bool> =
                sub.iter().zip(&signs).map(|(&b, &s)| b * s >= 0.0).collect();
            active = active
                .iter()
                .zip(&keep)
                .filter(|(_, &k)| k)
                .map(|(&j, _)| j)
                .collect();
            signs = signs
                .iter()
                .zip(&keep)
                .filter(|(_, &k)| k)
                .map(|(&s, _)| s)
                .collect();
            if active.is_empty() {
                break;
            }
        }
        let grad_like = x.transpose() * (y - x * &beta) - lambda2 * &beta;
        if enet_kkt_gap(&grad_like, &beta, lambda1) <= tol {
            break;
        }
        iterations += 1;
    }

    let grad_like = x.transpose() * (y - x * &beta) - lambda2 * &beta;
    let gap = enet_kkt_gap(&grad_like, &beta, lambda1);
    if gap > tol {
        return Err(Error::NonConvergence(format!(
            "elastic net: KKT gap {gap:.3e} > tol {tol:.3e}"
        )));
    }
    Ok(SolveCertificate {
        solution: beta.iter().copied().collect(),
        kkt_gap: gap,
        iterations,
    })
}

/// Error-free sum: `a + b = s + e` exactly (Knuth).
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Error-free product via fused multiply-add: `a * b = p + e` exactly.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

fn dd_add(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let (s, e) = two_sum(a.0, b.0);
    two_sum(s, e + a.1 + b.1)
}

/// Compensated dot product (Ogita-Rump Dot2), returned as a head/tail pair
/// whose sum carries roughly twice working precision.
fn dot_dd(pairs: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for (a, b) in pairs {
        let (p, pe) = two_prod(a, b);
        let (t, se) = two_sum(s, p);
        s = t;
        c += pe + se;
    }
    (s, c)
}

/// Iterative refinement for `(Xa^T Xa + lambda2 I) b = Xa^T y - lambda1 s`.
///
/// Residuals are evaluated against the original factors in compensated
/// arithmetic (never through a rounded Gram matrix), so the attainable
/// forward error is set by the doubled-precision residual rather than by
/// `eps * cond`, which matters when `lambda2` sits many orders below the
/// Gram diagonal. The factorization only preconditions the correction.
fn refine_ridge_solve(
    xa: &DMatrix<f64>,
    y: &DVector<f64>,
    signs: &[f64],
    lambda1: f64,
    lambda2: f64,
    chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>,
    mut sub: DVector<f64>,
) -> DVector<f64> {
    let n = xa.nrows();
    let k = sub.len();
    for _ in 0..4 {
        // u = Xa * sub, kept as head/tail.
        let mut uh = vec![0.0f64; n];
        let mut ul = vec![0.0f64; n];
        for j in 0..n {
            let (h, l) = dot_dd((0..k).map(|i| (xa[(j, i)], sub[i])));
            uh[j] = h;
            ul[j] = l;
        }
        let mut r = DVector::zeros(k);
        for i in 0..k {
            let a = dot_dd((0..n).map(|j| (xa[(j, i)], y[j])));
            let b = dot_dd((0..n).map(|j| (xa[(j, i)], uh[j])));
            let c = dot_dd((0..n).map(|j| (xa[(j, i)], ul[j])));
            let s1 = two_prod(lambda1, signs[i]);
            let s2 = two_prod(lambda2, sub[i]);
            let mut acc = dd_add(a, (-b.0, -b.1));
            acc = dd_add(acc, (-c.0, -c.1));
            acc = dd_add(acc, (-s1.0, -s1.1));
            acc = dd_add(acc, (-s2.0, -s2.1));
            r[i] = acc.0 + acc.1;
        }
        let delta = chol.solve(&r);
        let step = delta.amax();
        sub += &delta;
        if step <= f64::EPSILON * f64::EPSILON * (1.0 + sub.amax()) {
            break;
        }
    }
    sub
}

/// Generalized KKT gap for `min f(X beta) + lambda ||beta||_1` at `beta`,
/// where `g = X^T (-grad f)(X beta)`.
pub fn general_kkt_gap(g: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> f64 {
    let mut gap: f64 = 0.0;
    for i in 0..beta.len() {
        if beta[i] != 0.0 {
            gap = gap.max((g[i] - beta[i].signum() * lambda).abs());
        } else {
            gap = gap.max(g[i].abs() - lambda);
        }
    }
    gap
}

/// Proximal gradient (with backtracking line search) for
/// `min f(X beta) + lambda ||beta||_1`.
pub fn prox_grad_l1(
    loss: &LossSpec,
    x: &DMatrix<f64>,
    lambda: f64,
    tol: f64,
) -> Result<SolveCertificate> {
    prox_grad_l1_from(loss, x, lambda, tol, DVector::zeros(x.ncols()))
}

/// Proximal gradient from a caller-supplied starting point.
pub fn prox_grad_l1_from(
    loss: &LossSpec,
    x: &DMatrix<f64>,
    lambda: f64,
    tol: f64,
    start: DVector<f64>,
) -> Result<SolveCertificate> {
    if lambda <= 0.0 {
        return Err(Error::Input("prox_grad_l1 requires lambda > 0".into()));
    }
    if loss.response.len() != x.nrows() {
        return Err(Error::Dimension("response length != design rows".into()));
    }
    if start.len() != x.ncols() {
        return Err(Error::Dimension("start length != p".into()));
    }
    loss.validate()?;
    let p = x.ncols();

    let mut beta = start;
    let mut u = x * &beta;
    let mut f_val = loss.value(&u)?;
    let mut step = 1.0f64;
    let max_iter = 2_000_000;
    for iter in 0..max_iter {
        let grad_u = loss.gradient(&u)?;
        let grad = x.transpose() * &grad_u;

        let g = -&grad;
        let gap = general_kkt_gap(&g, &beta, lambda);
        if gap <= tol {
            return Ok(SolveCertificate {
                solution: beta.iter().copied().collect(),
                kkt_gap: gap,
                iterations: iter,
            });
        }

        // Backtracking from the last accepted step, retrying upward slowly.
        step = (step * 2.0).min(1.0e4);
        loop {
            let mut candidate = DVector::zeros(p);
            for j in 0..p {
                candidate[j] = soft_threshold(beta[j] - step * grad[j], step * lambda);
            }
            let diff = &candidate - &beta;
            let u_new = x * &candidate;
            let f_new = loss.value(&u_new)?;
            let quad = f_val + grad.dot(&diff) + diff.norm_squared() / (2.0 * step);
            if f_new <= quad + 1e-12 * f_val.abs().max(1.0) {
                beta = candidate;
                u = u_new;
                f_val = f_new;
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                return Err(Error::NonConvergence(
                    "proximal gradient: backtracking step underflow".into(),
                ));
            }
        }
    }
    let g = -(x.transpose() * loss.gradient(&u)?);
    let gap = general_kkt_gap(&g, &beta, lambda);
    Err(Error::NonConvergence(format!(
        "proximal gradient: KKT gap {gap:.3e} > tol {tol:.3e} after {max_iter} iterations"
    )))
}
