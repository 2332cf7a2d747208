//! The lasso solution set as a polytope and the analyses built on it:
//! per-coordinate coefficient bounds, dispensability classification,
//! joint-zero feasibility, active-set enumeration, reduction to a linearly
//! independent active set, the minimum-l1 least-squares oracle, active-subspace
//! equivalence, and uniqueness verdicts.
//!
//! With E the equicorrelation set, s its signs, P the projector onto
//! row(X_E), and `lars_point` the minimum-l2-norm solution of the instance
//! restricted to E, the equicorrelation coefficient vectors of all solutions
//! form `K = { x : P x = P lars_point, diag(s) x >= 0 }`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kkt::{self, EquiState, ProblemInstance};
use crate::lp::{self, LpProblem, LpStatus};
use crate::numkernel;
use crate::solvers;

/// Default cap on |E| for the exponential active-set enumeration.
pub const DEFAULT_ENUM_CAP: usize = 16;

/// Relative tolerance below which a face-maximal coordinate counts as zero.
const ACTIVE_TOL_REL: f64 = 1e-9;

/// Scale-aware floor for "coefficient hits zero" while stepping along
/// null-space directions.
const ZERO_HIT_REL: f64 = 1e-11;

/// KKT tolerance required of candidate solutions handed in by callers.
const INPUT_KKT_TOL: f64 = 1e-6;

/// The solution polytope `K` of a lasso instance.
#[derive(Debug, Clone)]
pub struct PolytopeSpec {
    pub equi_state: EquiState,
    /// Minimum-l2-norm solution restricted to E: the `b = 0` representative
    /// when that is sign-feasible, otherwise its projection onto the sign
    /// cone (violating coordinates pinned to zero).
    pub lars_point: DVector<f64>,
    /// Orthogonal projector onto row(X_E), |E| x |E|.
    pub projection: DMatrix<f64>,
    /// Orthonormal basis of null(X_E), |E| x nullity.
    pub null_basis: DMatrix<f64>,
}

impl PolytopeSpec {
    /// Diagonal sign operator S = diag(s).
    pub fn sign_diag(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.equi_state.sign_vector())
    }

    /// The l1 norm shared by every solution.
    pub fn shared_l1_norm(&self) -> f64 {
        self.lars_point.iter().map(|v| v.abs()).sum()
    }

    /// Equality/inequality constraints describing K over the |E| coordinates.
    fn constraints(&self) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>) {
        let k = self.equi_state.len();
        // Project the representative so the equality right-hand side lies in
        // row(X_E) even when the representative carries a null-space
        // component (the pinned, sign-feasible case).
        (
            self.projection.clone(),
            &self.projection * &self.lars_point,
            self.sign_diag(),
            DVector::zeros(k),
        )
    }
}

/// Tolerance used when solving for "any solution" inside `solution_polytope`.
fn oracle_tol(lambda: f64) -> f64 {
    1e-10 * lambda.max(1e-4)
}

/// Build the solution polytope of `inst`: solve the lasso independently
/// (coordinate descent), read E and s off the fit, and assemble P, S, and the
/// LARS point.
pub fn solution_polytope(inst: &ProblemInstance) -> Result<PolytopeSpec> {
    if inst.lambda <= 0.0 {
        return Err(Error::Input("solution_polytope requires lambda > 0".into()));
    }
    let cert = solvers::coordinate_descent(inst, oracle_tol(inst.lambda))?;
    let beta = cert.beta();
    let fit = &inst.x * &beta;
    // The oracle gap is far below this membership tolerance, so borderline
    // decisions are insensitive to the solver's residual error.
    let equi_state = kkt::equicorrelation(inst, &fit, 1e-6)?;
    spec_from_state(inst, equi_state)
}

/// Assemble the polytope for a known equicorrelation state.
pub fn spec_from_state(inst: &ProblemInstance, equi_state: EquiState) -> Result<PolytopeSpec> {
    let k = equi_state.len();
    if k == 0 {
        return Ok(PolytopeSpec {
            equi_state,
            lars_point: DVector::zeros(0),
            projection: DMatrix::zeros(0, 0),
            null_basis: DMatrix::zeros(0, 0),
        });
    }
    let xe = equi_state.submatrix(&inst.x);
    let f = numkernel::rank_factor(&xe, numkernel::DEFAULT_RANK_TOL)?;
    let s = equi_state.sign_vector();
    // Minimum-norm representative: (X_E)^+ (y - (X_E^T)^+ lambda s).
    let mut lars_point = f.pinv_apply(&(&inst.y - inst.lambda * f.pinv_t_apply(&s)));
    let projection = f.rowspace_projector();
    let null_basis = numkernel::nullspace_basis(&xe)?;

    // On degenerate instances (simultaneous-event designs) the unconstrained
    // minimum-norm point can land outside the sign cone. Pin the violating
    // coordinates to zero and re-project onto the remaining columns; this is
    // the constrained minimum-norm solution, matching the path algorithm.
    let fit_target = &xe * &lars_point;
    let mut pinned = vec![false; k];
    loop {
        let tol = 1e-9 * (1.0 + lars_point.amax());
        let worst = (0..k)
            .filter(|&i| !pinned[i] && s[i] * lars_point[i] < -tol)
            .min_by(|&a, &b| {
                (s[a] * lars_point[a]).partial_cmp(&(s[b] * lars_point[b])).unwrap()
            });
        let Some(i) = worst else { break };
        pinned[i] = true;
        let keep: Vec<usize> = (0..k).filter(|&j| !pinned[j]).collect();
        if keep.is_empty() {
            return Err(Error::Internal(
                "no sign-feasible solution after pinning every coordinate".into(),
            ));
        }
        let xk = DMatrix::from_columns(
            &keep.iter().map(|&j| xe.column(j)).collect::<Vec<_>>(),
        );
        let fk = numkernel::rank_factor(&xk, numkernel::DEFAULT_RANK_TOL)?;
        let sub = fk.pinv_apply(&fit_target);
        if (&xk * &sub - &fit_target).amax() > 1e-8 * (1.0 + fit_target.amax()) {
            return Err(Error::Internal(format!(
                "no solution exists with member {} pinned to zero",
                equi_state.members[i]
            )));
        }
        lars_point.fill(0.0);
        for (idx, &j) in keep.iter().enumerate() {
            lars_point[j] = sub[idx];
        }
    }

    let scale = lars_point.amax().max(1.0);
    if (&xe * &lars_point - &fit_target).amax() > 1e-8 * scale {
        return Err(Error::Internal("LARS point escaped the solution set".into()));
    }
    for i in 0..k {
        if s[i] * lars_point[i] < -1e-8 * scale {
            return Err(Error::Internal(format!(
                "LARS point violates the sign condition at member {}: {}",
                equi_state.members[i], lars_point[i]
            )));
        }
    }
    Ok(PolytopeSpec { equi_state, lars_point, projection, null_basis })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableClass {
    Dispensable,
    Indispensable,
}

/// One row of the bounds table, for variable `index` (0-based).
#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub index: usize,
    pub sign: i8,
    pub lower: f64,
    pub lars: f64,
    pub upper: f64,
    pub class: VariableClass,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub equi_state: EquiState,
    pub shared_l1_norm: f64,
    pub rows: Vec<BoundRow>,
}

/// Per-coordinate minimum and maximum over K, with dispensability
/// classification (dispensable iff the interval reaches zero).
pub fn coefficient_bounds(spec: &PolytopeSpec) -> Result<BoundsReport> {
    let k = spec.equi_state.len();
    let (eq_a, eq_b, ineq_a, ineq_b) = spec.constraints();
    let l1 = spec.shared_l1_norm();
    let zero_tol = ACTIVE_TOL_REL * l1.max(1.0);
    let mut rows = vec![];
    for pos in 0..k {
        let mut obj = DVector::zeros(k);
        obj[pos] = 1.0;
        let lo = lp::solve_lp(&LpProblem {
            objective: obj.clone(),
            eq_lhs: eq_a.clone(),
            eq_rhs: eq_b.clone(),
            ineq_lhs: ineq_a.clone(),
            ineq_rhs: ineq_b.clone(),
        })?;
        obj[pos] = -1.0;
        let hi = lp::solve_lp(&LpProblem {
            objective: obj,
            eq_lhs: eq_a.clone(),
            eq_rhs: eq_b.clone(),
            ineq_lhs: ineq_a.clone(),
            ineq_rhs: ineq_b.clone(),
        })?;
        if lo.status != LpStatus::Optimal || hi.status != LpStatus::Optimal {
            return Err(Error::Internal(format!(
                "bound LP for member {} returned {:?}/{:?}; K is provably nonempty and bounded",
                spec.equi_state.members[pos], lo.status, hi.status
            )));
        }
        let lars = spec.lars_point[pos];
        let lower = lo.value.min(lars);
        let upper = (-hi.value).max(lars);
        let class = if lower.abs().min(upper.abs()) <= zero_tol {
            VariableClass::Dispensable
        } else {
            VariableClass::Indispensable
        };
        rows.push(BoundRow {
            index: spec.equi_state.members[pos],
            sign: spec.equi_state.signs[pos],
            lower,
            lars,
            upper,
            class,
        });
    }
    Ok(BoundsReport { equi_state: spec.equi_state.clone(), shared_l1_norm: l1, rows })
}

/// Can all variables in `zero_set` (variable indices, subset of E) be zero at
/// a single solution? Returns the witness solution (length p) when feasible.
pub fn joint_zero_feasible(
    spec: &PolytopeSpec,
    zero_set: &[usize],
    p: usize,
) -> Result<(bool, Option<DVector<f64>>)> {
    let k = spec.equi_state.len();
    let mut positions = vec![];
    for &i in zero_set {
        match spec.equi_state.members.binary_search(&i) {
            Ok(pos) => positions.push(pos),
            Err(_) => {
                return Err(Error::Input(format!(
                    "variable {i} is not in the equicorrelation set"
                )))
            }
        }
    }
    let (eq_a, eq_b, ineq_a, ineq_b) = spec.constraints();
    let mut eq_full = DMatrix::zeros(k + positions.len(), k);
    eq_full.view_mut((0, 0), (k, k)).copy_from(&eq_a);
    for (r, &pos) in positions.iter().enumerate() {
        eq_full[(k + r, pos)] = 1.0;
    }
    let mut eq_rhs = DVector::zeros(k + positions.len());
    eq_rhs.rows_mut(0, k).copy_from(&eq_b);
    let res = lp::feasible_point(&LpProblem {
        objective: DVector::zeros(k),
        eq_lhs: eq_full,
        eq_rhs,
        ineq_lhs: ineq_a,
        ineq_rhs: ineq_b,
    })?;
    if res.status == LpStatus::Optimal {
        Ok((true, Some(spec.equi_state.embed(&res.point, p))))
    } else {
        Ok((false, None))
    }
}

/// Enumerate every support realizable by a solution: for each subset I of E,
/// the face `K intersect {x_I = 0}` contributes the active set E \ I exactly
/// when the face is nonempty and every remaining coordinate can be nonzero on
/// it (checked by per-coordinate maxima, since vertices understate a face's
/// maximal support). Faces whose strict subsets were already empty are pruned.
pub fn enumerate_active_sets(spec: &PolytopeSpec, cap: usize) -> Result<Vec<Vec<usize>>> {
    let k = spec.equi_state.len();
    if k > cap {
        return Err(Error::Capability(format!(
            "active-set enumeration is exponential in |E|; |E| = {k} exceeds the cap {cap}"
        )));
    }
    let (eq_a, eq_b, ineq_a, ineq_b) = spec.constraints();
    let l1 = spec.shared_l1_norm();
    let active_tol = ACTIVE_TOL_REL * l1.max(1.0);
    let signs = spec.equi_state.sign_vector();

    let mut empty_face = vec![false; 1usize << k];
    let mut out: Vec<Vec<usize>> = vec![];
    for mask in 0..(1usize << k) {
        // A face is contained in every face with fewer pinned coordinates.
        let mut pruned = false;
        for i in 0..k {
            if mask >> i & 1 == 1 && empty_face[mask & !(1 << i)] {
                pruned = true;
                break;
            }
        }
        if pruned {
            empty_face[mask] = true;
            continue;
        }
        let pinned: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let mut eq_full = DMatrix::zeros(k + pinned.len(), k);
        eq_full.view_mut((0, 0), (k, k)).copy_from(&eq_a);
        for (r, &pos) in pinned.iter().enumerate() {
            eq_full[(k + r, pos)] = 1.0;
        }
        let mut eq_rhs = DVector::zeros(k + pinned.len());
        eq_rhs.rows_mut(0, k).copy_from(&eq_b);

        let feas = lp::feasible_point(&LpProblem {
            objective: DVector::zeros(k),
            eq_lhs: eq_full.clone(),
            eq_rhs: eq_rhs.clone(),
            ineq_lhs: ineq_a.clone(),
            ineq_rhs: ineq_b.clone(),
        })?;
        if feas.status != LpStatus::Optimal {
            empty_face[mask] = true;
            continue;
        }
        let mut full_support = true;
        for j in 0..k {
            if mask >> j & 1 == 1 {
                continue;
            }
            let mut obj = DVector::zeros(k);
            obj[j] = -signs[j];
            let res = lp::solve_lp(&LpProblem {
                objective: obj,
                eq_lhs: eq_full.clone(),
                eq_rhs: eq_rhs.clone(),
                ineq_lhs: ineq_a.clone(),
                ineq_rhs: ineq_b.clone(),
            })?;
            if res.status != LpStatus::Optimal || -res.value <= active_tol {
                full_support = false;
                break;
            }
        }
        if full_support {
            let support: Vec<usize> = (0..k)
                .filter(|j| mask >> j & 1 == 0)
                .map(|j| spec.equi_state.members[j])
                .collect();
            out.push(support);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Shrink a solution's active set until its columns are linearly independent,
/// stepping along null-space directions (which keep the fit and, thanks to
/// the KKT conditions, the l1 norm exactly) to the first zero crossing.
pub fn reduce_to_independent(inst: &ProblemInstance, beta: &DVector<f64>) -> Result<DVector<f64>> {
    let report = kkt::check_kkt(inst, beta, INPUT_KKT_TOL)?;
    if !report.passed {
        return Err(Error::Input(format!(
            "input fails KKT: stationarity gap {:.3e}, sign violation {:.3e}",
            report.stationarity_gap, report.sign_violation
        )));
    }
    let mut beta = beta.clone();
    loop {
        let active: Vec<usize> = (0..inst.p()).filter(|&i| beta[i] != 0.0).collect();
        if active.is_empty() {
            return Ok(beta);
        }
        let xa = DMatrix::from_columns(
            &active.iter().map(|&i| inst.x.column(i)).collect::<Vec<_>>(),
        );
        let f = numkernel::rank_factor(&xa, numkernel::DEFAULT_RANK_TOL)?;
        if f.rank == active.len() {
            return Ok(beta);
        }
        let null = numkernel::nullspace_basis(&xa)?;
        let nu = null.column(0).clone_owned();

        // The first zero crossing along +nu (or -nu); sum_k s_k nu_k = 0
        // guarantees a shrinking coordinate exists on one side.
        let mut step = f64::INFINITY;
        let mut flipped = false;
        for pass in 0..2 {
            let dir = if pass == 0 { 1.0 } else { -1.0 };
            for (k, &i) in active.iter().enumerate() {
                if nu[k] != 0.0 {
                    let t = -beta[i] / (dir * nu[k]);
                    if t > 0.0 && t < step {
                        step = t;
                        flipped = pass == 1;
                    }
                }
            }
            if step.is_finite() {
                break;
            }
        }
        if !step.is_finite() {
            return Err(Error::Internal(
                "null-space direction produced no zero crossing".into(),
            ));
        }
        let dir = if flipped { -1.0 } else { 1.0 };
        for (k, &i) in active.iter().enumerate() {
            beta[i] += step * dir * nu[k];
        }
        let floor = ZERO_HIT_REL * beta.amax();
        for v in beta.iter_mut() {
            if v.abs() <= floor {
                *v = 0.0;
            }
        }
    }
}

/// Minimum-l1-norm least-squares solution: `min ||b||_1 s.t. X^T X b = X^T y`,
/// solved as an LP over the positive/negative split of b.
pub fn min_l1_least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let p = x.ncols();
    let g = x.transpose() * x;
    let rhs = x.transpose() * y;
    let mut eq = DMatrix::zeros(p, 2 * p);
    for r in 0..p {
        for c in 0..p {
            eq[(r, c)] = g[(r, c)];
            eq[(r, p + c)] = -g[(r, c)];
        }
    }
    let res = lp::solve_lp(&LpProblem {
        objective: DVector::from_element(2 * p, 1.0),
        eq_lhs: eq,
        eq_rhs: rhs,
        ineq_lhs: DMatrix::identity(2 * p, 2 * p),
        ineq_rhs: DVector::zeros(2 * p),
    })?;
    if res.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "minimum-l1 least-squares LP returned {:?}; the normal equations are always consistent",
            res.status
        )));
    }
    let mut beta = DVector::zeros(p);
    for i in 0..p {
        beta[i] = res.point[i] - res.point[p + i];
    }
    Ok(beta)
}

/// Maximum pairwise operator-norm distance between the projectors onto
/// col(X_A) across the given active sets (0 asserts they all span the same
/// subspace).
pub fn active_subspace_check(inst: &ProblemInstance, active_sets: &[Vec<usize>]) -> Result<f64> {
    let n = inst.n();
    let mut projectors = vec![];
    for a in active_sets {
        if a.is_empty() {
            projectors.push(DMatrix::zeros(n, n));
            continue;
        }
        let xa = DMatrix::from_columns(
            &a.iter().map(|&i| inst.x.column(i)).collect::<Vec<_>>(),
        );
        let f = numkernel::rank_factor(&xa, numkernel::DEFAULT_RANK_TOL)?;
        projectors.push(f.colspace_projector());
    }
    let mut max_dist: f64 = 0.0;
    for i in 0..projectors.len() {
        for j in i + 1..projectors.len() {
            let diff = &projectors[i] - &projectors[j];
            let f = numkernel::rank_factor(&diff, numkernel::DEFAULT_RANK_TOL)?;
            max_dist = max_dist.max(f.singular_values.first().copied().unwrap_or(0.0));
        }
    }
    Ok(max_dist)
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessVerdict {
    pub unique: bool,
    pub equi_size: usize,
    pub rank: usize,
    pub null_dim: usize,
    pub rationale: String,
}

/// Unique iff null(X_E) is trivial, i.e. rank(X_E) = |E|.
pub fn uniqueness_verdict(inst: &ProblemInstance) -> Result<UniquenessVerdict> {
    if inst.lambda <= 0.0 {
        return Err(Error::Input("uniqueness_verdict requires lambda > 0".into()));
    }
    let cert = solvers::coordinate_descent(inst, oracle_tol(inst.lambda))?;
    let fit = &inst.x * cert.beta();
    let es = kkt::equicorrelation(inst, &fit, 1e-6)?;
    let rank = if es.is_empty() {
        0
    } else {
        numkernel::rank(&es.submatrix(&inst.x))?
    };
    let null_dim = es.len() - rank;
    let unique = null_dim == 0;
    let rationale = format!(
        "|E| = {}, rank(X_E) = {rank}, dim null(X_E) = {null_dim}: the solution set is a polytope of dimension at most {null_dim}",
        es.len()
    );
    Ok(UniquenessVerdict { unique, equi_size: es.len(), rank, null_dim, rationale })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn duplicated_instance(lambda: f64) -> ProblemInstance {
        ProblemInstance::new(
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_vec(vec![2.0]),
            lambda,
        )
        .unwrap()
    }

    fn identity_instance(lambda: f64) -> ProblemInstance {
        ProblemInstance::new(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![2.0, 1.0]),
            lambda,
        )
        .unwrap()
    }

    #[test]
    fn polytope_duplicated_fixture() {
        let inst = duplicated_instance(0.5);
        let spec = solution_polytope(&inst).unwrap();
        assert_eq!(spec.equi_state.members, vec![0, 1]);
        assert_eq!(spec.equi_state.signs, vec![1, 1]);
        assert!((spec.lars_point[0] - 0.75).abs() < 1e-9);
        assert!((spec.lars_point[1] - 0.75).abs() < 1e-9);
        assert_eq!(spec.null_basis.ncols(), 1);
        let nb = spec.null_basis.column(0);
        assert!((nb[0] + nb[1]).abs() < 1e-12);
    }

    #[test]
    fn polytope_unique_instance_is_point() {
        let inst = identity_instance(0.5);
        let spec = solution_polytope(&inst).unwrap();
        assert_eq!(spec.null_basis.ncols(), 0);
        let report = coefficient_bounds(&spec).unwrap();
        for row in &report.rows {
            assert!((row.lower - row.lars).abs() < 1e-9);
            assert!((row.upper - row.lars).abs() < 1e-9);
        }
    }

    #[test]
    fn bounds_duplicated_fixture() {
        let inst = duplicated_instance(0.5);
        let spec = solution_polytope(&inst).unwrap();
        let report = coefficient_bounds(&spec).unwrap();
        assert!((report.shared_l1_norm - 1.5).abs() < 1e-9);
        assert_eq!(report.rows.len(), 2);
        for row in &report.rows {
            assert!(row.lower.abs() < 1e-9, "lower {}", row.lower);
            assert!((row.upper - 1.5).abs() < 1e-9, "upper {}", row.upper);
            assert!((row.lars - 0.75).abs() < 1e-9);
            assert_eq!(row.class, VariableClass::Dispensable);
        }
    }

    #[test]
    fn joint_zero_queries() {
        let inst = duplicated_instance(0.5);
        let spec = solution_polytope(&inst).unwrap();
        let (ok, witness) = joint_zero_feasible(&spec, &[], inst.p()).unwrap();
        assert!(ok);
        let w = witness.unwrap();
        assert!(((&inst.x * &w)[0] - 1.5).abs() < 1e-8);

        let (ok, witness) = joint_zero_feasible(&spec, &[0, 1], inst.p()).unwrap();
        assert!(!ok);
        assert!(witness.is_none());

        assert!(joint_zero_feasible(&spec, &[5], inst.p()).is_err());
    }

    #[test]
    fn enumerate_duplicated_fixture() {
        let inst = duplicated_instance(0.5);
        let spec = solution_polytope(&inst).unwrap();
        let sets = enumerate_active_sets(&spec, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(sets, vec![vec![0], vec![0, 1], vec![1]]);
    }

    #[test]
    fn enumerate_unique_instance() {
        let inst = identity_instance(0.5);
        let spec = solution_polytope(&inst).unwrap();
        let sets = enumerate_active_sets(&spec, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(sets, vec![vec![0, 1]]);
    }

    #[test]
    fn enumerate_cap() {
        let inst = duplicated_instance(0.5);
        let spec = solution_polytope(&inst).unwrap();
        assert!(matches!(
            enumerate_active_sets(&spec, 1),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn reduce_duplicated_lars_point() {
        let inst = duplicated_instance(0.5);
        let beta = DVector::from_vec(vec![0.75, 0.75]);
        let reduced = reduce_to_independent(&inst, &beta).unwrap();
        let nonzero: Vec<usize> = (0..2).filter(|&i| reduced[i] != 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((reduced[nonzero[0]] - 1.5).abs() < 1e-10);
        // Fit and l1 norm preserved exactly.
        assert!(((&inst.x * &reduced)[0] - 1.5).abs() < 1e-10);
        assert!((reduced.iter().map(|v| v.abs()).sum::<f64>() - 1.5).abs() < 1e-10);
    }

    #[test]
    fn reduce_independent_input_unchanged() {
        let inst = identity_instance(0.5);
        let beta = DVector::from_vec(vec![1.5, 0.5]);
        let reduced = reduce_to_independent(&inst, &beta).unwrap();
        assert!((reduced - beta).amax() < 1e-15);
    }

    #[test]
    fn reduce_rejects_non_solution() {
        let inst = identity_instance(0.5);
        let beta = DVector::from_vec(vec![2.0, 0.5]);
        assert!(matches!(
            reduce_to_independent(&inst, &beta),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn min_l1_cases() {
        // Full rank: ordinary least squares.
        let x = DMatrix::identity(2, 2);
        let y = DVector::from_vec(vec![2.0, 1.0]);
        let beta = min_l1_least_squares(&x, &y).unwrap();
        assert!((beta - &y).amax() < 1e-9);

        // Duplicated column: value 2 at a vertex of {b1 + b2 = 2}.
        let x = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let y = DVector::from_vec(vec![2.0]);
        let beta = min_l1_least_squares(&x, &y).unwrap();
        assert!((beta.iter().map(|v| v.abs()).sum::<f64>() - 2.0).abs() < 1e-9);
        assert!((beta[0] + beta[1] - 2.0).abs() < 1e-9);

        // Zero response: zero solution.
        let beta = min_l1_least_squares(&x, &DVector::zeros(1)).unwrap();
        assert!(beta.amax() < 1e-9);
    }

    #[test]
    fn subspace_distance_duplicated() {
        let inst = duplicated_instance(0.5);
        let sets = vec![vec![0], vec![1], vec![0, 1]];
        let d = active_subspace_check(&inst, &sets).unwrap();
        assert!(d < 1e-10, "distance {d}");
    }

    #[test]
    fn uniqueness_verdicts() {
        let v = uniqueness_verdict(&identity_instance(0.5)).unwrap();
        assert!(v.unique);
        assert_eq!(v.null_dim, 0);

        let v = uniqueness_verdict(&duplicated_instance(0.5)).unwrap();
        assert!(!v.unique);
        assert_eq!(v.equi_size, 2);
        assert_eq!(v.rank, 1);
        assert_eq!(v.null_dim, 1);
    }
}
