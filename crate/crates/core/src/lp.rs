//! Self-contained dense linear programming: two-phase primal simplex with
//! Bland's rule engaged after stall detection.
//!
//! Problems are stated as `min c^T x  s.t.  A x = b,  G x >= h` with free
//! variables. Internally, free variables are split into positive and negative
//! parts and inequalities get surplus variables, yielding a standard-form
//! tableau. Rank-deficient equality blocks are pre-reduced to an equivalent
//! full-rank system before pivoting.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numkernel;

/// Pivot tolerance: entries below this (in magnitude) never pivot.
const PIVOT_TOL: f64 = 1e-9;
/// Feasibility tolerance for the phase-1 optimum and rhs consistency.
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct LpProblem {
    /// Minimize `objective . x`.
    pub objective: DVector<f64>,
    /// Equalities `eq_lhs * x = eq_rhs`.
    pub eq_lhs: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
    /// Inequalities `ineq_lhs * x >= ineq_rhs`.
    pub ineq_lhs: DMatrix<f64>,
    pub ineq_rhs: DVector<f64>,
}

impl LpProblem {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.eq_lhs.ncols() != n && self.eq_lhs.nrows() > 0 {
            return Err(Error::Dimension("eq_lhs column count != variable count".into()));
        }
        if self.ineq_lhs.ncols() != n && self.ineq_lhs.nrows() > 0 {
            return Err(Error::Dimension("ineq_lhs column count != variable count".into()));
        }
        if self.eq_lhs.nrows() != self.eq_rhs.len() {
            return Err(Error::Dimension("eq_lhs rows != eq_rhs length".into()));
        }
        if self.ineq_lhs.nrows() != self.ineq_rhs.len() {
            return Err(Error::Dimension("ineq_lhs rows != ineq_rhs length".into()));
        }
        let finite = self.objective.iter().all(|v| v.is_finite())
            && self.eq_lhs.iter().all(|v| v.is_finite())
            && self.eq_rhs.iter().all(|v| v.is_finite())
            && self.ineq_lhs.iter().all(|v| v.is_finite())
            && self.ineq_rhs.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Input("LP data has non-finite values".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    /// Optimal (or feasible) point in the original variables; zeros otherwise.
    pub point: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Solve the LP to optimality.
pub fn solve_lp(prob: &LpProblem) -> Result<LpResult> {
    run(prob, false)
}

/// Phase-1 only: find any feasible point of the constraints.
pub fn feasible_point(prob: &LpProblem) -> Result<LpResult> {
    run(prob, true)
}

/// Reduce `A x = b` to an equivalent full-row-rank system, or detect an
/// inconsistent right-hand side. Returns None when inconsistent.
fn reduce_equalities(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Option<(DMatrix<f64>, DVector<f64>)>> {
    if a.nrows() == 0 {
        return Ok(Some((a.clone(), b.clone())));
    }
    let f = numkernel::rank_factor(a, numkernel::DEFAULT_RANK_TOL)?;
    if f.rank == a.nrows() {
        return Ok(Some((a.clone(), b.clone())));
    }
    let proj = &f.range_basis * (f.range_basis.transpose() * b);
    let scale = b.amax().max(1.0);
    if (b - &proj).amax() > FEAS_TOL * scale {
        return Ok(None);
    }
    let ut = f.range_basis.transpose();
    Ok(Some((&ut * a, &ut * b)))
}

fn run(prob: &LpProblem, phase1_only: bool) -> Result<LpResult> {
    prob.validate()?;
    let n = prob.num_vars();

    let reduced = reduce_equalities(&prob.eq_lhs, &prob.eq_rhs)?;
    let (eq_a, eq_b) = match reduced {
        Some(pair) => pair,
        None => {
            return Ok(LpResult {
                status: LpStatus::Infeasible,
                point: DVector::zeros(n),
                value: f64::INFINITY,
                iterations: 0,
            })
        }
    };

    let m_eq = eq_a.nrows();
    let m_in = prob.ineq_lhs.nrows();
    let m = m_eq + m_in;
    // Standard-form columns: x+ (n), x- (n), surplus (m_in).
    let cols = 2 * n + m_in;

    let mut a = DMatrix::zeros(m, cols);
    let mut b = DVector::zeros(m);
    for r in 0..m_eq {
        for j in 0..n {
            a[(r, j)] = eq_a[(r, j)];
            a[(r, n + j)] = -eq_a[(r, j)];
        }
        b[r] = eq_b[r];
    }
    for r in 0..m_in {
        for j in 0..n {
            a[(m_eq + r, j)] = prob.ineq_lhs[(r, j)];
            a[(m_eq + r, n + j)] = -prob.ineq_lhs[(r, j)];
        }
        a[(m_eq + r, 2 * n + r)] = -1.0;
        b[m_eq + r] = prob.ineq_rhs[r];
    }
    let mut cost = DVector::zeros(cols);
    for j in 0..n {
        cost[j] = prob.objective[j];
        cost[n + j] = -prob.objective[j];
    }

    let mut tab = Tableau::new(a, b, cost);
    if !tab.phase1()? {
        return Ok(LpResult {
            status: LpStatus::Infeasible,
            point: DVector::zeros(n),
            value: f64::INFINITY,
            iterations: tab.iterations,
        });
    }
    if !phase1_only && !tab.phase2()? {
        return Ok(LpResult {
            status: LpStatus::Unbounded,
            point: DVector::zeros(n),
            value: f64::NEG_INFINITY,
            iterations: tab.iterations,
        });
    }

    let full = tab.primal_point();
    let mut point = DVector::zeros(n);
    for j in 0..n {
        point[j] = full[j] - full[n + j];
    }
    let value = prob.objective.dot(&point);
    Ok(LpResult {
        status: LpStatus::Optimal,
        point,
        value,
        iterations: tab.iterations,
    })
}

/// Dense simplex tableau over standard form `min c x, A x = b, x >= 0`,
/// with artificial columns appended for phase 1.
struct Tableau {
    /// m x (cols + artificials) constraint coefficients, row-reduced in place.
    a: DMatrix<f64>,
    b: DVector<f64>,
    cost: DVector<f64>,
    cols: usize,
    basis: Vec<usize>,
    iterations: usize,
    degenerate_streak: usize,
    bland: bool,
}

impl Tableau {
    fn new(mut a: DMatrix<f64>, mut b: DVector<f64>, cost: DVector<f64>) -> Self {
        let m = a.nrows();
        let cols = a.ncols();
        // Artificial basis requires b >= 0.
        for r in 0..m {
            if b[r] < 0.0 {
                b[r] = -b[r];
                for j in 0..cols {
                    a[(r, j)] = -a[(r, j)];
                }
            }
        }
        let mut full = DMatrix::zeros(m, cols + m);
        full.view_mut((0, 0), (m, cols)).copy_from(&a);
        for r in 0..m {
            full[(r, cols + r)] = 1.0;
        }
        let basis = (cols..cols + m).collect();
        Tableau {
            a: full,
            b,
            cost,
            cols,
            basis,
            iterations: 0,
            degenerate_streak: 0,
            bland: false,
        }
    }

    fn m(&self) -> usize {
        self.a.nrows()
    }

    /// Reduced costs for the given cost vector (artificials get `art_cost`).
    fn reduced_costs(&self, cost: &DVector<f64>, art_cost: f64) -> DVector<f64> {
        let m = self.m();
        let total = self.a.ncols();
        let get = |j: usize| if j < self.cols { cost[j] } else { art_cost };
        // y = c_B applied through the current (already reduced) tableau: since
        // rows are kept in reduced form, z_j = sum_r c_{B(r)} a_{r j}.
        let mut rc = DVector::zeros(total);
        for j in 0..total {
            let mut z = 0.0;
            for r in 0..m {
                z += get(self.basis[r]) * self.a[(r, j)];
            }
            rc[j] = get(j) - z;
        }
        rc
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let m = self.m();
        let total = self.a.ncols();
        let piv = self.a[(row, col)];
        for j in 0..total {
            self.a[(row, j)] /= piv;
        }
        self.b[row] /= piv;
        for r in 0..m {
            if r == row {
                continue;
            }
            let factor = self.a[(r, col)];
            if factor == 0.0 {
                continue;
            }
            for j in 0..total {
                self.a[(r, j)] -= factor * self.a[(row, j)];
            }
            self.b[r] -= factor * self.b[row];
        }
        self.basis[row] = col;
    }

    /// One simplex phase: minimize `cost` (with `art_cost` on artificials,
    /// and artificials barred from entering when `bar_artificials`).
    /// Returns false on an unbounded ray.
    fn optimize(&mut self, cost: &DVector<f64>, art_cost: f64, bar_artificials: bool) -> Result<bool> {
        let m = self.m();
        let enter_limit = if bar_artificials { self.cols } else { self.a.ncols() };
        let stall_limit = 3 * (m + self.cols);
        let hard_cap = 50_000 + 200 * (m + self.cols);
        loop {
            if self.iterations > hard_cap {
                return Err(Error::NonConvergence(format!(
                    "simplex exceeded {hard_cap} pivots"
                )));
            }
            let rc = self.reduced_costs(cost, art_cost);
            let entering = if self.bland {
                (0..enter_limit).find(|&j| rc[j] < -PIVOT_TOL)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..enter_limit {
                    if rc[j] < -PIVOT_TOL && best.map_or(true, |(_, v)| rc[j] < v) {
                        best = Some((j, rc[j]));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(col) = entering else {
                return Ok(true);
            };
            // Ratio test; Bland breaks ties by smallest basis index.
            let mut row: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for r in 0..m {
                let coeff = self.a[(r, col)];
                if coeff > PIVOT_TOL {
                    let ratio = self.b[r] / coeff;
                    let better = match row {
                        None => true,
                        Some(rr) => {
                            ratio < best_ratio - 1e-12
                                || (ratio < best_ratio + 1e-12
                                    && self.basis[r] < self.basis[rr])
                        }
                    };
                    if better {
                        best_ratio = ratio;
                        row = Some(r);
                    }
                }
            }
            let Some(row) = row else {
                return Ok(false); // unbounded
            };
            if best_ratio <= 1e-12 {
                self.degenerate_streak += 1;
                if self.degenerate_streak > stall_limit {
                    self.bland = true;
                }
            } else {
                self.degenerate_streak = 0;
            }
            self.pivot(row, col);
            self.iterations += 1;
        }
    }

    /// Returns false when the constraints are infeasible.
    fn phase1(&mut self) -> Result<bool> {
        let zero_cost = DVector::zeros(self.cols);
        let finished = self.optimize(&zero_cost, 1.0, false)?;
        debug_assert!(finished, "phase 1 objective is bounded below by zero");
        let art_value: f64 = (0..self.m())
            .filter(|&r| self.basis[r] >= self.cols)
            .map(|r| self.b[r])
            .sum();
        let scale = self.b.amax().max(1.0);
        if art_value > FEAS_TOL * scale {
            return Ok(false);
        }
        // Drive remaining artificials out of the basis; a row with no real
        // pivot entry is redundant and can stay (its basic value is ~0).
        for r in 0..self.m() {
            if self.basis[r] >= self.cols {
                if let Some(j) = (0..self.cols).find(|&j| self.a[(r, j)].abs() > PIVOT_TOL) {
                    self.pivot(r, j);
                    self.iterations += 1;
                }
            }
        }
        Ok(true)
    }

    /// Returns false on unboundedness.
    fn phase2(&mut self) -> Result<bool> {
        self.bland = false;
        self.degenerate_streak = 0;
        let cost = self.cost.clone();
        self.optimize(&cost, 0.0, true)
    }

    fn primal_point(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.cols);
        for r in 0..self.m() {
            if self.basis[r] < self.cols {
                x[self.basis[r]] = self.b[r];
            }
        }
        x
    }
}
