//! Bounded-variable primal simplex over a dense tableau.
//!
//! Solves the linear relaxation of a [`MilpModel`]: integrality is dropped
//! and the caller supplies explicit lower/upper bound vectors for the
//! structural variables (the branch-and-bound search tightens these per
//! node).  Each constraint row gains one slack column so the working system
//! is `A x + s = rhs` with slack bounds encoding the row sense:
//!
//! * `<=` rows: slack in `[0, +inf)`
//! * `>=` rows: slack in `(-inf, 0]`
//! * `=`  rows: slack fixed at `0`
//!
//! The solver keeps the full updated tableau `B^-1 [A | I]` in dense
//! row-major storage together with the transformed right-hand side, the
//! phase-two reduced-cost row, and the basic variable values.  Nonbasic
//! variables rest on one of their bounds (free variables rest at zero).
//!
//! Phase one minimises the total bound violation of the basic variables
//! with a composite objective: the violation gradient is re-priced from the
//! current infeasible rows each iteration, and an out-of-bounds basic
//! variable blocks the ratio test exactly when the step would carry it back
//! to the bound it violates.  Phase two prices the true objective from the
//! maintained cost row.  Both phases use Dantzig pricing (most negative
//! reduced cost) and fall back to Bland's least-index rule after a run of
//! degenerate steps so the method cannot cycle.  The tableau, transformed
//! right-hand side, and cost row are recomputed from first principles at a
//! fixed pivot cadence to keep round-off from accumulating; if the final
//! basis turns out to have drifted out of feasibility the phases rerun.
//!
//! Everything here is deterministic: identical inputs produce the identical
//! pivot sequence and the identical solution vector.  The one exception is
//! the optional wall-clock deadline of [`solve_lp_within`]: heavily
//! degenerate programs can churn through pivots for a long time even with
//! anti-cycling in place, so a caller with a time budget can have the solve
//! cut off instead of waiting for the pivot ceiling.

use crate::model::{MilpModel, Sense};
use std::time::Instant;
use thiserror::Error;

/// A solve that was cut short: no verdict on the program was reached.  The
/// pivot ceiling and numerical failures indicate pathological inputs; the
/// deadline simply reports that the caller's budget ran out first.
#[derive(Debug, Error)]
pub enum SimplexError {
    /// The pivot count hit the hard ceiling.
    #[error("simplex iteration limit reached after {0} pivots")]
    IterationLimit(usize),
    /// The caller's deadline passed mid-solve.
    #[error("simplex deadline passed after {0} pivots")]
    Deadline(usize),
    /// The tableau lost numerical coherence beyond what refreshes repair.
    #[error("simplex numerical failure: {0}")]
    Numerical(String),
}

/// Terminal classification of a linear program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    /// An optimal basic solution was found.
    Optimal,
    /// No point satisfies the rows and bounds together.
    Infeasible,
    /// The objective decreases without limit.
    Unbounded,
}

/// Result of one linear-programming solve.
#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Objective value including the model constant (only meaningful when
    /// `status == Optimal`).
    pub objective: f64,
    /// Structural variable values (empty unless `status == Optimal`).
    pub x: Vec<f64>,
    /// Number of simplex steps (pivots plus bound flips) performed.
    pub iterations: usize,
}

/// Primal feasibility tolerance on basic variable values.
const FEAS_TOL: f64 = 1e-9;
/// Reduced-cost tolerance for declaring optimality.
const COST_TOL: f64 = 1e-9;
/// Smallest tableau entry accepted as a pivot element.
const PIVOT_TOL: f64 = 1e-10;
/// Consecutive degenerate steps before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 60;
/// Pivots between full tableau-independent refreshes of beta/costs/values.
const REFRESH_EVERY: usize = 128;
/// Hard ceiling on total simplex steps for one solve.
const MAX_ITER: usize = 400_000;
/// Pivots between wall-clock checks against the caller's deadline.
const DEADLINE_EVERY: usize = 256;

/// Solve the linear relaxation of `model` with the supplied structural
/// bounds (one entry per model variable; entries may be infinite).  The
/// model is assumed to have passed [`MilpModel::validate`].
pub fn solve_lp(model: &MilpModel, lb: &[f64], ub: &[f64]) -> Result<LpOutcome, SimplexError> {
    solve_lp_within(model, lb, ub, None)
}

/// [`solve_lp`] with an optional wall-clock cutoff, checked every
/// [`DEADLINE_EVERY`] pivots.  Once the deadline has passed the solve stops
/// with [`SimplexError::Deadline`] instead of running to a verdict.
pub fn solve_lp_within(
    model: &MilpModel,
    lb: &[f64],
    ub: &[f64],
    deadline: Option<Instant>,
) -> Result<LpOutcome, SimplexError> {
    let n = model.n_variables();
    assert_eq!(lb.len(), n, "lower bound vector arity");
    assert_eq!(ub.len(), n, "upper bound vector arity");
    if lb.iter().zip(ub).any(|(l, u)| l > u) {
        return Ok(LpOutcome {
            status: LpStatus::Infeasible,
            objective: f64::INFINITY,
            x: Vec::new(),
            iterations: 0,
        });
    }
    let mut tableau = Tableau::build(model, lb, ub);
    tableau.deadline = deadline;
    let status = tableau.optimize()?;
    let (objective, x) = if status == LpStatus::Optimal {
        let x = tableau.structural_values();
        let objective = model
            .objective_value(&x)
            .expect("solution arity matches the model");
        (objective, x)
    } else {
        (f64::INFINITY, Vec::new())
    };
    Ok(LpOutcome {
        status,
        objective,
        x,
        iterations: tableau.iterations,
    })
}

// ---------------------------------------------------------------------------
// dense tableau state
// ---------------------------------------------------------------------------

/// One step chosen by the ratio test.
enum Step {
    /// The entering variable travels the full span between its bounds.
    Flip(f64),
    /// A basic variable blocks: pivot in row `row` after a step of `delta`,
    /// with the leaving variable resting on its upper (`true`) or lower
    /// (`false`) bound.
    Pivot {
        row: usize,
        delta: f64,
        to_upper: bool,
    },
    /// Nothing blocks the step.
    Unbounded,
}

struct Tableau {
    /// Structural column count.
    n: usize,
    /// Row count.
    m: usize,
    /// Total column count (`n + m`, slacks appended after structurals).
    ncols: usize,
    /// Dense row-major tableau, kept equal to `B^-1 [A | I]`.
    t: Vec<f64>,
    /// Transformed right-hand side `B^-1 rhs`.
    beta: Vec<f64>,
    /// Phase-two reduced-cost row, kept equal to `c - c_B B^-1 [A | I]`.
    obj: Vec<f64>,
    /// Column basic in each row.
    basis: Vec<usize>,
    /// Inverse of `basis`: the row a column is basic in, if any.
    row_of: Vec<Option<usize>>,
    /// For nonbasic columns, whether the column rests on its upper bound.
    at_upper: Vec<bool>,
    /// Per-column bounds (structurals then slacks).
    lb: Vec<f64>,
    ub: Vec<f64>,
    /// Original objective coefficients per column (slacks cost zero).
    cost: Vec<f64>,
    /// Original right-hand side values.
    rhs0: Vec<f64>,
    /// Current values of the basic variables, row-aligned.
    xb: Vec<f64>,
    /// Reusable copy of the pivot row during eliminations.
    scratch: Vec<f64>,
    iterations: usize,
    degenerate_run: usize,
    /// Optional wall-clock cutoff checked every [`DEADLINE_EVERY`] pivots.
    deadline: Option<Instant>,
}

impl Tableau {
    fn build(model: &MilpModel, var_lb: &[f64], var_ub: &[f64]) -> Self {
        let n = model.n_variables();
        let m = model.n_constraints();
        let ncols = n + m;
        let mut t = vec![0.0; m * ncols];
        let mut lb = vec![0.0; ncols];
        let mut ub = vec![0.0; ncols];
        let mut cost = vec![0.0; ncols];
        lb[..n].copy_from_slice(var_lb);
        ub[..n].copy_from_slice(var_ub);
        cost[..n].copy_from_slice(&model.objective.coeffs);
        let mut rhs0 = Vec::with_capacity(m);
        for (r, row) in model.constraints.iter().enumerate() {
            let base = r * ncols;
            for &(var, coef) in &row.terms {
                t[base + var] = coef;
            }
            t[base + n + r] = 1.0;
            let (slo, shi) = match row.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lb[n + r] = slo;
            ub[n + r] = shi;
            rhs0.push(row.rhs);
        }
        let beta = rhs0.clone();
        let obj = cost.clone();
        let basis: Vec<usize> = (n..ncols).collect();
        let mut row_of = vec![None; ncols];
        for (r, &col) in basis.iter().enumerate() {
            row_of[col] = Some(r);
        }
        // Nonbasic columns start on a finite bound, preferring the lower
        // one; free columns rest at zero.
        let at_upper: Vec<bool> = (0..ncols)
            .map(|j| !lb[j].is_finite() && ub[j].is_finite())
            .collect();
        let mut tableau = Tableau {
            n,
            m,
            ncols,
            t,
            beta,
            obj,
            basis,
            row_of,
            at_upper,
            lb,
            ub,
            cost,
            rhs0,
            xb: vec![0.0; m],
            scratch: vec![0.0; ncols],
            iterations: 0,
            degenerate_run: 0,
            deadline: None,
        };
        tableau.recompute_xb();
        tableau
    }

    /// Resting value of a nonbasic column.
    fn nonbasic_value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.ub[j]
        } else if self.lb[j].is_finite() {
            self.lb[j]
        } else if self.ub[j].is_finite() {
            self.ub[j]
        } else {
            0.0
        }
    }

    /// Rebuild the basic values from the tableau and nonbasic rests.
    fn recompute_xb(&mut self) {
        self.xb.copy_from_slice(&self.beta);
        for j in 0..self.ncols {
            if self.row_of[j].is_some() {
                continue;
            }
            let v = self.nonbasic_value(j);
            if v == 0.0 {
                continue;
            }
            for r in 0..self.m {
                self.xb[r] -= self.t[r * self.ncols + j] * v;
            }
        }
    }

    /// Recompute `beta` and the cost row from first principles.  The slack
    /// block of the tableau is `B^-1`, so `beta = slackblock * rhs0`; the
    /// cost row is `c - c_B * tableau`.
    fn refresh(&mut self) {
        for r in 0..self.m {
            let row = &self.t[r * self.ncols + self.n..(r + 1) * self.ncols];
            self.beta[r] = row.iter().zip(&self.rhs0).map(|(a, b)| a * b).sum();
        }
        self.obj.copy_from_slice(&self.cost);
        for r in 0..self.m {
            let cb = self.cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            let base = r * self.ncols;
            for j in 0..self.ncols {
                self.obj[j] -= cb * self.t[base + j];
            }
        }
        self.recompute_xb();
    }

    /// Total bound violation of the basic variables plus the violation
    /// gradient with respect to each column's value.
    fn phase1_costs(&self) -> (Vec<f64>, f64) {
        let mut d = vec![0.0; self.ncols];
        let mut total = 0.0;
        for r in 0..self.m {
            let bvar = self.basis[r];
            let xv = self.xb[r];
            let base = r * self.ncols;
            if xv > self.ub[bvar] + FEAS_TOL {
                total += xv - self.ub[bvar];
                for j in 0..self.ncols {
                    d[j] -= self.t[base + j];
                }
            } else if xv < self.lb[bvar] - FEAS_TOL {
                total += self.lb[bvar] - xv;
                for j in 0..self.ncols {
                    d[j] += self.t[base + j];
                }
            }
        }
        (d, total)
    }

    /// Pick an entering column given per-column reduced costs, or `None`
    /// when every nonbasic column prices out.  Returns the column and the
    /// direction it will move (`+1` up from its rest, `-1` down).
    fn price(&self, bland: bool, reduced: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.ncols {
            if self.row_of[j].is_some() || self.lb[j] == self.ub[j] {
                continue;
            }
            let dj = reduced[j];
            let free = !self.lb[j].is_finite() && !self.ub[j].is_finite();
            let (eligible, dir) = if free {
                (dj.abs() > COST_TOL, if dj < 0.0 { 1.0 } else { -1.0 })
            } else if self.at_upper[j] {
                (dj > COST_TOL, -1.0)
            } else {
                (dj < -COST_TOL, 1.0)
            };
            if !eligible {
                continue;
            }
            if bland {
                return Some((j, dir));
            }
            let score = dj.abs();
            match best {
                Some((_, _, s)) if score <= s => {}
                _ => best = Some((j, dir, score)),
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Longest step the entering column can take in direction `dir`.
    ///
    /// In phase one an out-of-bounds basic variable blocks only at the
    /// bound it currently violates (and only when the step moves it back
    /// toward that bound); in-bounds basics block at whichever finite bound
    /// the step pushes them against, exactly as in phase two.
    fn ratio_test(&self, enter: usize, dir: f64, phase1: bool, bland: bool) -> Step {
        let own_span = self.ub[enter] - self.lb[enter];
        let mut best_delta = if own_span.is_finite() {
            own_span
        } else {
            f64::INFINITY
        };
        // (row, to_upper, |pivot|, basic column) of the current blocker.
        let mut blocker: Option<(usize, bool, f64, usize)> = None;
        for r in 0..self.m {
            let coef = self.t[r * self.ncols + enter];
            if coef.abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -coef * dir;
            let bvar = self.basis[r];
            let xv = self.xb[r];
            let (blo, bhi) = (self.lb[bvar], self.ub[bvar]);
            let candidate = if phase1 && xv > bhi + FEAS_TOL {
                if rate < 0.0 {
                    Some(((xv - bhi) / -rate, true))
                } else {
                    None
                }
            } else if phase1 && xv < blo - FEAS_TOL {
                if rate > 0.0 {
                    Some(((blo - xv) / rate, false))
                } else {
                    None
                }
            } else if rate > 0.0 {
                bhi.is_finite().then(|| (((bhi - xv) / rate).max(0.0), true))
            } else {
                blo.is_finite().then(|| (((xv - blo) / -rate).max(0.0), false))
            };
            let Some((delta, to_upper)) = candidate else {
                continue;
            };
            let delta = delta.max(0.0);
            let replaces = if delta < best_delta - 1e-12 {
                true
            } else if delta > best_delta + 1e-12 {
                false
            } else if bland {
                // Bland mode: smallest basic column among ties.
                blocker.map_or(true, |(_, _, _, bv)| bvar < bv)
            } else {
                // Prefer the largest pivot element, then the lowest row.
                match blocker {
                    None => true,
                    Some((br, _, bc, _)) => {
                        coef.abs() > bc + 1e-12
                            || ((coef.abs() - bc).abs() <= 1e-12 && r < br)
                    }
                }
            };
            if replaces {
                best_delta = best_delta.min(delta);
                blocker = Some((r, to_upper, coef.abs(), bvar));
            }
        }
        match blocker {
            Some((row, to_upper, _, _)) => Step::Pivot {
                row,
                delta: best_delta,
                to_upper,
            },
            None if best_delta.is_finite() => Step::Flip(best_delta),
            None => Step::Unbounded,
        }
    }

    /// Move the entering column across its whole bound span.
    fn apply_flip(&mut self, enter: usize, dir: f64, delta: f64) {
        for r in 0..self.m {
            let coef = self.t[r * self.ncols + enter];
            if coef != 0.0 {
                self.xb[r] -= coef * dir * delta;
            }
        }
        self.at_upper[enter] = !self.at_upper[enter];
        self.step_bookkeeping(delta);
    }

    /// Exchange the entering column with the basic variable in `row`.
    fn apply_pivot(&mut self, enter: usize, dir: f64, row: usize, delta: f64, to_upper: bool) {
        let enter_value = self.nonbasic_value(enter) + dir * delta;
        for r in 0..self.m {
            if r == row {
                continue;
            }
            let coef = self.t[r * self.ncols + enter];
            if coef != 0.0 {
                self.xb[r] -= coef * dir * delta;
            }
        }
        let leaving = self.basis[row];
        self.at_upper[leaving] = to_upper;
        self.row_of[leaving] = None;
        // Eliminate the entering column from every other row, the cost row,
        // and the transformed right-hand side.
        let base = row * self.ncols;
        let pivot = self.t[base + enter];
        let inv = 1.0 / pivot;
        for j in 0..self.ncols {
            self.t[base + j] *= inv;
        }
        self.beta[row] *= inv;
        self.scratch.copy_from_slice(&self.t[base..base + self.ncols]);
        for r in 0..self.m {
            if r == row {
                continue;
            }
            let factor = self.t[r * self.ncols + enter];
            if factor == 0.0 {
                continue;
            }
            let other = &mut self.t[r * self.ncols..(r + 1) * self.ncols];
            for (o, p) in other.iter_mut().zip(&self.scratch) {
                *o -= factor * p;
            }
            self.beta[r] -= factor * self.beta[row];
        }
        let factor = self.obj[enter];
        if factor != 0.0 {
            for (o, p) in self.obj.iter_mut().zip(&self.scratch) {
                *o -= factor * p;
            }
        }
        self.basis[row] = enter;
        self.row_of[enter] = Some(row);
        self.xb[row] = enter_value;
        self.step_bookkeeping(delta);
    }

    fn step_bookkeeping(&mut self, delta: f64) {
        self.iterations += 1;
        if delta.abs() < 1e-12 {
            self.degenerate_run += 1;
        } else {
            self.degenerate_run = 0;
        }
    }

    fn check_budget(&mut self) -> Result<(), SimplexError> {
        if self.iterations >= MAX_ITER {
            return Err(SimplexError::IterationLimit(self.iterations));
        }
        if self.iterations % DEADLINE_EVERY == 0 {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    return Err(SimplexError::Deadline(self.iterations));
                }
            }
        }
        if self.iterations > 0 && self.iterations % REFRESH_EVERY == 0 {
            self.refresh();
        }
        Ok(())
    }

    /// Drive the basis to primal feasibility.  `Ok(true)` means feasible.
    fn phase_one(&mut self) -> Result<bool, SimplexError> {
        loop {
            self.check_budget()?;
            let (d, total) = self.phase1_costs();
            if total <= 1e-7 {
                return Ok(true);
            }
            let bland = self.degenerate_run >= DEGENERATE_LIMIT;
            let Some((enter, dir)) = self.price(bland, &d) else {
                return Ok(false);
            };
            match self.ratio_test(enter, dir, true, bland) {
                Step::Flip(delta) => self.apply_flip(enter, dir, delta),
                Step::Pivot {
                    row,
                    delta,
                    to_upper,
                } => self.apply_pivot(enter, dir, row, delta, to_upper),
                Step::Unbounded => {
                    return Err(SimplexError::Numerical(
                        "unblocked improving step while infeasible".into(),
                    ))
                }
            }
        }
    }

    /// Minimise the true objective from a feasible basis.
    fn phase_two(&mut self) -> Result<LpStatus, SimplexError> {
        loop {
            self.check_budget()?;
            let bland = self.degenerate_run >= DEGENERATE_LIMIT;
            let Some((enter, dir)) = self.price(bland, &self.obj) else {
                return Ok(LpStatus::Optimal);
            };
            match self.ratio_test(enter, dir, false, bland) {
                Step::Flip(delta) => self.apply_flip(enter, dir, delta),
                Step::Pivot {
                    row,
                    delta,
                    to_upper,
                } => self.apply_pivot(enter, dir, row, delta, to_upper),
                Step::Unbounded => return Ok(LpStatus::Unbounded),
            }
        }
    }

    fn optimize(&mut self) -> Result<LpStatus, SimplexError> {
        let mut attempts = 0;
        loop {
            if !self.phase_one()? {
                return Ok(LpStatus::Infeasible);
            }
            let status = self.phase_two()?;
            if status != LpStatus::Optimal {
                return Ok(status);
            }
            // Rebuild everything that pivoting maintained incrementally and
            // confirm the basis is still feasible; rerun on drift.
            self.refresh();
            let (_, total) = self.phase1_costs();
            if total <= 1e-6 {
                return Ok(LpStatus::Optimal);
            }
            attempts += 1;
            if attempts >= 3 {
                return Err(SimplexError::Numerical(
                    "basis feasibility lost beyond repair".into(),
                ));
            }
        }
    }

    /// Values of the structural columns in the current basis.
    fn structural_values(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| match self.row_of[j] {
                Some(r) => self.xb[r],
                None => self.nonbasic_value(j),
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
