//! Best-first branch-and-bound search over binary variables.
//!
//! The search keeps a priority queue of open nodes ordered by their linear
//! relaxation value (ties broken by creation order, so runs are fully
//! deterministic).  Each node stores its own bound vectors; children tighten
//! exactly one binary variable to `0` or to `1`.  Child relaxations are
//! solved eagerly at creation, their bounds clamped to never fall below the
//! parent's, and children whose bound cannot beat the incumbent are dropped
//! on the spot.
//!
//! Branching picks the fractional binary with the highest
//! [`Variable::branch_priority`], breaking ties towards the value closest
//! to one half and then towards the lowest variable id.
//!
//! Two hooks let a caller inject problem knowledge without the solver
//! learning anything about the problem:
//!
//! * `warm_starts` — candidate solutions checked once up front; every
//!   feasible one seeds the incumbent.
//! * `rounder` — a callback offered every node relaxation; it may return a
//!   repaired integral candidate which, when feasible and better, also
//!   becomes the incumbent.
//!
//! The reported `bound` never decreases, the incumbent never worsens, and
//! `gap_percent` is `100 * (incumbent - bound) / max(|incumbent|, epsilon)`,
//! forced to exactly zero when the tree is exhausted and the result proved
//! optimal.  Progress is recorded as line-oriented records convertible to
//! CSV.
//!
//! A node relaxation can fail to reach a verdict: heavily degenerate
//! programs may churn into the simplex pivot ceiling, and every relaxation
//! runs under the search's own wall-clock deadline.  Such a node is
//! abandoned rather than fatal — its subtree is simply left unexplored at
//! the parent's bound, which keeps the incumbent and the rest of the search
//! alive.  An abandoned subtree that the final incumbent does not dominate
//! blocks the `Optimal` claim and caps the reported bound, so the summary
//! never overstates what was proved.

use crate::model::{MilpModel, ModelError, VarKind};
use crate::solver::simplex::{solve_lp_within, LpStatus, SimplexError};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

/// Repair callback: maps a node relaxation to a candidate integral point.
pub type Rounder = Arc<dyn Fn(&[f64]) -> Option<Vec<f64>> + Send + Sync>;

/// Knobs for one branch-and-bound run.
#[derive(Clone)]
pub struct SolveOptions {
    /// Wall-clock budget; the search stops gracefully when it is spent.
    pub time_limit: Duration,
    /// Recorded in the report and log; the search itself is deterministic
    /// and does not consume randomness.
    pub seed: u64,
    /// Optional ceiling on the number of relaxations solved.
    pub max_nodes: Option<usize>,
    /// A binary counts as integral when within this distance of 0 or 1.
    pub integrality_tol: f64,
    /// Row/bound violation tolerance when admitting incumbents.
    pub feasibility_tol: f64,
    /// Floor for the denominator of the relative gap.
    pub gap_epsilon: f64,
    /// Candidate solutions to seed the incumbent with.
    pub warm_starts: Vec<Vec<f64>>,
    /// Optional repair callback run on every node relaxation.
    pub rounder: Option<Rounder>,
}

impl SolveOptions {
    pub fn new(time_limit: Duration, seed: u64) -> Self {
        SolveOptions {
            time_limit,
            seed,
            max_nodes: None,
            integrality_tol: 1e-6,
            feasibility_tol: 1e-6,
            gap_epsilon: 1e-10,
            warm_starts: Vec::new(),
            rounder: None,
        }
    }
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions::new(Duration::from_secs(600), 0)
    }
}

impl fmt::Debug for SolveOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolveOptions")
            .field("time_limit", &self.time_limit)
            .field("seed", &self.seed)
            .field("max_nodes", &self.max_nodes)
            .field("integrality_tol", &self.integrality_tol)
            .field("feasibility_tol", &self.feasibility_tol)
            .field("gap_epsilon", &self.gap_epsilon)
            .field("warm_starts", &self.warm_starts.len())
            .field("rounder", &self.rounder.is_some())
            .finish()
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// The tree was exhausted: the incumbent is proved optimal.
    Optimal,
    /// A budget ran out first; the incumbent is feasible but the gap is open.
    FeasibleTimeLimit,
}

/// One progress line: a snapshot of the search state at an event.
#[derive(Debug, Clone)]
pub struct LogRecord {
    pub seconds: f64,
    pub nodes: usize,
    pub incumbent: Option<f64>,
    pub bound: f64,
    pub gap_percent: Option<f64>,
}

/// Summary of a finished run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Objective of the returned solution.
    pub objective: f64,
    /// Proven lower bound on the optimum.
    pub bound: f64,
    /// Relative gap in percent; exactly zero when `status` is `Optimal`.
    pub gap_percent: f64,
    /// Relaxations solved.
    pub nodes: usize,
    /// Total simplex steps across all relaxations.
    pub simplex_iterations: usize,
    pub wall_seconds: f64,
    pub seed: u64,
    pub log: Vec<LogRecord>,
}

impl SolveReport {
    /// The progress log as CSV, one line per record.  Values not yet known
    /// at the time of a record (no incumbent, no finite bound) are left
    /// empty.
    pub fn log_csv(&self) -> String {
        let mut out = String::from("seconds,nodes,incumbent,bound,gap_percent\n");
        for rec in &self.log {
            let incumbent = rec.incumbent.map(|v| v.to_string()).unwrap_or_default();
            let bound = if rec.bound.is_finite() {
                rec.bound.to_string()
            } else {
                String::new()
            };
            let gap = rec
                .gap_percent
                .map(|v| format!("{v:.4}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{:.3},{},{},{},{}\n",
                rec.seconds, rec.nodes, incumbent, bound, gap
            ));
        }
        out
    }
}

/// A finished solve: the best solution found plus the run summary.
#[derive(Debug, Clone)]
pub struct Solved {
    pub x: Vec<f64>,
    pub report: SolveReport,
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("model admits no feasible solution")]
    Infeasible,
    #[error("model objective is unbounded below")]
    Unbounded,
    #[error("budget exhausted before any feasible solution was found")]
    NoIncumbent,
    #[error("bad solve options: {0}")]
    BadOptions(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

// ---------------------------------------------------------------------------

/// An open node: bound vectors plus its already-solved relaxation.
struct Node {
    bound: f64,
    id: u64,
    lb: Vec<f64>,
    ub: Vec<f64>,
    x: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.bound.total_cmp(&other.bound) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    /// Greatest priority = smallest bound, then smallest id, so the default
    /// max-heap pops nodes best-first in creation order.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Fractional binary to branch on: highest priority, then nearest one half,
/// then lowest id.  `None` when every binary is integral at `tol`.
pub(crate) fn pick_branching(model: &MilpModel, x: &[f64], tol: f64) -> Option<usize> {
    let mut best: Option<(i32, f64, usize)> = None;
    for (id, var) in model.variables.iter().enumerate() {
        if var.kind != VarKind::Binary {
            continue;
        }
        let value = x[id];
        if (value - value.round()).abs() <= tol {
            continue;
        }
        let half_distance = (value - 0.5).abs();
        let replaces = match best {
            None => true,
            Some((priority, dist, _)) => {
                var.branch_priority > priority
                    || (var.branch_priority == priority && half_distance < dist)
            }
        };
        if replaces {
            best = Some((var.branch_priority, half_distance, id));
        }
    }
    best.map(|(_, _, id)| id)
}

fn is_integral(model: &MilpModel, x: &[f64], tol: f64) -> bool {
    model
        .variables
        .iter()
        .zip(x)
        .all(|(v, &value)| v.kind != VarKind::Binary || (value - value.round()).abs() <= tol)
}

/// Solve with the given wall-clock budget and seed and default options.
pub fn solve(model: &MilpModel, time_limit: Duration, seed: u64) -> Result<Solved, SolveError> {
    solve_with(model, &SolveOptions::new(time_limit, seed))
}

/// Solve with full control over the options.
pub fn solve_with(model: &MilpModel, options: &SolveOptions) -> Result<Solved, SolveError> {
    model.validate()?;
    if options.time_limit <= Duration::ZERO {
        return Err(SolveError::BadOptions("time limit must be positive".into()));
    }
    if options.integrality_tol <= 0.0 || options.feasibility_tol <= 0.0 {
        return Err(SolveError::BadOptions("tolerances must be positive".into()));
    }
    if options.max_nodes == Some(0) {
        return Err(SolveError::BadOptions("node budget must be positive".into()));
    }
    Search::new(model, options).run()
}

struct Search<'a> {
    model: &'a MilpModel,
    options: &'a SolveOptions,
    start: Instant,
    /// Wall-clock cutoff handed to every relaxation solve.
    deadline: Option<Instant>,
    incumbent: Option<(f64, Vec<f64>)>,
    heap: BinaryHeap<Node>,
    next_id: u64,
    nodes: usize,
    simplex_iterations: usize,
    /// Relaxations abandoned without a verdict (pivot ceiling, deadline, or
    /// numerical failure); their subtrees stay open at the parent bound.
    stalled: usize,
    /// Least parent bound over all abandoned subtrees.
    stalled_bound: f64,
    log: Vec<LogRecord>,
    last_logged_bound: f64,
}

impl<'a> Search<'a> {
    fn new(model: &'a MilpModel, options: &'a SolveOptions) -> Self {
        let start = Instant::now();
        Search {
            model,
            options,
            start,
            deadline: start.checked_add(options.time_limit),
            incumbent: None,
            heap: BinaryHeap::new(),
            next_id: 0,
            nodes: 0,
            simplex_iterations: 0,
            stalled: 0,
            stalled_bound: f64::INFINITY,
            log: Vec::new(),
            last_logged_bound: f64::NEG_INFINITY,
        }
    }

    /// Admit `candidate` as the incumbent when it is feasible, integral, and
    /// strictly better than the current one.
    fn offer_incumbent(&mut self, candidate: &[f64], bound_now: f64) -> bool {
        if candidate.len() != self.model.n_variables()
            || candidate.iter().any(|v| !v.is_finite())
        {
            return false;
        }
        match self.model.check_solution(candidate, self.options.feasibility_tol) {
            Ok(violations) if violations.is_empty() => {}
            _ => return false,
        }
        let Ok(objective) = self.model.objective_value(candidate) else {
            return false;
        };
        if let Some((best, _)) = self.incumbent {
            if objective >= best - 1e-12 {
                return false;
            }
        }
        self.incumbent = Some((objective, candidate.to_vec()));
        self.push_log(bound_now);
        true
    }

    fn gap_percent(&self, incumbent: f64, bound: f64) -> f64 {
        let span = (incumbent - bound).max(0.0);
        100.0 * span / incumbent.abs().max(self.options.gap_epsilon)
    }

    fn push_log(&mut self, bound: f64) {
        let incumbent = self.incumbent.as_ref().map(|(v, _)| *v);
        let gap = match incumbent {
            Some(inc) if bound.is_finite() => Some(self.gap_percent(inc, bound)),
            _ => None,
        };
        self.log.push(LogRecord {
            seconds: self.start.elapsed().as_secs_f64(),
            nodes: self.nodes,
            incumbent,
            bound,
            gap_percent: gap,
        });
        if bound.is_finite() {
            self.last_logged_bound = self.last_logged_bound.max(bound);
        }
    }

    fn out_of_budget(&self) -> bool {
        self.start.elapsed() >= self.options.time_limit
            || self
                .options
                .max_nodes
                .is_some_and(|cap| self.nodes >= cap)
    }

    /// Solve one relaxation, run the repair callback on its solution, and
    /// queue it unless integral or dominated.
    fn expand(
        &mut self,
        lb: Vec<f64>,
        ub: Vec<f64>,
        parent_bound: f64,
    ) -> Result<Option<f64>, SolveError> {
        let outcome = match solve_lp_within(self.model, &lb, &ub, self.deadline) {
            Ok(outcome) => outcome,
            Err(stall) => {
                self.abandon(parent_bound, &stall);
                return Ok(Some(parent_bound));
            }
        };
        self.nodes += 1;
        self.simplex_iterations += outcome.iterations;
        match outcome.status {
            LpStatus::Infeasible => return Ok(None),
            LpStatus::Unbounded => return Err(SolveError::Unbounded),
            LpStatus::Optimal => {}
        }
        let bound = outcome.objective.max(parent_bound);
        let frontier = self.frontier_bound(bound);
        if let Some(rounder) = self.options.rounder.clone() {
            if let Some(candidate) = rounder(&outcome.x) {
                self.offer_incumbent(&candidate, frontier);
            }
        }
        if is_integral(self.model, &outcome.x, self.options.integrality_tol) {
            self.offer_incumbent(&outcome.x, frontier);
            return Ok(Some(bound));
        }
        if let Some((best, _)) = self.incumbent {
            if bound >= best - 1e-9 {
                return Ok(Some(bound));
            }
        }
        let node = Node {
            bound,
            id: self.next_id,
            lb,
            ub,
            x: outcome.x,
        };
        self.next_id += 1;
        self.heap.push(node);
        Ok(Some(bound))
    }

    /// Record a relaxation that reached no verdict and leave its subtree
    /// unexplored: the parent bound still covers everything inside it.
    fn abandon(&mut self, parent_bound: f64, stall: &SimplexError) {
        self.nodes += 1;
        self.simplex_iterations += match stall {
            SimplexError::IterationLimit(n) | SimplexError::Deadline(n) => *n,
            SimplexError::Numerical(_) => 0,
        };
        self.stalled += 1;
        self.stalled_bound = self.stalled_bound.min(parent_bound);
    }

    /// Best bound over everything still open, taking an in-flight value
    /// into account; the incumbent when the tree is exhausted.
    fn frontier_bound(&self, in_flight: f64) -> f64 {
        let heap_bound = self.heap.peek().map(|n| n.bound);
        let open = match heap_bound {
            Some(h) => h.min(in_flight),
            None => in_flight,
        }
        .min(self.stalled_bound);
        if open.is_finite() || self.stalled > 0 {
            open
        } else {
            self.incumbent.as_ref().map_or(f64::NEG_INFINITY, |(v, _)| *v)
        }
    }

    fn run(mut self) -> Result<Solved, SolveError> {
        let lb0: Vec<f64> = self.model.variables.iter().map(|v| v.lb).collect();
        let ub0: Vec<f64> = self.model.variables.iter().map(|v| v.ub).collect();

        let warm_starts = self.options.warm_starts.clone();
        for candidate in &warm_starts {
            self.offer_incumbent(candidate, f64::NEG_INFINITY);
        }

        let root = self.expand(lb0, ub0, f64::NEG_INFINITY)?;
        let root_bound = match root {
            None => return Err(SolveError::Infeasible),
            Some(bound) => bound,
        };
        self.push_log(self.frontier_bound(root_bound));

        let mut stopped = false;
        while let Some(node) = self.heap.pop() {
            if self.out_of_budget() {
                self.heap.push(node);
                stopped = true;
                break;
            }
            if let Some((best, _)) = self.incumbent {
                if node.bound >= best - 1e-9 {
                    // Best-first order: every other open node is at least as
                    // bad, so the tree is exhausted and the incumbent proved.
                    self.heap.clear();
                    break;
                }
            }
            if node.bound > self.last_logged_bound + 1e-12 {
                self.push_log(node.bound);
            }
            let Some(branch_var) = pick_branching(
                self.model,
                &node.x,
                self.options.integrality_tol,
            ) else {
                // Fully integral relaxation: the node is itself a solution.
                let frontier = self.frontier_bound(node.bound);
                self.offer_incumbent(&node.x, frontier);
                continue;
            };
            for fixed in [0.0, 1.0] {
                if self.out_of_budget() {
                    stopped = true;
                    break;
                }
                let mut lb = node.lb.clone();
                let mut ub = node.ub.clone();
                lb[branch_var] = fixed;
                ub[branch_var] = fixed;
                self.expand(lb, ub, node.bound)?;
            }
            if stopped {
                // Re-queue the popped node: together with any solved child
                // it keeps the frontier bound valid for the report.
                self.heap.push(node);
                break;
            }
        }

        let Some((best, x)) = self.incumbent.clone() else {
            // With abandoned subtrees around, exhausting the heap proves
            // nothing: feasible points may hide where no verdict was reached.
            return Err(if stopped || self.stalled > 0 {
                SolveError::NoIncumbent
            } else {
                SolveError::Infeasible
            });
        };
        // The loop only ends with a nonempty heap when a budget stopped it.
        // An abandoned subtree also counts as open unless the incumbent
        // already dominates its bound.
        let open_bound = self.heap.peek().map(|n| n.bound);
        let stalled_open =
            (self.stalled > 0 && self.stalled_bound < best - 1e-9).then_some(self.stalled_bound);
        let open = match (open_bound, stalled_open) {
            (Some(h), Some(s)) => Some(h.min(s)),
            (h, None) => h,
            (None, s) => s,
        };
        let (status, bound) = match open {
            Some(open) if open < best - 1e-9 => (SolveStatus::FeasibleTimeLimit, open),
            _ => (SolveStatus::Optimal, best),
        };
        self.push_log(bound);
        let gap_percent = if status == SolveStatus::Optimal {
            0.0
        } else {
            self.gap_percent(best, bound)
        };
        let report = SolveReport {
            status,
            objective: best,
            bound,
            gap_percent,
            nodes: self.nodes,
            simplex_iterations: self.simplex_iterations,
            wall_seconds: self.start.elapsed().as_secs_f64(),
            seed: self.options.seed,
            log: self.log,
        };
        Ok(Solved { x, report })
    }
}

// ---------------------------------------------------------------------------
