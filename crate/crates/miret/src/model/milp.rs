//! Generic mixed-integer linear program container.
//!
//! Holds variables (with bounds, integrality and a branching priority),
//! named linear constraints, and a linear objective with a constant
//! offset. Fixed variables keep their slot — fixing happens by
//! collapsing bounds, never by deletion — so solution vectors always
//! decode positionally. The container also audits candidate solutions:
//! [`MilpModel::check_solution`] reports every bound, constraint and
//! integrality violation beyond a tolerance.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("duplicate variable name {0:?}")]
    DuplicateName(String),
    #[error("variable {0}: lower bound {1} exceeds upper bound {2}")]
    BoundOrder(String, f64, f64),
    #[error("variable {0}: binary bounds must lie within [0, 1]")]
    BinaryBounds(String),
    #[error("variable {0}: bound is not finite where required")]
    NonFiniteBound(String),
    #[error("constraint {0}: references unknown variable id {1}")]
    UnknownVariable(String, usize),
    #[error("constraint {0}: non-finite coefficient or right-hand side")]
    NonFiniteRow(String),
    #[error("constraint {0}: variable id {1} appears twice")]
    RepeatedTerm(String, usize),
    #[error("objective has {0} coefficients for {1} variables")]
    ObjectiveArity(usize, usize),
    #[error("solution has {0} values for {1} variables")]
    SolutionArity(usize, usize),
}

/// Variable domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

/// One decision variable.
#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub kind: VarKind,
    /// Higher values are branched on first; ties fall back to
    /// fractionality and then variable id.
    pub branch_priority: i32,
}

impl Variable {
    pub fn is_fixed(&self) -> bool {
        self.lb == self.ub
    }
}

/// Row sense of a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// A named linear row: `sum(coeff * var) <sense> rhs`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    /// `(variable id, coefficient)` pairs; ids must be unique per row.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    /// Left-hand-side value under a full assignment.
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v]).sum()
    }

    /// How far the row is from being satisfied (0 when feasible).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.lhs(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Minimization objective: `constant + coeffs . x`.
#[derive(Debug, Clone, Default)]
pub struct Objective {
    pub constant: f64,
    pub coeffs: Vec<f64>,
}

/// A complete minimization MILP.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
}

/// One reason a candidate solution is not feasible.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Variable outside `[lb, ub]` by `amount`.
    Bound { variable: String, amount: f64 },
    /// Constraint row off by `amount`.
    Row { constraint: String, amount: f64 },
    /// Binary variable `amount` away from the nearest integer.
    Integrality { variable: String, amount: f64 },
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a variable and returns its id. The objective grows a
    /// zero coefficient to stay aligned.
    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lb: f64,
        ub: f64,
        kind: VarKind,
        branch_priority: i32,
    ) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            lb,
            ub,
            kind,
            branch_priority,
        });
        self.objective.coeffs.push(0.0);
        self.variables.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
    }

    pub fn n_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn binary_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(id, _)| id)
    }

    pub fn n_binaries(&self) -> usize {
        self.binary_ids().count()
    }

    /// Structural validation: unique names, ordered finite-where-needed
    /// bounds, binary bounds within [0, 1], rows referencing known
    /// variables exactly once each, finite coefficients, and an
    /// objective aligned with the variable count.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut names = std::collections::BTreeSet::new();
        for v in &self.variables {
            if !names.insert(v.name.as_str()) {
                return Err(ModelError::DuplicateName(v.name.clone()));
            }
            if v.lb.is_nan() || v.ub.is_nan() {
                return Err(ModelError::NonFiniteBound(v.name.clone()));
            }
            if v.lb > v.ub {
                return Err(ModelError::BoundOrder(v.name.clone(), v.lb, v.ub));
            }
            if v.kind == VarKind::Binary && (v.lb < 0.0 || v.ub > 1.0) {
                return Err(ModelError::BinaryBounds(v.name.clone()));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(ModelError::NonFiniteRow(c.name.clone()));
            }
            let mut seen = std::collections::BTreeSet::new();
            for &(id, coeff) in &c.terms {
                if id >= self.variables.len() {
                    return Err(ModelError::UnknownVariable(c.name.clone(), id));
                }
                if !coeff.is_finite() {
                    return Err(ModelError::NonFiniteRow(c.name.clone()));
                }
                if !seen.insert(id) {
                    return Err(ModelError::RepeatedTerm(c.name.clone(), id));
                }
            }
        }
        if self.objective.coeffs.len() != self.variables.len() {
            return Err(ModelError::ObjectiveArity(
                self.objective.coeffs.len(),
                self.variables.len(),
            ));
        }
        if !self.objective.constant.is_finite()
            || self.objective.coeffs.iter().any(|c| !c.is_finite())
        {
            return Err(ModelError::NonFiniteRow("objective".into()));
        }
        Ok(())
    }

    /// Objective value of a full assignment.
    pub fn objective_value(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.variables.len() {
            return Err(ModelError::SolutionArity(x.len(), self.variables.len()));
        }
        Ok(self.objective.constant
            + self
                .objective
                .coeffs
                .iter()
                .zip(x)
                .map(|(c, v)| c * v)
                .sum::<f64>())
    }

    /// Audits a candidate solution, returning every violation beyond
    /// `tolerance`. An empty report certifies feasibility at that
    /// tolerance.
    pub fn check_solution(&self, x: &[f64], tolerance: f64) -> Result<Vec<Violation>, ModelError> {
        if x.len() != self.variables.len() {
            return Err(ModelError::SolutionArity(x.len(), self.variables.len()));
        }
        let mut report = Vec::new();
        for (id, v) in self.variables.iter().enumerate() {
            let below = v.lb - x[id];
            let above = x[id] - v.ub;
            let amount = below.max(above);
            if amount > tolerance {
                report.push(Violation::Bound {
                    variable: v.name.clone(),
                    amount,
                });
            }
            if v.kind == VarKind::Binary {
                let frac = (x[id] - x[id].round()).abs();
                if frac > tolerance {
                    report.push(Violation::Integrality {
                        variable: v.name.clone(),
                        amount: frac,
                    });
                }
            }
        }
        for c in &self.constraints {
            let amount = c.violation(x);
            if amount > tolerance {
                report.push(Violation::Row {
                    constraint: c.name.clone(),
                    amount,
                });
            }
        }
        Ok(report)
    }
}
