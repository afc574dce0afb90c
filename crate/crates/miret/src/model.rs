//! Surrogate-tree MILP construction.
//!
//! [`topology`] fixes the index sets of the complete binary tree,
//! [`milp`] is the generic model container, [`build`](crate::model::build)
//! assembles the two formulations from a forest's statistics,
//! [`lp_format`] exports any model as a CPLEX-LP document for external
//! solvers, and [`warm`] manufactures feasible starting points plus the
//! node-relaxation repair used during the search.

pub mod build;
pub mod lp_format;
pub mod milp;
pub mod topology;
pub mod warm;

pub use build::{
    build, prepare_inputs, BuildError, Formulation, MiretHyperparams, MiretModel, PreparedInputs,
    VariableMap,
};
pub use lp_format::write_lp;
pub use milp::{
    Constraint, MilpModel, ModelError, Objective, Sense, VarKind, Variable, Violation,
};
pub use topology::TreeTopology;
pub use warm::{
    majority_solution, mimic_solution, rounding_heuristic, tree_solutions, warm_starts,
};
