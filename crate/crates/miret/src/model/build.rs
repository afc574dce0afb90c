//! Constructs the surrogate-tree MILPs from a forest's statistics.
//!
//! Both formulations decide, for a complete depth-D tree with fixed
//! alternating leaf classes, the hyperplane `a_t . x + b_t` of every
//! branch node and the leaf assignment `z_{i,l}` of every training
//! sample, minimizing a probability-weighted disagreement with the
//! forest's votes plus a frequency-weighted penalty on the number of
//! active coefficients `s_{t,j}`.
//!
//! The *basic* form activates the routing big-Ms through leaf-set sums
//! of `z`; the *strengthened* form routes through per-node pass-through
//! binaries `qL`/`qR` (a pure reformulation with the same optimum),
//! forces at least one real split, and tightens intercept bounds above
//! the deepest branch level.
//!
//! Features whose full-level frequency does not exceed the per-level
//! cutoff are fixed out by collapsing the bounds of their `a` and `s`
//! variables to zero — the variables stay in the model so solutions
//! decode positionally. Sparsity-linking rows are only emitted for the
//! free pairs, since fixed ones reduce to `0 <= 0`.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::dataset::Dataset;
use crate::forest::{class_probabilities, ClassProbabilities, Forest, ForestError};
use crate::stats::{
    frequent_features, level_frequency, proximity, FrequencyMode, LevelFrequencyMatrix,
    ProximityMatrix,
};

use super::milp::{MilpModel, Sense, VarKind};
use super::topology::TreeTopology;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("bad hyperparameters: {0}")]
    BadHyperparams(String),
    #[error("level frequencies must use the full-level denominator")]
    FrequencyMode,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Forest(#[from] ForestError),
}

/// Which MILP to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Basic,
    Strengthened,
}

/// Everything that shapes the MILP besides the data itself.
#[derive(Debug, Clone)]
pub struct MiretHyperparams {
    /// Sparsity penalty weight (>= 0).
    pub alpha: f64,
    /// Per-level frequency cutoffs; a feature enters a level only when
    /// its frequency is strictly above the cutoff.
    pub gammas: Vec<f64>,
    /// Proximity needed before a sample pair is forced to share a leaf.
    pub proximity_cutoff: f64,
    /// Margin enforcing the strict side of right routing.
    pub epsilon: f64,
    pub formulation: Formulation,
    /// Right-hand side of the minimum-split cut (strengthened only).
    pub min_splits: f64,
}

impl MiretHyperparams {
    /// Defaults used throughout: zero cutoffs, pairs forced together
    /// only at proximity 1, margin 0.001, strengthened form, one split
    /// required.
    pub fn new(depth: usize, alpha: f64) -> Self {
        Self {
            alpha,
            gammas: vec![0.0; depth],
            proximity_cutoff: 1.0,
            epsilon: 1e-3,
            formulation: Formulation::Strengthened,
            min_splits: 1.0,
        }
    }

    fn validate(&self) -> Result<(), BuildError> {
        let bad = |msg: &str| Err(BuildError::BadHyperparams(msg.into()));
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return bad("alpha must be finite and non-negative");
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad("epsilon must be finite and positive");
        }
        if !(self.proximity_cutoff > 0.0 && self.proximity_cutoff <= 1.0) {
            return bad("proximity cutoff must lie in (0, 1]");
        }
        if self.gammas.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return bad("cutoffs must be finite and non-negative");
        }
        if !(self.min_splits >= 0.0) || !self.min_splits.is_finite() {
            return bad("min_splits must be finite and non-negative");
        }
        Ok(())
    }
}

/// Positional layout of the decision variables. All lookups are O(1)
/// index arithmetic over the fixed emission order a, b, z, s, q.
#[derive(Debug, Clone)]
pub struct VariableMap {
    pub depth: usize,
    pub n_features: usize,
    pub n_samples: usize,
    pub has_q: bool,
}

impl VariableMap {
    fn n_branches(&self) -> usize {
        (1 << self.depth) - 1
    }

    fn n_leaves(&self) -> usize {
        1 << self.depth
    }

    /// Coefficient of feature `j` at branch `t`.
    pub fn a(&self, t: usize, j: usize) -> usize {
        debug_assert!(t < self.n_branches() && j < self.n_features);
        t * self.n_features + j
    }

    /// Intercept of branch `t`.
    pub fn b(&self, t: usize) -> usize {
        debug_assert!(t < self.n_branches());
        self.n_branches() * self.n_features + t
    }

    /// Assignment of sample `i` to leaf `leaf` (breadth-first id).
    pub fn z(&self, i: usize, leaf: usize) -> usize {
        debug_assert!(i < self.n_samples);
        debug_assert!((self.n_branches()..self.n_branches() + self.n_leaves()).contains(&leaf));
        self.n_branches() * (self.n_features + 1)
            + i * self.n_leaves()
            + (leaf - self.n_branches())
    }

    /// Split indicator for feature `j` at branch `t`.
    pub fn s(&self, t: usize, j: usize) -> usize {
        self.n_branches() * (self.n_features + 1)
            + self.n_samples * self.n_leaves()
            + t * self.n_features
            + j
    }

    /// Left pass-through of sample `i` at branch `t` (strengthened form).
    pub fn q_left(&self, i: usize, t: usize) -> usize {
        assert!(self.has_q, "basic formulation has no q variables");
        self.n_branches() * (self.n_features + 1)
            + self.n_samples * self.n_leaves()
            + self.n_branches() * self.n_features
            + 2 * (i * self.n_branches() + t)
    }

    /// Right pass-through of sample `i` at branch `t`.
    pub fn q_right(&self, i: usize, t: usize) -> usize {
        self.q_left(i, t) + 1
    }

    pub fn n_variables(&self) -> usize {
        let base = self.n_branches() * (self.n_features + 1)
            + self.n_samples * self.n_leaves()
            + self.n_branches() * self.n_features;
        if self.has_q {
            base + 2 * self.n_samples * self.n_branches()
        } else {
            base
        }
    }
}

/// Forest-derived quantities the builder consumes, computed once and
/// reusable across formulations and hyperparameter cells.
#[derive(Debug, Clone)]
pub struct PreparedInputs {
    pub probabilities: ClassProbabilities,
    pub frequency: LevelFrequencyMatrix,
    pub proximity: ProximityMatrix,
}

/// Computes class probabilities, full-level frequencies and proximity
/// for `forest` on `data`.
pub fn prepare_inputs(forest: &Forest, data: &Dataset) -> Result<PreparedInputs, ForestError> {
    Ok(PreparedInputs {
        probabilities: class_probabilities(forest, data)?,
        frequency: level_frequency(forest, FrequencyMode::FullLevel),
        proximity: proximity(forest, data)?,
    })
}

/// A built MILP plus everything needed to decode and audit solutions.
#[derive(Debug, Clone)]
pub struct MiretModel {
    pub milp: MilpModel,
    pub map: VariableMap,
    pub topology: TreeTopology,
    pub hyperparams: MiretHyperparams,
    /// Features admitted per level (strictly above the cutoff).
    pub feature_sets: Vec<BTreeSet<usize>>,
    /// Sample pairs forced to share a leaf.
    pub pairs: Vec<(usize, usize)>,
    /// Forest probability of the predicted class, per sample.
    pub probability: Vec<f64>,
    /// Forest hard-vote prediction, per sample.
    pub predicted: Vec<i8>,
    /// Full-level frequencies `[level][feature]` used in the penalty.
    pub frequency: Vec<Vec<f64>>,
}

impl MiretModel {
    /// Recomputes the objective from first principles — the
    /// disagreement term from p, the predicted votes and the decoded
    /// leaf classes, the penalty term from the frequency table — rather
    /// than from the stored coefficient vector. Used to audit solver
    /// objectives.
    pub fn audit_objective(&self, x: &[f64]) -> f64 {
        let topo = &self.topology;
        let mut loss = 0.0;
        for i in 0..self.map.n_samples {
            let vote: f64 = topo
                .leaves()
                .map(|l| f64::from(topo.leaf_class(l)) * x[self.map.z(i, l)])
                .sum();
            let yhat = f64::from(self.predicted[i]);
            loss += 0.5 * self.probability[i] * yhat * (yhat - vote);
        }
        let mut penalty = 0.0;
        for t in topo.branches() {
            let level = topo.level_of(t);
            for &j in &self.feature_sets[level] {
                penalty += self.hyperparams.alpha / self.frequency[level][j] * x[self.map.s(t, j)];
            }
        }
        loss + penalty
    }
}

/// Builds the MILP selected by `hp.formulation`.
pub fn build(
    data: &Dataset,
    inputs: &PreparedInputs,
    hp: &MiretHyperparams,
) -> Result<MiretModel, BuildError> {
    hp.validate()?;
    if inputs.frequency.mode != FrequencyMode::FullLevel {
        return Err(BuildError::FrequencyMode);
    }
    let depth = inputs.frequency.n_levels();
    if depth == 0 {
        return Err(BuildError::Shape("zero-depth frequency matrix".into()));
    }
    if hp.gammas.len() != depth {
        return Err(BuildError::Shape(format!(
            "{} cutoffs for {} levels",
            hp.gammas.len(),
            depth
        )));
    }
    let n = data.n_samples();
    let nf = data.n_features();
    if inputs.frequency.n_features() != nf {
        return Err(BuildError::Shape("frequency feature count".into()));
    }
    if inputs.probabilities.len() != n {
        return Err(BuildError::Shape("probability sample count".into()));
    }
    if inputs.proximity.n_samples() != n {
        return Err(BuildError::Shape("proximity sample count".into()));
    }

    let topo = TreeTopology::new(depth);
    let strengthened = hp.formulation == Formulation::Strengthened;
    let map = VariableMap {
        depth,
        n_features: nf,
        n_samples: n,
        has_q: strengthened,
    };
    let feature_sets = frequent_features(&inputs.frequency, &hp.gammas);
    let pairs = crate::stats::proximal_pairs(&inputs.proximity, hp.proximity_cutoff);
    let probability: Vec<f64> = (0..n).map(|i| inputs.probabilities.prob(i)).collect();
    let predicted: Vec<i8> = (0..n).map(|i| inputs.probabilities.predicted(i)).collect();

    let m_left = nf as f64 + 1.0;
    let m_right = nf as f64 + 1.0 + hp.epsilon;

    let mut milp = MilpModel::new();

    // --- variables, in the map's positional order -----------------------
    for t in topo.branches() {
        let level = topo.level_of(t);
        for j in 0..nf {
            let free = feature_sets[level].contains(&j);
            let (lb, ub) = if free { (-1.0, 1.0) } else { (0.0, 0.0) };
            let id = milp.add_variable(format!("a_{t}_{j}"), lb, ub, VarKind::Continuous, 0);
            debug_assert_eq!(id, map.a(t, j));
        }
    }
    for t in topo.branches() {
        let lb = if strengthened && topo.upper_branches().contains(&t) {
            0.0
        } else {
            -1.0
        };
        let id = milp.add_variable(format!("b_{t}"), lb, 1.0, VarKind::Continuous, 0);
        debug_assert_eq!(id, map.b(t));
    }
    for i in 0..n {
        for l in topo.leaves() {
            let id = milp.add_variable(format!("z_{i}_{l}"), 0.0, 1.0, VarKind::Binary, 1);
            debug_assert_eq!(id, map.z(i, l));
        }
    }
    for t in topo.branches() {
        let level = topo.level_of(t);
        for j in 0..nf {
            let free = feature_sets[level].contains(&j);
            let ub = if free { 1.0 } else { 0.0 };
            let id = milp.add_variable(format!("s_{t}_{j}"), 0.0, ub, VarKind::Binary, 0);
            debug_assert_eq!(id, map.s(t, j));
        }
    }
    if strengthened {
        for i in 0..n {
            for t in topo.branches() {
                let l = milp.add_variable(format!("qL_{i}_{t}"), 0.0, 1.0, VarKind::Binary, 2);
                let r = milp.add_variable(format!("qR_{i}_{t}"), 0.0, 1.0, VarKind::Binary, 2);
                debug_assert_eq!(l, map.q_left(i, t));
                debug_assert_eq!(r, map.q_right(i, t));
            }
        }
    }

    // --- objective -------------------------------------------------------
    milp.objective.constant = 0.5 * probability.iter().sum::<f64>();
    for i in 0..n {
        for l in topo.leaves() {
            milp.objective.coeffs[map.z(i, l)] =
                -0.5 * probability[i] * f64::from(predicted[i]) * f64::from(topo.leaf_class(l));
        }
    }
    for t in topo.branches() {
        let level = topo.level_of(t);
        for &j in &feature_sets[level] {
            // Strict cutoff guarantees the frequency is positive here.
            milp.objective.coeffs[map.s(t, j)] = hp.alpha / inputs.frequency.get(level, j);
        }
    }

    // --- routing ---------------------------------------------------------
    // Left:  a.x + b <= M_L (1 - activation);  right: a.x + b - eps >=
    // -M_R (1 - activation). The activation is the leaf-set z sum in the
    // basic form and the pass-through binary in the strengthened form.
    for t in topo.branches() {
        for i in 0..n {
            let x = data.sample(i);
            let mut base: Vec<(usize, f64)> = (0..nf)
                .filter(|&j| x[j] != 0.0)
                .map(|j| (map.a(t, j), x[j]))
                .collect();
            base.push((map.b(t), 1.0));

            let mut left = base.clone();
            if strengthened {
                left.push((map.q_left(i, t), m_left));
            } else {
                for l in topo.left_leaves(t) {
                    left.push((map.z(i, l), m_left));
                }
            }
            milp.add_constraint(format!("routeL_{t}_{i}"), left, Sense::Le, m_left);

            let mut right = base;
            if strengthened {
                right.push((map.q_right(i, t), -m_right));
            } else {
                for l in topo.right_leaves(t) {
                    right.push((map.z(i, l), -m_right));
                }
            }
            milp.add_constraint(
                format!("routeR_{t}_{i}"),
                right,
                Sense::Ge,
                hp.epsilon - m_right,
            );
        }
    }

    // --- assignment ------------------------------------------------------
    if strengthened {
        for i in 0..n {
            milp.add_constraint(
                format!("assign_{i}"),
                vec![(map.q_left(i, 0), 1.0), (map.q_right(i, 0), 1.0)],
                Sense::Eq,
                1.0,
            );
        }
    } else {
        for i in 0..n {
            let terms = topo.leaves().map(|l| (map.z(i, l), 1.0)).collect();
            milp.add_constraint(format!("assign_{i}"), terms, Sense::Eq, 1.0);
        }
    }

    // --- pass-through consistency (strengthened only) --------------------
    if strengthened {
        for t in topo.upper_branches() {
            for i in 0..n {
                let lc = topo.left_child(t);
                let rc = topo.right_child(t);
                milp.add_constraint(
                    format!("parentL_{t}_{i}"),
                    vec![
                        (map.q_left(i, t), 1.0),
                        (map.q_left(i, lc), -1.0),
                        (map.q_right(i, lc), -1.0),
                    ],
                    Sense::Eq,
                    0.0,
                );
                milp.add_constraint(
                    format!("parentR_{t}_{i}"),
                    vec![
                        (map.q_right(i, t), 1.0),
                        (map.q_left(i, rc), -1.0),
                        (map.q_right(i, rc), -1.0),
                    ],
                    Sense::Eq,
                    0.0,
                );
            }
        }
        for t in topo.branches() {
            for i in 0..n {
                let mut left = vec![(map.q_left(i, t), 1.0)];
                left.extend(topo.left_leaves(t).map(|l| (map.z(i, l), -1.0)));
                milp.add_constraint(format!("linkL_{t}_{i}"), left, Sense::Eq, 0.0);
                let mut right = vec![(map.q_right(i, t), 1.0)];
                right.extend(topo.right_leaves(t).map(|l| (map.z(i, l), -1.0)));
                milp.add_constraint(format!("linkR_{t}_{i}"), right, Sense::Eq, 0.0);
            }
        }
    }

    // --- proximity -------------------------------------------------------
    for &(i, k) in &pairs {
        for l in topo.leaves() {
            milp.add_constraint(
                format!("prox_{i}_{k}_{l}"),
                vec![(map.z(i, l), 1.0), (map.z(k, l), -1.0)],
                Sense::Eq,
                0.0,
            );
        }
    }

    // --- sparsity linking -------------------------------------------------
    for t in topo.branches() {
        let level = topo.level_of(t);
        for &j in &feature_sets[level] {
            milp.add_constraint(
                format!("spanU_{t}_{j}"),
                vec![(map.a(t, j), 1.0), (map.s(t, j), -1.0)],
                Sense::Le,
                0.0,
            );
            milp.add_constraint(
                format!("spanL_{t}_{j}"),
                vec![(map.a(t, j), 1.0), (map.s(t, j), 1.0)],
                Sense::Ge,
                0.0,
            );
        }
    }

    // --- minimum-split cut (strengthened only) ----------------------------
    if strengthened {
        let mut terms = Vec::new();
        for t in topo.branches() {
            let level = topo.level_of(t);
            for &j in &feature_sets[level] {
                terms.push((map.s(t, j), 1.0));
            }
        }
        // With every s fixed out the row keeps its right-hand side and
        // renders the model infeasible, which is the intended signal.
        milp.add_constraint("min_split", terms, Sense::Ge, hp.min_splits);
    }

    debug_assert_eq!(milp.n_variables(), map.n_variables());
    Ok(MiretModel {
        milp,
        map,
        topology: topo,
        hyperparams: hp.clone(),
        feature_sets,
        pairs,
        probability,
        predicted,
        frequency: inputs.frequency.rows().to_vec(),
    })
}
