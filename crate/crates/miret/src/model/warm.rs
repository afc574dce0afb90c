//! Feasible starting points and a rounding repair for the compression
//! program.
//!
//! Branch-and-bound benefits enormously from a good incumbent arriving
//! early: it prunes most of the tree and turns the run into a proof.
//! This module manufactures candidate solutions straight from the data:
//!
//! * [`majority_solution`] — every branch is inert, every training sample
//!   rides the left spine into one leaf oriented to the majority
//!   prediction.  Feasible whenever the model is (the universal fallback).
//! * [`mimic_solution`] — a depth-capped axis-aligned tree is fitted to
//!   the *forest's own predictions*, restricted per level to the admitted
//!   feature sets, and embedded as unit-coefficient hyperplanes.
//! * [`tree_solutions`] — each ensemble member is embedded the same way,
//!   giving one candidate per tree.
//! * [`rounding_heuristic`] — a callback for the solver that repairs each
//!   node relaxation: it keeps the fractional hyperplanes, re-picks every
//!   intercept so the routed samples clear the strict right-side margin,
//!   and rebuilds the assignment binaries from the induced routing.
//!
//! All constructions route a sample left exactly when `a.x + b <= 0` and
//! guarantee `a.x + b >= epsilon` on the right, so the routing rows hold
//! with slack.  Candidates may still violate the pairing rows (two
//! must-stay-together samples can land in different leaves); the solver
//! checks every candidate and silently drops infeasible ones, so callers
//! can offer everything cheaply.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::dataset::Dataset;
use crate::forest::{self, Forest, NodeKind, Tree};
use crate::model::build::MiretModel;
use crate::model::topology::TreeTopology;
use crate::model::{Formulation, VariableMap};
use crate::solver::Rounder;

/// Axis-aligned guide: one optional `(feature, threshold)` per branch slot
/// of the complete topology.  Guides only *suggest* splits; the embedding
/// drops any suggestion that the admitted feature sets, the routed
/// samples, or the margin make unusable.
type Guide = Vec<Option<(usize, f64)>>;

/// Sign of the prediction majority among `idx` (ties and empty go to -1,
/// matching the forest's own tie rule).
fn majority(predicted: &[i8], idx: &[usize]) -> i8 {
    let positives = idx.iter().filter(|&&i| predicted[i] > 0).count();
    if 2 * positives > idx.len() {
        1
    } else {
        -1
    }
}

/// One multivariate tree as raw hyperplanes, `a[t]` and `b[t]` per branch.
#[derive(Debug, Clone)]
struct PlaneTree {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

/// Everything needed to embed hyperplane trees into the variable space of
/// one particular model.  Holds copies of the small model tables so the
/// rounding callback can outlive the borrow of the model.
struct Assembler {
    map: VariableMap,
    topology: TreeTopology,
    strengthened: bool,
    min_splits: f64,
    epsilon: f64,
    feature_sets: Vec<BTreeSet<usize>>,
    frequency: Vec<Vec<f64>>,
    predicted: Vec<i8>,
    features: Vec<Vec<f64>>,
    b_lower: Vec<f64>,
    b_upper: Vec<f64>,
}

impl Assembler {
    fn new(model: &MiretModel, data: &Dataset) -> Self {
        let topo = model.topology;
        let b_lower = topo
            .branches()
            .map(|t| model.milp.variables[model.map.b(t)].lb)
            .collect();
        let b_upper = topo
            .branches()
            .map(|t| model.milp.variables[model.map.b(t)].ub)
            .collect();
        Assembler {
            map: model.map.clone(),
            topology: topo,
            strengthened: model.hyperparams.formulation == Formulation::Strengthened,
            min_splits: model.hyperparams.min_splits,
            epsilon: model.hyperparams.epsilon,
            feature_sets: model.feature_sets.clone(),
            frequency: model.frequency.clone(),
            predicted: model.predicted.clone(),
            features: data.features().to_vec(),
            b_lower,
            b_upper,
        }
    }

    fn n_samples(&self) -> usize {
        self.features.len()
    }

    /// Projection of sample `i` onto the hyperplane of branch `t`.
    fn project(&self, plane: &PlaneTree, t: usize, i: usize) -> f64 {
        plane.a[t]
            .iter()
            .zip(&self.features[i])
            .map(|(a, x)| a * x)
            .sum::<f64>()
            + plane.b[t]
    }

    /// Turn hyperplanes into a complete assignment: coefficients and
    /// intercepts verbatim, split indicators where a coefficient is live,
    /// assignment (and pass-through) binaries from the induced routing,
    /// and extra indicators to honour the minimum-split cut.  `None` when
    /// the cut demands more indicators than exist.
    fn assemble(&self, plane: &PlaneTree) -> Option<Vec<f64>> {
        let topo = &self.topology;
        let map = &self.map;
        let mut x = vec![0.0; map.n_variables()];
        let mut active = 0usize;
        for t in topo.branches() {
            x[map.b(t)] = plane.b[t];
            for (j, &coeff) in plane.a[t].iter().enumerate() {
                if coeff != 0.0 {
                    x[map.a(t, j)] = coeff;
                    x[map.s(t, j)] = 1.0;
                    active += 1;
                }
            }
        }
        if self.strengthened {
            let needed = self.min_splits.ceil().max(0.0) as usize;
            if active < needed {
                // Cheapest-first padding: a raised indicator with a zero
                // coefficient is feasible and costs alpha over frequency,
                // so prefer frequent (cheap) pairs deterministically.
                let mut padding: Vec<(usize, usize)> = Vec::new();
                for t in topo.branches() {
                    let level = topo.level_of(t);
                    for &j in &self.feature_sets[level] {
                        if plane.a[t][j] == 0.0 {
                            padding.push((t, j));
                        }
                    }
                }
                padding.sort_by(|&(t1, j1), &(t2, j2)| {
                    let f1 = self.frequency[topo.level_of(t1)][j1];
                    let f2 = self.frequency[topo.level_of(t2)][j2];
                    f2.total_cmp(&f1).then((t1, j1).cmp(&(t2, j2)))
                });
                if active + padding.len() < needed {
                    return None;
                }
                for &(t, j) in padding.iter().take(needed - active) {
                    x[map.s(t, j)] = 1.0;
                }
            }
        }
        for i in 0..self.n_samples() {
            let mut t = 0usize;
            while t < topo.n_branches() {
                let left = self.project(plane, t, i) <= 0.0;
                if map.has_q {
                    let q = if left {
                        map.q_left(i, t)
                    } else {
                        map.q_right(i, t)
                    };
                    x[q] = 1.0;
                }
                t = if left {
                    topo.left_child(t)
                } else {
                    topo.right_child(t)
                };
            }
            x[map.z(i, t)] = 1.0;
        }
        Some(x)
    }

    /// Embed an axis-aligned guide.  Suggestions are taken when the
    /// feature is admitted at the level, both sides of the threshold are
    /// inhabited, and the value gap clears the margin; everything else
    /// becomes an inert branch that parks its samples on the left.
    ///
    /// Upper branches always use a negative unit coefficient: the
    /// intercept then lives in `[0, 1]`, which the strengthened bounds
    /// require, at the price of swapping the guide's subtrees between the
    /// children.  Deepest branches orient by the prediction majorities of
    /// the two sides so the parity-fixed leaf classes line up.
    fn realize(&self, guide: &Guide) -> PlaneTree {
        let topo = &self.topology;
        let n_branches = topo.n_branches();
        let n_features = self.map.n_features;
        let eps = self.epsilon;
        let mut plane = PlaneTree {
            a: vec![vec![0.0; n_features]; n_branches],
            b: vec![0.0; n_branches],
        };
        let all: Vec<usize> = (0..self.n_samples()).collect();
        let mut stack: Vec<(usize, usize, Vec<usize>)> = vec![(0, 0, all)];
        while let Some((m, g, idx)) = stack.pop() {
            let level = topo.level_of(m);
            let deepest = level + 1 == topo.depth;
            let suggestion = guide.get(g).copied().flatten();
            let mut resolved = false;
            if let Some((j, threshold)) = suggestion {
                if self.feature_sets[level].contains(&j) {
                    let (lo, hi): (Vec<usize>, Vec<usize>) = idx
                        .iter()
                        .partition(|&&i| self.features[i][j] <= threshold);
                    if !lo.is_empty() && !hi.is_empty() {
                        let v1 = lo
                            .iter()
                            .map(|&i| self.features[i][j])
                            .fold(f64::NEG_INFINITY, f64::max);
                        let v2 = hi
                            .iter()
                            .map(|&i| self.features[i][j])
                            .fold(f64::INFINITY, f64::min);
                        if v2 - v1 >= eps {
                            let mid = v1 + (v2 - v1) / 2.0;
                            if deepest {
                                let c_lo = majority(&self.predicted, &lo);
                                let c_hi = majority(&self.predicted, &hi);
                                if c_lo == -1 && c_hi == 1 {
                                    // Low side to the -1 leaf: keep the
                                    // orientation, x_j <= b' routes left.
                                    plane.a[m][j] = 1.0;
                                    plane.b[m] = -mid.clamp(v1, v2 - eps);
                                    resolved = true;
                                } else if c_lo == 1 && c_hi == -1 {
                                    // Flip so the high side takes the -1
                                    // leaf: x_j >= b' routes left.
                                    plane.a[m][j] = -1.0;
                                    plane.b[m] = mid.clamp(v1 + eps, v2);
                                    resolved = true;
                                }
                                // Same majority on both sides: splitting
                                // buys nothing, fall through to inert.
                            } else {
                                plane.a[m][j] = -1.0;
                                plane.b[m] = mid.clamp(v1 + eps, v2);
                                // The flip sends the high side left, so
                                // the guide's children swap sides.
                                stack.push((topo.left_child(m), topo.right_child(g), hi));
                                stack.push((topo.right_child(m), topo.left_child(g), lo));
                                resolved = true;
                            }
                        }
                    }
                }
            }
            if !resolved {
                if deepest {
                    // Inert deepest branch: send everyone to the leaf
                    // whose fixed class matches the routed majority.
                    plane.b[m] = if majority(&self.predicted, &idx) > 0 {
                        1.0
                    } else {
                        0.0
                    };
                } else {
                    // Inert upper branch: everyone left, where the same
                    // suggestion gets another chance one level down.
                    stack.push((topo.left_child(m), g, idx));
                    stack.push((topo.right_child(m), topo.right_child(g), Vec::new()));
                }
            }
        }
        plane
    }

    /// Repair one relaxation into an integral candidate.  Coefficients
    /// are taken as-is (tiny ones snapped to zero); each intercept is
    /// re-chosen from the routed projections so both routing rows hold
    /// strictly, staying as close to the relaxation's intercept as the
    /// margin allows; branches with no workable intercept go inert.
    fn round(&self, relaxation: &[f64]) -> Option<Vec<f64>> {
        let topo = &self.topology;
        let map = &self.map;
        if relaxation.len() != map.n_variables() {
            return None;
        }
        let eps = self.epsilon;
        let n_branches = topo.n_branches();
        let n_features = map.n_features;
        let mut plane = PlaneTree {
            a: vec![vec![0.0; n_features]; n_branches],
            b: vec![0.0; n_branches],
        };
        for t in topo.branches() {
            for j in 0..n_features {
                let coeff = relaxation[map.a(t, j)];
                if coeff.abs() >= 1e-7 {
                    plane.a[t][j] = coeff;
                }
            }
        }
        let all: Vec<usize> = (0..self.n_samples()).collect();
        let mut stack: Vec<(usize, Vec<usize>)> = vec![(0, all)];
        while let Some((t, idx)) = stack.pop() {
            let deepest = topo.level_of(t) + 1 == topo.depth;
            let live = plane.a[t].iter().any(|&c| c != 0.0);
            let hint = relaxation[map.b(t)];
            let mut chosen: Option<f64> = None;
            if live && !idx.is_empty() {
                // Raw projections of the routed samples, sorted; every cut
                // point between (or outside) them is a candidate intercept
                // interval, valid when samples on the right clear eps.
                let mut proj: Vec<f64> = idx
                    .iter()
                    .map(|&i| self.project(&plane, t, i) - plane.b[t])
                    .collect();
                proj.sort_by(f64::total_cmp);
                let mut best: Option<(f64, f64)> = None; // (|b - hint|, b)
                for cut in 0..=proj.len() {
                    let low = if cut < proj.len() {
                        eps - proj[cut]
                    } else {
                        f64::NEG_INFINITY
                    };
                    let high = if cut > 0 { -proj[cut - 1] } else { f64::INFINITY };
                    let low = low.max(self.b_lower[t]);
                    let high = high.min(self.b_upper[t]);
                    if low > high {
                        continue;
                    }
                    let value = hint.clamp(low, high);
                    let score = (value - hint).abs();
                    if best.is_none_or(|(s, _)| score < s - 1e-15) {
                        best = Some((score, value));
                    }
                }
                chosen = best.map(|(_, b)| b);
            } else if live && idx.is_empty() {
                // Nothing routed here; any in-bounds intercept works.
                chosen = Some(hint.clamp(self.b_lower[t], self.b_upper[t]));
            }
            match chosen {
                Some(b) => plane.b[t] = b,
                None => {
                    // No workable intercept: make the branch inert.
                    plane.a[t] = vec![0.0; n_features];
                    plane.b[t] = if deepest && majority(&self.predicted, &idx) > 0 {
                        1.0
                    } else {
                        0.0
                    };
                }
            }
            if !deepest {
                let (lo, hi): (Vec<usize>, Vec<usize>) = idx
                    .iter()
                    .partition(|&&i| self.project(&plane, t, i) <= 0.0);
                stack.push((topo.left_child(t), lo));
                stack.push((topo.right_child(t), hi));
            }
        }
        self.assemble(&plane)
    }
}

// ---------------------------------------------------------------------------
// public constructors
// ---------------------------------------------------------------------------

/// The universal fallback: all branches inert, every sample routed down
/// the left spine into a single leaf oriented to the overall prediction
/// majority.  `None` only when the minimum-split cut cannot be padded.
pub fn majority_solution(model: &MiretModel, data: &Dataset) -> Option<Vec<f64>> {
    let assembler = Assembler::new(model, data);
    let guide: Guide = vec![None; model.topology.n_branches()];
    let plane = assembler.realize(&guide);
    assembler.assemble(&plane)
}

/// Distillation candidate: fit a depth-capped axis-aligned tree to the
/// forest's hard predictions, restricted per level to the admitted
/// features, and embed it.
pub fn mimic_solution(model: &MiretModel, data: &Dataset) -> Option<Vec<f64>> {
    let assembler = Assembler::new(model, data);
    let guide = mimic_guide(model, data)?;
    let plane = assembler.realize(&guide);
    assembler.assemble(&plane)
}

/// One candidate per ensemble member: each univariate tree embedded as
/// unit-coefficient hyperplanes (suggestions with inadmissible features
/// degrade to inert branches).
pub fn tree_solutions(model: &MiretModel, data: &Dataset, forest: &Forest) -> Vec<Vec<f64>> {
    let assembler = Assembler::new(model, data);
    forest
        .trees
        .iter()
        .filter_map(|tree| {
            let guide = tree_guide(tree, &model.topology);
            assembler.assemble(&assembler.realize(&guide))
        })
        .collect()
}

/// Every candidate this module can manufacture, deduplicated, best guesses
/// first: the distilled mimic, then the ensemble members, then the
/// majority fallback.
pub fn warm_starts(model: &MiretModel, data: &Dataset, forest: &Forest) -> Vec<Vec<f64>> {
    let mut candidates = Vec::new();
    if let Some(mimic) = mimic_solution(model, data) {
        candidates.push(mimic);
    }
    candidates.extend(tree_solutions(model, data, forest));
    if let Some(fallback) = majority_solution(model, data) {
        candidates.push(fallback);
    }
    let mut seen: BTreeSet<Vec<u64>> = BTreeSet::new();
    candidates.retain(|c| seen.insert(c.iter().map(|v| v.to_bits()).collect()));
    candidates
}

/// Node-relaxation repair callback for the solver.
pub fn rounding_heuristic(model: &MiretModel, data: &Dataset) -> Rounder {
    let assembler = Arc::new(Assembler::new(model, data));
    Arc::new(move |relaxation: &[f64]| assembler.round(relaxation))
}

// ---------------------------------------------------------------------------
// guides
// ---------------------------------------------------------------------------

/// Copy a trained univariate tree's splits into guide slots (ids match
/// because both use the same breadth-first numbering).
fn tree_guide(tree: &Tree, topology: &TreeTopology) -> Guide {
    let mut guide: Guide = vec![None; topology.n_branches()];
    for (&id, node) in &tree.nodes {
        if id >= guide.len() {
            continue;
        }
        if let NodeKind::Branch { feature, threshold } = node.kind {
            guide[id] = Some((feature, threshold));
        }
    }
    guide
}

/// Fit a depth-capped axis-aligned tree to the forest's predictions (the
/// training rows relabelled with the model's stored hard votes), choosing
/// splits by the same impurity sweep the forest uses but restricted per
/// level to the admitted feature sets.
fn mimic_guide(model: &MiretModel, data: &Dataset) -> Option<Guide> {
    let relabelled = Dataset::new(
        data.feature_names().to_vec(),
        data.features().to_vec(),
        model.predicted.clone(),
        ("predicted_neg".into(), "predicted_pos".into()),
    )
    .ok()?;
    let topo = &model.topology;
    let mut guide: Guide = vec![None; topo.n_branches()];
    let mut stack: Vec<(usize, Vec<usize>)> =
        vec![(0, (0..relabelled.n_samples()).collect())];
    while let Some((slot, idx)) = stack.pop() {
        if slot >= topo.n_branches() || idx.len() < 2 {
            continue;
        }
        let level = topo.level_of(slot);
        let admitted: Vec<usize> = model.feature_sets[level].iter().copied().collect();
        if admitted.is_empty() {
            continue;
        }
        let mut counts = [0u32; 2];
        for &i in &idx {
            counts[forest::label_slot(relabelled.label(i))] += 1;
        }
        if counts[0] == 0 || counts[1] == 0 {
            continue;
        }
        let Some(split) = forest::best_split(&relabelled, &idx, &admitted, counts) else {
            continue;
        };
        if forest::gini(counts) - split.score <= 1e-12 {
            continue;
        }
        let (lo, hi): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| relabelled.sample(i)[split.feature] <= split.threshold);
        guide[slot] = Some((split.feature, split.threshold));
        stack.push((topo.left_child(slot), lo));
        stack.push((topo.right_child(slot), hi));
    }
    Some(guide)
}

// ---------------------------------------------------------------------------
