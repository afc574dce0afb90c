//! Shared fixtures and independent oracles for the integration suite.
//!
//! Everything here recomputes results from first principles — the
//! forest recounts parse the text serialization rather than touching
//! the in-memory structures, and the MILP oracle combines exhaustive
//! enumeration of binary assignments with Fourier–Motzkin elimination
//! for the continuous remainder — so agreement with the library is
//! evidence, not a tautology.

#![allow(dead_code)]

use std::collections::BTreeMap;

use miret::dataset::Dataset;
use miret::model::milp::{MilpModel, Sense, VarKind};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// dataset generators
// ---------------------------------------------------------------------------

/// Wraps rows and labels into a dataset with generated feature names.
pub fn make_dataset(rows: Vec<Vec<f64>>, labels: Vec<i8>) -> Dataset {
    let nf = rows.first().map_or(0, Vec::len);
    let names = (1..=nf).map(|j| format!("f{j}")).collect();
    Dataset::new(names, rows, labels, ("neg".into(), "pos".into())).expect("valid dataset")
}

/// Uniform features in [0, 1] with a balanced, shuffled label vector.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, nf: usize) -> Dataset {
    assert!(n >= 2, "need both classes");
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..nf).map(|_| rng.random::<f64>()).collect())
        .collect();
    let mut labels: Vec<i8> = (0..n).map(|i| if i < n / 2 { -1 } else { 1 }).collect();
    labels.shuffle(rng);
    make_dataset(rows, labels)
}

/// Forty two-feature samples in two clusters split cleanly by the first
/// feature: every tree roots on it, and the ensemble's predictions are
/// separable by one axis-aligned cut.
pub fn separable_dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(40);
    let mut labels = Vec::with_capacity(40);
    for i in 0..40 {
        let low = i < 20;
        let x0 = if low {
            0.02 + 0.28 * rng.random::<f64>()
        } else {
            0.70 + 0.28 * rng.random::<f64>()
        };
        rows.push(vec![x0, rng.random::<f64>()]);
        labels.push(if low { -1 } else { 1 });
    }
    make_dataset(rows, labels)
}

/// Deterministic 297-sample stand-in following the Cleveland heart
/// schema: thirteen features, already normalized to [0, 1], with the
/// real instance's 137/160 class balance. Labels come from a noisy risk
/// score over several features, so depth-capped trees fit them well but
/// no single feature separates the classes.
pub fn cleveland_standin() -> Dataset {
    let names: Vec<String> = [
        "age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach", "exang", "oldpeak",
        "slope", "ca", "thal",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x43_4c_45_56_45);
    let n = 297;
    let grid = |rng: &mut ChaCha8Rng, m: usize| -> f64 {
        let k = rng.random_range(0..m);
        k as f64 / (m - 1) as f64
    };
    let mut rows = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    for _ in 0..n {
        let age = rng.random::<f64>();
        let sex = grid(&mut rng, 2);
        let cp = grid(&mut rng, 4);
        let trestbps = rng.random::<f64>();
        let chol = rng.random::<f64>();
        let fbs = grid(&mut rng, 2);
        let restecg = grid(&mut rng, 3);
        let thalach = rng.random::<f64>();
        let exang = grid(&mut rng, 2);
        let oldpeak = rng.random::<f64>();
        let slope = grid(&mut rng, 3);
        let ca = grid(&mut rng, 5);
        let thal = grid(&mut rng, 4);
        let noise = 2.0 * rng.random::<f64>() - 1.0;
        let score = 1.6 * cp + 1.3 * oldpeak + 1.2 * ca + 0.9 * thal + 0.8 * (1.0 - thalach)
            + 0.5 * age
            + 0.4 * exang
            + 0.3 * sex
            + 0.2 * slope
            + 0.25 * noise;
        rows.push(vec![
            age, sex, cp, trestbps, chol, fbs, restecg, thalach, exang, oldpeak, slope, ca, thal,
        ]);
        scores.push(score);
    }
    // Label the 137 highest-risk rows positive, mirroring the real class mix.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut labels = vec![-1i8; n];
    for &i in order.iter().take(137) {
        labels[i] = 1;
    }
    Dataset::new(names, rows, labels, ("absence".into(), "presence".into()))
        .expect("valid dataset")
}

/// Picks `total` indices stratified by label: each class contributes in
/// proportion to its share, chosen by a seeded per-class shuffle.
pub fn stratified_subsample(labels: &[i8], total: usize, seed: u64) -> Vec<usize> {
    assert!(total <= labels.len());
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == -1).collect();
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    neg.shuffle(&mut rng);
    pos.shuffle(&mut rng);
    let want_pos =
        ((total as f64 * pos.len() as f64 / labels.len() as f64).round() as usize).min(total);
    let mut picked: Vec<usize> = pos.iter().take(want_pos).copied().collect();
    picked.extend(neg.iter().take(total - want_pos).copied());
    assert_eq!(picked.len(), total, "classes too small for the request");
    picked.sort_unstable();
    picked
}

// ---------------------------------------------------------------------------
// forest recount oracle (text-serialization based)
// ---------------------------------------------------------------------------

/// A node as read back from the text serialization.
#[derive(Debug, Clone, PartialEq)]
pub enum ParsedNode {
    Branch { feature: usize, threshold: f64 },
    Leaf,
}

/// A forest as read back from the text serialization.
#[derive(Debug, Clone)]
pub struct ParsedForest {
    pub depth: usize,
    pub n_features: usize,
    pub weights: Vec<f64>,
    pub trees: Vec<BTreeMap<usize, ParsedNode>>,
}

/// Minimal independent parser for the forest text format. Panics on
/// malformed input — this is test scaffolding, not a library.
pub fn parse_forest_text(text: &str) -> ParsedForest {
    let mut lines = text.lines();
    let header = |line: Option<&str>, key: &str| -> String {
        let line = line.unwrap_or_else(|| panic!("missing {key} line"));
        line.strip_prefix(key)
            .unwrap_or_else(|| panic!("expected {key} line, got {line:?}"))
            .trim()
            .to_string()
    };
    assert_eq!(lines.next(), Some("forest v1"));
    let depth: usize = header(lines.next(), "depth").parse().unwrap();
    let n_features: usize = header(lines.next(), "features").parse().unwrap();
    let n_trees: usize = header(lines.next(), "trees").parse().unwrap();
    let _seed: u64 = header(lines.next(), "seed").parse().unwrap();
    let weights: Vec<f64> = header(lines.next(), "weights")
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    assert_eq!(weights.len(), n_trees);

    let mut trees = vec![BTreeMap::new(); n_trees];
    let mut saw_end = false;
    for line in lines {
        if line == "end" {
            saw_end = true;
            break;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(fields.len(), 7, "record {line:?}");
        let t: usize = fields[0].parse().unwrap();
        let id: usize = fields[1].parse().unwrap();
        let node = match fields[2] {
            "branch" => ParsedNode::Branch {
                feature: fields[3].parse().unwrap(),
                threshold: fields[4].parse().unwrap(),
            },
            "leaf" => {
                assert_eq!((fields[3], fields[4]), ("-", "-"));
                ParsedNode::Leaf
            }
            other => panic!("unknown node kind {other:?}"),
        };
        assert!(trees[t].insert(id, node).is_none(), "duplicate id {id}");
    }
    assert!(saw_end, "missing end line");
    ParsedForest {
        depth,
        n_features,
        weights,
        trees,
    }
}

/// Level of a breadth-first id, by repeated halving of id + 1.
fn node_level(id: usize) -> usize {
    let mut level = 0;
    let mut n = id + 1;
    while n > 1 {
        n /= 2;
        level += 1;
    }
    level
}

/// Brute-force level-frequency recount: weighted split tallies per
/// (level, feature), divided by the observed split count of the level or
/// by trees times level slots, depending on the mode.
pub fn recount_level_frequency(pf: &ParsedForest, full_level: bool) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; pf.n_features]; pf.depth];
    for level in 0..pf.depth {
        let mut observed = 0usize;
        for tree in &pf.trees {
            for (&id, node) in tree {
                if node_level(id) == level && matches!(node, ParsedNode::Branch { .. }) {
                    observed += 1;
                }
            }
        }
        let den = if full_level {
            (pf.trees.len() * (1usize << level)) as f64
        } else {
            observed as f64
        };
        if den == 0.0 {
            continue;
        }
        for j in 0..pf.n_features {
            let mut num = 0.0;
            for (tree, &w) in pf.trees.iter().zip(&pf.weights) {
                for (&id, node) in tree {
                    if node_level(id) != level {
                        continue;
                    }
                    if matches!(node, ParsedNode::Branch { feature, .. } if *feature == j) {
                        num += w;
                    }
                }
            }
            out[level][j] = num / den;
        }
    }
    out
}

/// Brute-force node-frequency recount: weighted tallies per breadth-first
/// slot, divided by how many trees split that slot at all.
pub fn recount_node_frequency(pf: &ParsedForest) -> Vec<Vec<f64>> {
    let slots = (1usize << pf.depth) - 1;
    let mut out = vec![vec![0.0; pf.n_features]; slots];
    for id in 0..slots {
        let mut splitters = 0usize;
        for tree in &pf.trees {
            if matches!(tree.get(&id), Some(ParsedNode::Branch { .. })) {
                splitters += 1;
            }
        }
        if splitters == 0 {
            continue;
        }
        for j in 0..pf.n_features {
            let mut num = 0.0;
            for (tree, &w) in pf.trees.iter().zip(&pf.weights) {
                if let Some(ParsedNode::Branch { feature, .. }) = tree.get(&id) {
                    if *feature == j {
                        num += w;
                    }
                }
            }
            out[id][j] = num / splitters as f64;
        }
    }
    out
}

/// Routes a sample through a parsed tree: left on `value <= threshold`.
pub fn route(tree: &BTreeMap<usize, ParsedNode>, x: &[f64]) -> usize {
    let mut id = 0;
    loop {
        match tree.get(&id).expect("route hit a missing node") {
            ParsedNode::Leaf => return id,
            ParsedNode::Branch { feature, threshold } => {
                id = if x[*feature] <= *threshold {
                    2 * id + 1
                } else {
                    2 * id + 2
                };
            }
        }
    }
}

/// Brute-force proximity recount: for every pair, the weighted count of
/// trees routing both rows to the same leaf, divided by the tree count.
pub fn recount_proximity(pf: &ParsedForest, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let leaves: Vec<Vec<usize>> = pf
        .trees
        .iter()
        .map(|tree| rows.iter().map(|x| route(tree, x)).collect())
        .collect();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let mut same = 0.0;
            for (t, &w) in pf.weights.iter().enumerate() {
                if leaves[t][i] == leaves[t][k] {
                    same += w;
                }
            }
            out[i][k] = same / pf.trees.len() as f64;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// MILP oracle: exhaustive binary enumeration + Fourier–Motzkin LP
// ---------------------------------------------------------------------------

/// What the enumeration oracle concluded about a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleOutcome {
    Optimal(f64),
    Infeasible,
}

/// Independent optimum: enumerate every assignment of the free binaries
/// (with interval-arithmetic pruning), and settle the continuous
/// remainder of each leaf by Fourier–Motzkin elimination, component by
/// component. Exact up to ~1e-9 bookkeeping slack — far inside the 1e-6
/// comparison tolerance.
pub fn oracle_optimum(model: &MilpModel) -> OracleOutcome {
    let free: Vec<usize> = model
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary && v.lb < v.ub)
        .map(|(id, _)| id)
        .collect();
    let mut order = free;
    order.sort_by(|&a, &b| {
        model.variables[b]
            .branch_priority
            .cmp(&model.variables[a].branch_priority)
            .then(a.cmp(&b))
    });

    let mut var_rows: Vec<Vec<usize>> = vec![Vec::new(); model.n_variables()];
    for (r, row) in model.constraints.iter().enumerate() {
        for &(v, _) in &row.terms {
            var_rows[v].push(r);
        }
    }

    // Bound-fixed variables keep their value; free binaries are assigned
    // during the walk and free continuous variables are eliminated.
    let mut fixed: Vec<Option<f64>> = model
        .variables
        .iter()
        .map(|v| if v.is_fixed() { Some(v.lb) } else { None })
        .collect();

    let mut search = Search {
        model,
        order,
        var_rows,
        best: f64::INFINITY,
        feasible: false,
    };
    search.walk(0, &mut fixed);
    if search.feasible {
        OracleOutcome::Optimal(search.best)
    } else {
        OracleOutcome::Infeasible
    }
}

struct Search<'m> {
    model: &'m MilpModel,
    order: Vec<usize>,
    var_rows: Vec<Vec<usize>>,
    best: f64,
    feasible: bool,
}

impl Search<'_> {
    fn walk(&mut self, k: usize, fixed: &mut Vec<Option<f64>>) {
        if self.objective_floor(fixed) > self.best + 1e-9 {
            return;
        }
        if k == self.order.len() {
            if let Some(value) = self.settle_leaf(fixed) {
                self.feasible = true;
                if value < self.best {
                    self.best = value;
                }
            }
            return;
        }
        let var = self.order[k];
        for value in [0.0, 1.0] {
            fixed[var] = Some(value);
            if self.rows_possible(var, fixed) {
                self.walk(k + 1, fixed);
            }
        }
        fixed[var] = None;
    }

    /// Interval bounds of a variable under the current partial fix.
    fn span(&self, v: usize, fixed: &[Option<f64>]) -> (f64, f64) {
        match fixed[v] {
            Some(x) => (x, x),
            None => (self.model.variables[v].lb, self.model.variables[v].ub),
        }
    }

    /// Lower bound on the objective over every completion of the fix.
    fn objective_floor(&self, fixed: &[Option<f64>]) -> f64 {
        let mut floor = self.model.objective.constant;
        for (v, &c) in self.model.objective.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let (lo, hi) = self.span(v, fixed);
            floor += (c * lo).min(c * hi);
        }
        floor
    }

    /// Checks every row touching `var` for interval feasibility.
    fn rows_possible(&self, var: usize, fixed: &[Option<f64>]) -> bool {
        for &r in &self.var_rows[var] {
            let row = &self.model.constraints[r];
            let mut lo = 0.0;
            let mut hi = 0.0;
            for &(v, c) in &row.terms {
                let (vlo, vhi) = self.span(v, fixed);
                lo += (c * vlo).min(c * vhi);
                hi += (c * vlo).max(c * vhi);
            }
            let ok = match row.sense {
                Sense::Le => lo <= row.rhs + 1e-9,
                Sense::Ge => hi >= row.rhs - 1e-9,
                Sense::Eq => lo <= row.rhs + 1e-9 && hi >= row.rhs - 1e-9,
            };
            if !ok {
                return false;
            }
        }
        true
    }

    /// All binaries are fixed: minimize over the continuous remainder.
    /// Returns the full objective value, or None when infeasible.
    fn settle_leaf(&self, fixed: &[Option<f64>]) -> Option<f64> {
        let model = self.model;
        let mut value = model.objective.constant;
        for (v, &x) in fixed.iter().enumerate() {
            if let Some(x) = x {
                value += model.objective.coeffs[v] * x;
            }
        }

        // Rows in <=-form over the still-free variables only.
        let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
        for row in &model.constraints {
            let mut terms = Vec::new();
            let mut rhs_shift = 0.0;
            for &(v, c) in &row.terms {
                match fixed[v] {
                    Some(x) => rhs_shift += c * x,
                    None => terms.push((v, c)),
                }
            }
            let rhs = row.rhs - rhs_shift;
            match row.sense {
                Sense::Le => rows.push((terms, rhs)),
                Sense::Ge => rows.push((negate(&terms), -rhs)),
                Sense::Eq => {
                    rows.push((terms.clone(), rhs));
                    rows.push((negate(&terms), -rhs));
                }
            }
        }
        // Rows whose variables are all fixed collapse to constants; they
        // are feasibility verdicts, not elimination work.
        for (terms, rhs) in &rows {
            if terms.is_empty() && *rhs < -1e-9 {
                return None;
            }
        }
        rows.retain(|(terms, _)| !terms.is_empty());

        // Free variables, grouped into connected components over rows.
        let frees: Vec<usize> = (0..model.n_variables())
            .filter(|&v| fixed[v].is_none())
            .collect();
        let comp = components(&frees, &rows);

        let mut grouped: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &v in &frees {
            grouped.entry(comp[&v]).or_default().push(v);
        }
        for vars in grouped.values() {
            let local: BTreeMap<usize, usize> =
                vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
            let mut local_rows = Vec::new();
            for (terms, rhs) in &rows {
                if terms.iter().any(|(v, _)| local.contains_key(v)) {
                    let mut coeffs = vec![0.0; vars.len()];
                    for &(v, c) in terms {
                        coeffs[local[&v]] = c;
                    }
                    local_rows.push((coeffs, *rhs));
                }
            }
            let cost: Vec<f64> = vars.iter().map(|&v| model.objective.coeffs[v]).collect();
            let lb: Vec<f64> = vars.iter().map(|&v| model.variables[v].lb).collect();
            let ub: Vec<f64> = vars.iter().map(|&v| model.variables[v].ub).collect();
            value += fm_min(local_rows, &cost, &lb, &ub)?;
        }
        Some(value)
    }
}

fn negate(terms: &[(usize, f64)]) -> Vec<(usize, f64)> {
    terms.iter().map(|&(v, c)| (v, -c)).collect()
}

/// Connected components of the free variables, linked when two appear in
/// the same row. Maps each variable to a representative.
fn components(
    frees: &[usize],
    rows: &[(Vec<(usize, f64)>, f64)],
) -> BTreeMap<usize, usize> {
    let mut parent: BTreeMap<usize, usize> = frees.iter().map(|&v| (v, v)).collect();
    fn find(parent: &mut BTreeMap<usize, usize>, v: usize) -> usize {
        let p = parent[&v];
        if p == v {
            v
        } else {
            let root = find(parent, p);
            parent.insert(v, root);
            root
        }
    }
    for (terms, _) in rows {
        let involved: Vec<usize> = terms
            .iter()
            .map(|&(v, _)| v)
            .filter(|v| parent.contains_key(v))
            .collect();
        for pair in involved.windows(2) {
            let a = find(&mut parent, pair[0]);
            let b = find(&mut parent, pair[1]);
            parent.insert(a, b);
        }
    }
    let keys: Vec<usize> = parent.keys().copied().collect();
    for v in keys {
        let root = find(&mut parent, v);
        parent.insert(v, root);
    }
    parent
}

/// Minimizes `cost . x` over `rows` (each `coeffs . x <= rhs`) and the
/// box `[lb, ub]`, by Fourier–Motzkin elimination. All-zero costs reduce
/// to a pure feasibility check. Returns None when the system is empty.
fn fm_min(
    mut rows: Vec<(Vec<f64>, f64)>,
    cost: &[f64],
    lb: &[f64],
    ub: &[f64],
) -> Option<f64> {
    let k = cost.len();
    let optimize = cost.iter().any(|&c| c != 0.0);
    let width = if optimize { k + 1 } else { k };

    for r in &mut rows {
        r.0.resize(width, 0.0);
    }
    for v in 0..k {
        let mut upper = vec![0.0; width];
        upper[v] = 1.0;
        rows.push((upper, ub[v]));
        let mut lower = vec![0.0; width];
        lower[v] = -1.0;
        rows.push((lower, -lb[v]));
    }
    if optimize {
        // cost . x - T <= 0 makes min T the optimum once x is gone.
        let mut objective_row = cost.to_vec();
        objective_row.push(-1.0);
        rows.push((objective_row, 0.0));
    }

    for v in 0..k {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut rest = Vec::new();
        for (coeffs, rhs) in rows {
            let c = coeffs[v];
            if c > 1e-11 {
                pos.push((coeffs, rhs));
            } else if c < -1e-11 {
                neg.push((coeffs, rhs));
            } else {
                rest.push((coeffs, rhs));
            }
        }
        rows = rest;
        for (pc, prhs) in &pos {
            for (nc, nrhs) in &neg {
                let (cp, cn) = (pc[v], -nc[v]);
                let mut combined = vec![0.0; width];
                for w in 0..width {
                    combined[w] = pc[w] / cp + nc[w] / cn;
                }
                combined[v] = 0.0;
                rows.push((combined, prhs / cp + nrhs / cn));
            }
        }
        assert!(rows.len() < 200_000, "elimination blow-up");
    }

    if optimize {
        let mut floor = f64::NEG_INFINITY;
        for (coeffs, rhs) in &rows {
            let c = coeffs[k];
            if c < -1e-11 {
                floor = floor.max(rhs / c);
            } else if c.abs() <= 1e-11 && *rhs < -1e-9 {
                return None;
            }
            // Positive T coefficients cannot arise: T starts with a single
            // negative coefficient and combinations preserve its sign.
        }
        assert!(floor.is_finite(), "bounded boxes cannot leave T free");
        Some(floor)
    } else {
        for (_, rhs) in &rows {
            if *rhs < -1e-9 {
                return None;
            }
        }
        Some(0.0)
    }
}

// ---------------------------------------------------------------------------
// random MILP generator
// ---------------------------------------------------------------------------

/// A small random MILP with finite bounds everywhere. When `anchored`,
/// the right-hand sides are relaxed until a sampled binary point remains
/// feasible, guaranteeing a non-empty mixed-integer region.
pub fn random_milp(rng: &mut ChaCha8Rng, anchored: bool) -> MilpModel {
    let n_bin = rng.random_range(4..=12);
    let n_cont = rng.random_range(0..=3usize);
    let mut model = MilpModel::new();
    for v in 0..n_bin {
        let prio = rng.random_range(0..3);
        model.add_variable(format!("y{v}"), 0.0, 1.0, VarKind::Binary, prio);
    }
    for v in 0..n_cont {
        let lb = -(rng.random_range(0..=2) as f64);
        let ub = lb + rng.random_range(1..=3) as f64;
        model.add_variable(format!("x{v}"), lb, ub, VarKind::Continuous, 0);
    }
    let n = model.n_variables();
    for v in 0..n {
        model.objective.coeffs[v] = rng.random_range(-4..=4) as f64 / 2.0;
    }
    model.objective.constant = rng.random_range(-2..=2) as f64;

    let anchor: Vec<f64> = (0..n)
        .map(|v| {
            if v < n_bin {
                if rng.random::<bool>() {
                    1.0
                } else {
                    0.0
                }
            } else {
                let var = &model.variables[v];
                var.lb + (var.ub - var.lb) * rng.random::<f64>()
            }
        })
        .collect();

    let n_rows = rng.random_range(3..=8);
    for r in 0..n_rows {
        let arity = rng.random_range(1..=3.min(n));
        let mut vars: Vec<usize> = (0..n).collect();
        vars.shuffle(rng);
        vars.truncate(arity);
        vars.sort_unstable();
        let terms: Vec<(usize, f64)> = vars
            .iter()
            .map(|&v| {
                let mut c = 0.0;
                while c == 0.0 {
                    c = rng.random_range(-3..=3) as f64;
                }
                (v, c)
            })
            .collect();
        let sense = match rng.random_range(0..3) {
            0 => Sense::Le,
            1 => Sense::Ge,
            _ => Sense::Eq,
        };
        let mut rhs = rng.random_range(-4..=5) as f64;
        if anchored {
            let at_anchor: f64 = terms.iter().map(|&(v, c)| c * anchor[v]).sum();
            rhs = match sense {
                Sense::Le => at_anchor.max(rhs),
                Sense::Ge => at_anchor.min(rhs),
                Sense::Eq => at_anchor,
            };
        }
        model.add_constraint(format!("r{r}"), terms, sense, rhs);
    }
    model.validate().expect("generated model is structural");
    model
}

// ---------------------------------------------------------------------------
// small assertions
// ---------------------------------------------------------------------------

/// Largest absolute difference between two equally-shaped matrices.
pub fn matrix_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    assert_eq!(a.len(), b.len(), "row count");
    let mut gap: f64 = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        assert_eq!(ra.len(), rb.len(), "column count");
        for (x, y) in ra.iter().zip(rb) {
            gap = gap.max((x - y).abs());
        }
    }
    gap
}
