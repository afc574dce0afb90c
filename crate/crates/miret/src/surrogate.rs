//! Oblique surrogate trees decoded from compression solutions.
//!
//! A solution vector assigns every branch of the complete topology a
//! hyperplane `a.x + b` and every training sample a leaf.  This module
//! turns that vector into a [`SurrogateTree`]: a standalone predictor
//! that routes a sample left exactly when its projection is at most
//! zero and classifies by the fixed leaf parity (odd leaf ids are the
//! negative class).
//!
//! [`SurrogateTree::decode`] cross-checks the assignment binaries
//! against the geometry: for each training sample it walks the path its
//! leaf assignment prescribes and verifies every routing inequality
//! within tolerance, so a corrupted or misaligned solution is rejected
//! instead of silently producing a tree that disagrees with the
//! optimizer's bookkeeping.  Coefficients with magnitude at most `1e-8`
//! are snapped to zero first; they are numerical dust from the
//! relaxation and cannot influence a routing decision at the model's
//! margin.
//!
//! Trees serialize to a line-oriented text format in the spirit of the
//! forest's: a short header, one `b` record per branch, one `a` record
//! per nonzero coefficient, one `s` record per raised split indicator,
//! and a final `end` line.  Output is byte-deterministic.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::dataset::Dataset;
use crate::model::build::MiretModel;
use crate::model::topology::TreeTopology;

/// Coefficients at or below this magnitude are treated as exact zeros.
const SNAP: f64 = 1e-8;

/// Slack allowed when replaying routing inequalities during decoding.
const ROUTING_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("solution has {got} entries but the model has {expected} variables")]
    Arity { expected: usize, got: usize },
    #[error("sample {sample} is assigned to {leaves} leaves, expected exactly one")]
    Assignment { sample: usize, leaves: usize },
    #[error(
        "sample {sample} is assigned through branch {branch} but its projection \
         {value} violates the {side} routing inequality"
    )]
    Disagreement {
        sample: usize,
        branch: usize,
        side: &'static str,
        value: f64,
    },
    #[error("line {line}: {what}")]
    Format { line: usize, what: String },
}

/// A complete multivariate decision tree of fixed depth.
///
/// Branches are numbered breadth-first from the root (`0`), leaves
/// continue the numbering on the deepest level.  `coefficients[t]` and
/// `intercepts[t]` define the hyperplane of branch `t`; `indicators[t]`
/// carries the solution's split-indicator column for bookkeeping (an
/// indicator can be raised on a zero coefficient when the model's
/// minimum-split cut demanded it, so it is stored rather than derived).
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateTree {
    depth: usize,
    n_features: usize,
    coefficients: Vec<Vec<f64>>,
    intercepts: Vec<f64>,
    indicators: Vec<Vec<f64>>,
}

impl SurrogateTree {
    /// Builds a tree from explicit tables, validating shape.
    pub fn new(
        depth: usize,
        n_features: usize,
        coefficients: Vec<Vec<f64>>,
        intercepts: Vec<f64>,
        indicators: Vec<Vec<f64>>,
    ) -> Result<Self, SurrogateError> {
        let fail = |what: &str| SurrogateError::Format {
            line: 0,
            what: what.to_string(),
        };
        if depth == 0 || n_features == 0 {
            return Err(fail("depth and features must be positive"));
        }
        let n_branches = TreeTopology::new(depth).n_branches();
        if coefficients.len() != n_branches
            || intercepts.len() != n_branches
            || indicators.len() != n_branches
        {
            return Err(fail("branch table length differs from the topology"));
        }
        if coefficients.iter().any(|row| row.len() != n_features)
            || indicators.iter().any(|row| row.len() != n_features)
        {
            return Err(fail("coefficient row width differs from the feature count"));
        }
        let finite = |v: &f64| v.is_finite();
        if !coefficients.iter().flatten().all(finite)
            || !intercepts.iter().all(finite)
            || !indicators.iter().flatten().all(finite)
        {
            return Err(fail("tables must be finite"));
        }
        Ok(SurrogateTree {
            depth,
            n_features,
            coefficients,
            intercepts,
            indicators,
        })
    }

    /// Extracts the tree from a solution vector and verifies that the
    /// assignment binaries agree with the hyperplane geometry on every
    /// training sample.
    pub fn decode(
        model: &MiretModel,
        x: &[f64],
        data: &Dataset,
    ) -> Result<Self, SurrogateError> {
        let map = &model.map;
        let topo = model.topology;
        if x.len() != map.n_variables() {
            return Err(SurrogateError::Arity {
                expected: map.n_variables(),
                got: x.len(),
            });
        }
        let n_branches = topo.n_branches();
        let mut coefficients = vec![vec![0.0; map.n_features]; n_branches];
        let mut intercepts = vec![0.0; n_branches];
        let mut indicators = vec![vec![0.0; map.n_features]; n_branches];
        for t in topo.branches() {
            intercepts[t] = x[map.b(t)];
            for j in 0..map.n_features {
                let a = x[map.a(t, j)];
                if a.abs() > SNAP {
                    coefficients[t][j] = a;
                }
                if x[map.s(t, j)] > 0.5 {
                    indicators[t][j] = 1.0;
                }
            }
        }
        let tree = SurrogateTree::new(
            topo.depth,
            map.n_features,
            coefficients,
            intercepts,
            indicators,
        )?;

        // Replay each sample's assigned path and verify both routing
        // inequalities: left needs projection <= 0, right needs the
        // strict margin, each within tolerance.
        let epsilon = model.hyperparams.epsilon;
        for i in 0..data.n_samples() {
            let assigned: Vec<usize> = topo
                .leaves()
                .filter(|&l| x[map.z(i, l)] > 0.5)
                .collect();
            let [leaf] = assigned[..] else {
                return Err(SurrogateError::Assignment {
                    sample: i,
                    leaves: assigned.len(),
                });
            };
            let mut t = 0usize;
            while t < n_branches {
                let value = tree.project(t, data.sample(i));
                if topo.left_leaves(t).contains(&leaf) {
                    if value > ROUTING_TOL {
                        return Err(SurrogateError::Disagreement {
                            sample: i,
                            branch: t,
                            side: "left",
                            value,
                        });
                    }
                    t = topo.left_child(t);
                } else {
                    if value < epsilon - ROUTING_TOL {
                        return Err(SurrogateError::Disagreement {
                            sample: i,
                            branch: t,
                            side: "right",
                            value,
                        });
                    }
                    t = topo.right_child(t);
                }
            }
            debug_assert_eq!(t, leaf);
        }
        Ok(tree)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn topology(&self) -> TreeTopology {
        TreeTopology::new(self.depth)
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn indicators(&self) -> &[Vec<f64>] {
        &self.indicators
    }

    /// Projection of a sample onto the hyperplane of branch `t`.
    fn project(&self, t: usize, sample: &[f64]) -> f64 {
        self.coefficients[t]
            .iter()
            .zip(sample)
            .map(|(a, x)| a * x)
            .sum::<f64>()
            + self.intercepts[t]
    }

    /// The leaf a sample reaches: left when the projection is at most
    /// zero, right otherwise.
    pub fn leaf(&self, sample: &[f64]) -> usize {
        assert_eq!(sample.len(), self.n_features, "sample arity");
        let topo = self.topology();
        let mut t = 0usize;
        while t < topo.n_branches() {
            t = if self.project(t, sample) <= 0.0 {
                topo.left_child(t)
            } else {
                topo.right_child(t)
            };
        }
        t
    }

    /// Predicted class of a sample, from the fixed parity of its leaf.
    pub fn predict(&self, sample: &[f64]) -> i8 {
        self.topology().leaf_class(self.leaf(sample))
    }

    /// Predictions for every row of a dataset.
    pub fn predict_all(&self, data: &Dataset) -> Vec<i8> {
        (0..data.n_samples())
            .map(|i| self.predict(data.sample(i)))
            .collect()
    }

    /// Features with a nonzero coefficient anywhere in the tree.
    pub fn features_used(&self) -> BTreeSet<usize> {
        let mut used = BTreeSet::new();
        for row in &self.coefficients {
            for (j, &a) in row.iter().enumerate() {
                if a != 0.0 {
                    used.insert(j);
                }
            }
        }
        used
    }

    /// Number of levels that actually split: one past the deepest level
    /// holding a live hyperplane, zero for an entirely inert tree.
    pub fn effective_depth(&self) -> usize {
        let topo = self.topology();
        (0..self.depth)
            .rev()
            .find(|&level| {
                topo.branches_at(level)
                    .any(|t| self.coefficients[t].iter().any(|&a| a != 0.0))
            })
            .map_or(0, |level| level + 1)
    }

    /// Serializes the tree to a line-oriented text format.
    ///
    /// Header lines (`surrogate v1`, `depth`, `features`) are followed
    /// by one `t b value` record per branch, one `t a j value` record
    /// per nonzero coefficient, one `t s j 1` record per raised split
    /// indicator, and a final `end` line.  Records are ordered by
    /// branch, then kind, then feature, so output is byte-deterministic.
    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "surrogate v1");
        let _ = writeln!(out, "depth {}", self.depth);
        let _ = writeln!(out, "features {}", self.n_features);
        for t in 0..self.intercepts.len() {
            let _ = writeln!(out, "{} b {}", t, self.intercepts[t]);
            for (j, &a) in self.coefficients[t].iter().enumerate() {
                if a != 0.0 {
                    let _ = writeln!(out, "{t} a {j} {a}");
                }
            }
            for (j, &s) in self.indicators[t].iter().enumerate() {
                if s != 0.0 {
                    let _ = writeln!(out, "{t} s {j} 1");
                }
            }
        }
        out.push_str("end\n");
        out
    }

    /// Parses [`SurrogateTree::to_text`] output, validating header
    /// fields, id ranges, record shapes and duplicates, and requiring
    /// exactly one intercept per branch.
    pub fn from_text(text: &str) -> Result<Self, SurrogateError> {
        let fail = |line: usize, what: &str| SurrogateError::Format {
            line,
            what: what.to_string(),
        };
        let mut lines = text.lines().enumerate();
        let mut expect_header = |key: &str| -> Result<(usize, String), SurrogateError> {
            let (no, line) = lines
                .next()
                .ok_or_else(|| fail(0, "unexpected end of input"))?;
            let rest = line
                .strip_prefix(key)
                .ok_or_else(|| fail(no + 1, &format!("expected {key:?} line")))?;
            Ok((no, rest.trim().to_string()))
        };

        expect_header("surrogate v1")?;
        let (no, depth_s) = expect_header("depth")?;
        let depth: usize = depth_s.parse().map_err(|_| fail(no + 1, "bad depth"))?;
        let (no, nf_s) = expect_header("features")?;
        let n_features: usize = nf_s.parse().map_err(|_| fail(no + 1, "bad features"))?;
        if depth == 0 || n_features == 0 {
            return Err(fail(no + 1, "depth and features must be positive"));
        }
        let n_branches = TreeTopology::new(depth).n_branches();
        let mut coefficients = vec![vec![0.0; n_features]; n_branches];
        let mut indicators = vec![vec![0.0; n_features]; n_branches];
        let mut intercepts = vec![f64::NAN; n_branches];
        let mut saw_end = false;
        for (no, line) in lines {
            if line == "end" {
                saw_end = true;
                break;
            }
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let t: usize = fields
                .first()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| fail(no + 1, "bad branch id"))?;
            if t >= n_branches {
                return Err(fail(no + 1, "branch id beyond depth capacity"));
            }
            match fields.get(1).copied() {
                Some("b") => {
                    let [_, _, value_s] = fields[..] else {
                        return Err(fail(no + 1, "expected 3 fields for an intercept"));
                    };
                    let value: f64 = value_s
                        .parse()
                        .map_err(|_| fail(no + 1, "bad intercept"))?;
                    if !value.is_finite() {
                        return Err(fail(no + 1, "intercept must be finite"));
                    }
                    if !intercepts[t].is_nan() {
                        return Err(fail(no + 1, "duplicate intercept"));
                    }
                    intercepts[t] = value;
                }
                Some(kind @ ("a" | "s")) => {
                    let [_, _, j_s, value_s] = fields[..] else {
                        return Err(fail(no + 1, "expected 4 fields for a record"));
                    };
                    let j: usize = j_s.parse().map_err(|_| fail(no + 1, "bad feature"))?;
                    if j >= n_features {
                        return Err(fail(no + 1, "feature index out of range"));
                    }
                    let value: f64 = value_s
                        .parse()
                        .map_err(|_| fail(no + 1, "bad coefficient"))?;
                    if kind == "a" {
                        if !value.is_finite() || value == 0.0 {
                            return Err(fail(no + 1, "coefficient must be finite and nonzero"));
                        }
                        if coefficients[t][j] != 0.0 {
                            return Err(fail(no + 1, "duplicate coefficient"));
                        }
                        coefficients[t][j] = value;
                    } else {
                        if value != 1.0 {
                            return Err(fail(no + 1, "indicator must be 1"));
                        }
                        if indicators[t][j] != 0.0 {
                            return Err(fail(no + 1, "duplicate indicator"));
                        }
                        indicators[t][j] = 1.0;
                    }
                }
                _ => return Err(fail(no + 1, "unknown record kind")),
            }
        }
        if !saw_end {
            return Err(fail(0, "missing end line"));
        }
        if let Some(t) = intercepts.iter().position(|b| b.is_nan()) {
            return Err(fail(0, &format!("branch {t} is missing its intercept")));
        }
        SurrogateTree::new(depth, n_features, coefficients, intercepts, indicators)
    }
}

// ---------------------------------------------------------------------------
