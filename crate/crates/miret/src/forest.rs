//! Fixed-depth random forest: training, prediction and a text format.
//!
//! Trees are CART-style with axis-aligned splits chosen by Gini impurity
//! over bootstrap samples. Depth is capped, nodes use breadth-first ids
//! (children of `t` are `2t+1` and `2t+2`), and every node keeps the
//! class counts of the bootstrap rows that reached it — the statistics
//! modules work from those counts alone. Feature subsampling is
//! available behind [`ForestConfig::max_features`] but is off by
//! default, so every tree sees every feature and tree weights default
//! to 1.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::Dataset;

/// Errors from training, prediction or (de)serialization of forests.
#[derive(Debug, Error)]
pub enum ForestError {
    #[error("bad forest configuration: {0}")]
    BadConfig(String),
    #[error("tree {tree} is corrupt at node {node}: {what}")]
    CorruptTree {
        tree: usize,
        node: usize,
        what: String,
    },
    #[error("tree {tree}: sample routed to leaf {node} with zero training count")]
    EmptyLeaf { tree: usize, node: usize },
    #[error("forest text line {line}: {what}")]
    Format { line: usize, what: String },
    #[error("sample has {found} features, forest expects {expected}")]
    FeatureArity { found: usize, expected: usize },
}

/// What a node does: split on one feature or stop.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Branch { feature: usize, threshold: f64 },
    Leaf,
}

/// One node of a tree plus the class counts of the bootstrap rows that
/// reached it (`counts[0]` for label -1, `counts[1]` for +1).
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub kind: NodeKind,
    pub counts: [u32; 2],
}

/// A single depth-capped tree. Nodes live in a sparse map keyed by
/// breadth-first id; absent ids simply were never grown.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: BTreeMap<usize, TreeNode>,
}

/// A trained ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub depth: usize,
    pub n_features: usize,
    pub trees: Vec<Tree>,
    pub weights: Vec<f64>,
    pub seed: u64,
}

/// Training configuration.
#[derive(Debug, Clone)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub depth: usize,
    pub seed: u64,
    /// Features examined per split; `None` means all of them.
    pub max_features: Option<usize>,
    /// Per-tree vote weights; `None` means unit weights.
    pub weights: Option<Vec<f64>>,
}

impl ForestConfig {
    pub fn new(n_trees: usize, depth: usize, seed: u64) -> Self {
        Self {
            n_trees,
            depth,
            seed,
            max_features: None,
            weights: None,
        }
    }
}

/// Level of a breadth-first node id: floor(log2(id + 1)).
pub(crate) fn level_of(id: usize) -> usize {
    (usize::BITS - 1 - (id + 1).leading_zeros()) as usize
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

pub(crate) fn gini(counts: [u32; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / n;
    let p1 = counts[1] as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

pub(crate) fn label_slot(y: i8) -> usize {
    usize::from(y == 1)
}

pub(crate) struct BestSplit {
    pub(crate) feature: usize,
    pub(crate) threshold: f64,
    pub(crate) score: f64,
}

/// Scans candidate thresholds (midpoints between consecutive distinct
/// values) of every allowed feature and returns the split minimizing the
/// weighted child Gini. Ties resolve to the smaller feature index, then
/// the smaller threshold, because candidates are visited in that order
/// and only strict improvements replace the incumbent.
pub(crate) fn best_split(
    data: &Dataset,
    indices: &[usize],
    features: &[usize],
    parent_counts: [u32; 2],
) -> Option<BestSplit> {
    let n = indices.len();
    let mut best: Option<BestSplit> = None;
    let mut sorted: Vec<(f64, i8)> = Vec::with_capacity(n);
    for &j in features {
        sorted.clear();
        sorted.extend(
            indices
                .iter()
                .map(|&i| (data.sample(i)[j], data.label(i))),
        );
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = [0u32; 2];
        for k in 0..n - 1 {
            left[label_slot(sorted[k].1)] += 1;
            let (v1, v2) = (sorted[k].0, sorted[k + 1].0);
            if v1 >= v2 {
                continue;
            }
            let right = [parent_counts[0] - left[0], parent_counts[1] - left[1]];
            let n_left = (k + 1) as f64;
            let n_right = (n - k - 1) as f64;
            let score = (n_left * gini(left) + n_right * gini(right)) / n as f64;
            if best.as_ref().is_none_or(|b| score < b.score - 1e-12) {
                // Midpoint of the gap; if rounding pushed it onto the
                // upper value, fall back to the lower one so both sides
                // stay non-empty under `x <= threshold`.
                let mut threshold = v1 + (v2 - v1) / 2.0;
                if threshold >= v2 {
                    threshold = v1;
                }
                best = Some(BestSplit {
                    feature: j,
                    threshold,
                    score,
                });
            }
        }
    }
    best
}

fn grow(
    data: &Dataset,
    config: &ForestConfig,
    rng: &mut ChaCha8Rng,
    nodes: &mut BTreeMap<usize, TreeNode>,
    id: usize,
    level: usize,
    indices: Vec<usize>,
) {
    let mut counts = [0u32; 2];
    for &i in &indices {
        counts[label_slot(data.label(i))] += 1;
    }
    let pure = counts[0] == 0 || counts[1] == 0;
    if level == config.depth || pure {
        nodes.insert(id, TreeNode { kind: NodeKind::Leaf, counts });
        return;
    }

    let all: Vec<usize> = (0..data.n_features()).collect();
    let sampled;
    let features: &[usize] = match config.max_features {
        Some(k) if k < all.len() => {
            let mut pick = rand::seq::index::sample(rng, all.len(), k).into_vec();
            pick.sort_unstable();
            sampled = pick;
            &sampled
        }
        _ => &all,
    };

    let split = best_split(data, &indices, features, counts);
    let improving = split
        .as_ref()
        .map(|s| gini(counts) - s.score > 1e-12)
        .unwrap_or(false);
    if !improving {
        nodes.insert(id, TreeNode { kind: NodeKind::Leaf, counts });
        return;
    }
    let split = split.unwrap();

    let (mut left_idx, mut right_idx) = (Vec::new(), Vec::new());
    for &i in &indices {
        if data.sample(i)[split.feature] <= split.threshold {
            left_idx.push(i);
        } else {
            right_idx.push(i);
        }
    }
    debug_assert!(!left_idx.is_empty() && !right_idx.is_empty());

    nodes.insert(
        id,
        TreeNode {
            kind: NodeKind::Branch {
                feature: split.feature,
                threshold: split.threshold,
            },
            counts,
        },
    );
    grow(data, config, rng, nodes, 2 * id + 1, level + 1, left_idx);
    grow(data, config, rng, nodes, 2 * id + 2, level + 1, right_idx);
}

fn train_tree(data: &Dataset, config: &ForestConfig, tree_index: usize) -> Tree {
    // One independent ChaCha stream per tree: training is parallel per
    // tree yet byte-for-byte reproducible regardless of scheduling.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(tree_index as u64 + 1);
    let n = data.n_samples();
    let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut nodes = BTreeMap::new();
    grow(data, config, &mut rng, &mut nodes, 0, 0, bootstrap);
    Tree { nodes }
}

/// Trains `n_trees` bootstrap CART trees of depth at most `depth`.
pub fn train(data: &Dataset, config: &ForestConfig) -> Result<Forest, ForestError> {
    if config.n_trees == 0 {
        return Err(ForestError::BadConfig("n_trees must be positive".into()));
    }
    if config.depth == 0 || config.depth > 16 {
        return Err(ForestError::BadConfig(format!(
            "depth must be in 1..=16, got {}",
            config.depth
        )));
    }
    if let Some(k) = config.max_features {
        if k == 0 {
            return Err(ForestError::BadConfig("max_features must be positive".into()));
        }
    }
    let weights = match &config.weights {
        Some(w) => {
            if w.len() != config.n_trees {
                return Err(ForestError::BadConfig(format!(
                    "{} weights for {} trees",
                    w.len(),
                    config.n_trees
                )));
            }
            if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(ForestError::BadConfig("weights must be positive".into()));
            }
            w.clone()
        }
        None => vec![1.0; config.n_trees],
    };

    let trees: Vec<Tree> = (0..config.n_trees)
        .into_par_iter()
        .map(|e| train_tree(data, config, e))
        .collect();

    Ok(Forest {
        depth: config.depth,
        n_features: data.n_features(),
        trees,
        weights,
        seed: config.seed,
    })
}

// ---------------------------------------------------------------------------
// prediction
// ---------------------------------------------------------------------------

impl Tree {
    /// Id of the leaf a sample is routed to (`x[j] <= threshold` goes left).
    pub fn leaf_of(&self, x: &[f64]) -> Result<usize, ForestError> {
        let mut id = 0usize;
        loop {
            let node = self.nodes.get(&id).ok_or(ForestError::CorruptTree {
                tree: 0,
                node: id,
                what: "missing node on routing path".into(),
            })?;
            match node.kind {
                NodeKind::Leaf => return Ok(id),
                NodeKind::Branch { feature, threshold } => {
                    id = if x[feature] <= threshold { 2 * id + 1 } else { 2 * id + 2 };
                }
            }
        }
    }

    /// Majority class of the reached leaf; exact ties break toward -1.
    pub fn predict(&self, x: &[f64]) -> Result<i8, ForestError> {
        let leaf = self.leaf_of(x)?;
        let counts = self.nodes[&leaf].counts;
        Ok(if counts[1] > counts[0] { 1 } else { -1 })
    }

    /// Breadth-first ids of nodes that actually split.
    pub fn branch_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .filter(|(_, n)| matches!(n.kind, NodeKind::Branch { .. }))
            .map(|(&id, _)| id)
    }
}

impl Forest {
    /// Weighted majority vote over the trees; an exact tie breaks to -1.
    pub fn predict(&self, x: &[f64]) -> Result<i8, ForestError> {
        if x.len() != self.n_features {
            return Err(ForestError::FeatureArity {
                found: x.len(),
                expected: self.n_features,
            });
        }
        let mut sum = 0.0;
        for (tree, &w) in self.trees.iter().zip(&self.weights) {
            sum += w * f64::from(tree.predict(x)?);
        }
        Ok(if sum > 0.0 { 1 } else { -1 })
    }

    /// Predictions for every row of a dataset.
    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<i8>, ForestError> {
        data.features().iter().map(|x| self.predict(x)).collect()
    }

    /// Distinct features used by any split anywhere in the ensemble.
    pub fn used_features(&self) -> BTreeSet<usize> {
        let mut used = BTreeSet::new();
        for tree in &self.trees {
            for node in tree.nodes.values() {
                if let NodeKind::Branch { feature, .. } = node.kind {
                    used.insert(feature);
                }
            }
        }
        used
    }
}

/// Per-sample class probability estimates averaged over trees.
///
/// For sample `i`, each tree contributes the class fractions of the leaf
/// it routes `i` to, and the contributions are averaged uniformly.
#[derive(Debug, Clone)]
pub struct ClassProbabilities {
    pub p_neg: Vec<f64>,
    pub p_pos: Vec<f64>,
}

impl ClassProbabilities {
    /// Probability of the most likely class for sample `i`.
    pub fn prob(&self, i: usize) -> f64 {
        self.p_neg[i].max(self.p_pos[i])
    }

    /// Most likely class for sample `i`; an exact tie breaks to -1.
    pub fn predicted(&self, i: usize) -> i8 {
        if self.p_pos[i] > self.p_neg[i] {
            1
        } else {
            -1
        }
    }

    pub fn len(&self) -> usize {
        self.p_neg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_neg.is_empty()
    }
}

/// Leaf-frequency class probabilities for every row of `data`.
///
/// Errors if any row lands in a leaf that held no bootstrap rows, since
/// that leaf has no frequencies to report.
pub fn class_probabilities(
    forest: &Forest,
    data: &Dataset,
) -> Result<ClassProbabilities, ForestError> {
    let n = data.n_samples();
    let e = forest.trees.len() as f64;
    let mut p_neg = vec![0.0; n];
    let mut p_pos = vec![0.0; n];
    for (t, tree) in forest.trees.iter().enumerate() {
        for i in 0..n {
            let leaf = tree.leaf_of(data.sample(i)).map_err(|err| match err {
                ForestError::CorruptTree { node, what, .. } => ForestError::CorruptTree {
                    tree: t,
                    node,
                    what,
                },
                other => other,
            })?;
            let counts = tree.nodes[&leaf].counts;
            let total = u64::from(counts[0]) + u64::from(counts[1]);
            if total == 0 {
                return Err(ForestError::EmptyLeaf { tree: t, node: leaf });
            }
            p_neg[i] += counts[0] as f64 / total as f64;
            p_pos[i] += counts[1] as f64 / total as f64;
        }
    }
    for i in 0..n {
        p_neg[i] /= e;
        p_pos[i] /= e;
    }
    Ok(ClassProbabilities { p_neg, p_pos })
}

// ---------------------------------------------------------------------------
// text format
// ---------------------------------------------------------------------------

impl Forest {
    /// Serializes the forest to a line-oriented text format.
    ///
    /// Header lines (`forest v1`, `depth`, `features`, `trees`, `seed`,
    /// `weights`) are followed by one record per node in the field order
    /// `tree node kind feature threshold count_neg count_pos`, where
    /// leaves carry `-` in the feature and threshold fields, and a final
    /// `end` line. Output is byte-deterministic for a given forest.
    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "forest v1");
        let _ = writeln!(out, "depth {}", self.depth);
        let _ = writeln!(out, "features {}", self.n_features);
        let _ = writeln!(out, "trees {}", self.trees.len());
        let _ = writeln!(out, "seed {}", self.seed);
        let weights: Vec<String> = self.weights.iter().map(|w| w.to_string()).collect();
        let _ = writeln!(out, "weights {}", weights.join(" "));
        for (t, tree) in self.trees.iter().enumerate() {
            for (&id, node) in &tree.nodes {
                match node.kind {
                    NodeKind::Branch { feature, threshold } => {
                        let _ = writeln!(
                            out,
                            "{} {} branch {} {} {} {}",
                            t, id, feature, threshold, node.counts[0], node.counts[1]
                        );
                    }
                    NodeKind::Leaf => {
                        let _ = writeln!(
                            out,
                            "{} {} leaf - - {} {}",
                            t, id, node.counts[0], node.counts[1]
                        );
                    }
                }
            }
        }
        out.push_str("end\n");
        out
    }

    /// Parses [`Forest::to_text`] output, validating structure: known
    /// header fields, consistent ids (both children of a branch present,
    /// none for a leaf), no branch at the depth cap, feature indices in
    /// range, and child counts summing to their parent's.
    pub fn from_text(text: &str) -> Result<Forest, ForestError> {
        let fail = |line: usize, what: &str| ForestError::Format {
            line,
            what: what.to_string(),
        };
        let mut lines = text.lines().enumerate();
        let mut expect_header = |key: &str| -> Result<(usize, String), ForestError> {
            let (no, line) = lines
                .next()
                .ok_or_else(|| fail(0, "unexpected end of input"))?;
            let rest = line
                .strip_prefix(key)
                .ok_or_else(|| fail(no + 1, &format!("expected {key:?} line")))?;
            Ok((no, rest.trim().to_string()))
        };

        expect_header("forest v1")?;
        let (no, depth_s) = expect_header("depth")?;
        let depth: usize = depth_s.parse().map_err(|_| fail(no + 1, "bad depth"))?;
        let (no, nf_s) = expect_header("features")?;
        let n_features: usize = nf_s.parse().map_err(|_| fail(no + 1, "bad features"))?;
        let (no, nt_s) = expect_header("trees")?;
        let n_trees: usize = nt_s.parse().map_err(|_| fail(no + 1, "bad trees"))?;
        let (no, seed_s) = expect_header("seed")?;
        let seed: u64 = seed_s.parse().map_err(|_| fail(no + 1, "bad seed"))?;
        let (no, w_s) = expect_header("weights")?;
        let weights: Vec<f64> = w_s
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| fail(no + 1, "bad weight"))?;
        if weights.len() != n_trees {
            return Err(fail(no + 1, "weight count differs from tree count"));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(fail(no + 1, "weights must be positive"));
        }
        if depth == 0 || n_trees == 0 || n_features == 0 {
            return Err(fail(no + 1, "depth, features and trees must be positive"));
        }

        let mut trees = vec![
            Tree {
                nodes: BTreeMap::new()
            };
            n_trees
        ];
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
            if fields.len() != 7 {
                return Err(fail(no + 1, "expected 7 fields"));
            }
            let t: usize = fields[0].parse().map_err(|_| fail(no + 1, "bad tree index"))?;
            let id: usize = fields[1].parse().map_err(|_| fail(no + 1, "bad node id"))?;
            if t >= n_trees {
                return Err(fail(no + 1, "tree index out of range"));
            }
            if id >= (1usize << (depth + 1)) - 1 {
                return Err(fail(no + 1, "node id beyond depth capacity"));
            }
            let counts = [
                fields[5]
                    .parse::<u32>()
                    .map_err(|_| fail(no + 1, "bad negative count"))?,
                fields[6]
                    .parse::<u32>()
                    .map_err(|_| fail(no + 1, "bad positive count"))?,
            ];
            let kind = match fields[2] {
                "leaf" => {
                    if fields[3] != "-" || fields[4] != "-" {
                        return Err(fail(no + 1, "leaf must carry - placeholders"));
                    }
                    NodeKind::Leaf
                }
                "branch" => {
                    let feature: usize =
                        fields[3].parse().map_err(|_| fail(no + 1, "bad feature"))?;
                    let threshold: f64 =
                        fields[4].parse().map_err(|_| fail(no + 1, "bad threshold"))?;
                    if feature >= n_features {
                        return Err(fail(no + 1, "feature index out of range"));
                    }
                    if !threshold.is_finite() {
                        return Err(fail(no + 1, "threshold must be finite"));
                    }
                    if level_of(id) >= depth {
                        return Err(fail(no + 1, "branch node at or below the depth cap"));
                    }
                    NodeKind::Branch { feature, threshold }
                }
                other => return Err(fail(no + 1, &format!("unknown kind {other:?}"))),
            };
            if trees[t].nodes.insert(id, TreeNode { kind, counts }).is_some() {
                return Err(fail(no + 1, "duplicate node id"));
            }
        }
        if !saw_end {
            return Err(fail(0, "missing end line"));
        }

        let forest = Forest {
            depth,
            n_features,
            trees,
            weights,
            seed,
        };
        forest.validate()?;
        Ok(forest)
    }

    /// Structural validation shared by parsing and tests.
    pub fn validate(&self) -> Result<(), ForestError> {
        for (t, tree) in self.trees.iter().enumerate() {
            if !tree.nodes.contains_key(&0) {
                return Err(ForestError::CorruptTree {
                    tree: t,
                    node: 0,
                    what: "missing root".into(),
                });
            }
            for (&id, node) in &tree.nodes {
                let left = tree.nodes.get(&(2 * id + 1));
                let right = tree.nodes.get(&(2 * id + 2));
                match node.kind {
                    NodeKind::Branch { .. } => {
                        let (Some(left), Some(right)) = (left, right) else {
                            return Err(ForestError::CorruptTree {
                                tree: t,
                                node: id,
                                what: "branch missing a child".into(),
                            });
                        };
                        let sum = [
                            left.counts[0] + right.counts[0],
                            left.counts[1] + right.counts[1],
                        ];
                        if sum != node.counts {
                            return Err(ForestError::CorruptTree {
                                tree: t,
                                node: id,
                                what: format!(
                                    "child counts {:?} do not sum to parent counts {:?}",
                                    sum, node.counts
                                ),
                            });
                        }
                    }
                    NodeKind::Leaf => {
                        if left.is_some() || right.is_some() {
                            return Err(ForestError::CorruptTree {
                                tree: t,
                                node: id,
                                what: "leaf has children".into(),
                            });
                        }
                    }
                }
                // Orphan check: every non-root node needs its parent.
                if id > 0 && !tree.nodes.contains_key(&((id - 1) / 2)) {
                    return Err(ForestError::CorruptTree {
                        tree: t,
                        node: id,
                        what: "orphan node".into(),
                    });
                }
            }
        }
        Ok(())
    }
}
