//! Ensemble statistics extracted from a trained forest.
//!
//! Everything here reads a [`Forest`] (and, for proximity, a dataset
//! routed through it) and produces the summary tables the rest of the
//! toolkit is built on:
//!
//! * per-level feature frequencies — how often each feature is chosen
//!   for a split at each tree level;
//! * per-node feature frequencies — the same, resolved to individual
//!   breadth-first node positions;
//! * the sample proximity matrix — how often two samples share a leaf;
//! * threshold ranges — the span of cut points observed per node and
//!   feature.
//!
//! From those come the two selector sets used downstream: the frequent
//! features per level (everything strictly above a per-level cutoff)
//! and the high-proximity sample pairs (everything at or above a
//! proximity cutoff).

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::dataset::Dataset;
use crate::forest::{level_of, Forest, ForestError, NodeKind};

/// Denominator convention for level frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyMode {
    /// Divide by the number of nodes that actually split at the level,
    /// summed over trees. Columns of a level sum to 1 under unit weights
    /// whenever the level has any split at all.
    ObservedSplits,
    /// Divide by the full level capacity `trees * 2^level`, counting
    /// leaves and absent nodes as missed chances to split. Level sums
    /// are at most 1 under unit weights.
    FullLevel,
}

// ---------------------------------------------------------------------------
// level frequency
// ---------------------------------------------------------------------------

/// Feature split frequencies per tree level, `values[level][feature]`.
#[derive(Debug, Clone)]
pub struct LevelFrequencyMatrix {
    pub mode: FrequencyMode,
    n_features: usize,
    values: Vec<Vec<f64>>,
}

impl LevelFrequencyMatrix {
    /// Wraps precomputed rows (used for single-tree frequencies too).
    pub(crate) fn from_rows(mode: FrequencyMode, values: Vec<Vec<f64>>) -> Self {
        let n_features = values.first().map_or(0, Vec::len);
        assert!(values.iter().all(|row| row.len() == n_features));
        LevelFrequencyMatrix {
            mode,
            n_features,
            values,
        }
    }

    pub fn n_levels(&self) -> usize {
        self.values.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn get(&self, level: usize, feature: usize) -> f64 {
        self.values[level][feature]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// CSV with a `level` column followed by one column per feature.
    pub fn to_csv(&self, feature_names: &[String]) -> String {
        assert_eq!(feature_names.len(), self.n_features);
        let mut out = String::from("level");
        for name in feature_names {
            let _ = write!(out, ",{name}");
        }
        out.push('\n');
        for (level, row) in self.values.iter().enumerate() {
            let _ = write!(out, "{level}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Computes how often each feature is split on at each level.
///
/// The numerator of an entry is the weighted number of nodes at that
/// level splitting on that feature, accumulated over all trees; the
/// denominator follows `mode`. Levels where no tree splits at all give
/// an all-zero row under [`FrequencyMode::ObservedSplits`].
pub fn level_frequency(forest: &Forest, mode: FrequencyMode) -> LevelFrequencyMatrix {
    let depth = forest.depth;
    let nf = forest.n_features;
    let mut numerator = vec![vec![0.0; nf]; depth];
    let mut observed = vec![0usize; depth];
    for (tree, &w) in forest.trees.iter().zip(&forest.weights) {
        for (&id, node) in &tree.nodes {
            if let NodeKind::Branch { feature, .. } = node.kind {
                let level = level_of(id);
                numerator[level][feature] += w;
                observed[level] += 1;
            }
        }
    }
    let mut values = numerator;
    for (level, row) in values.iter_mut().enumerate() {
        let denominator = match mode {
            FrequencyMode::ObservedSplits => observed[level] as f64,
            FrequencyMode::FullLevel => forest.trees.len() as f64 * (1u64 << level) as f64,
        };
        if denominator > 0.0 {
            for v in row.iter_mut() {
                *v /= denominator;
            }
        }
    }
    LevelFrequencyMatrix {
        mode,
        n_features: nf,
        values,
    }
}

/// Per-level sets of frequent features: feature `j` belongs to level
/// `d`'s set when its frequency is strictly above `cutoffs[d]`.
pub fn frequent_features(
    frequency: &LevelFrequencyMatrix,
    cutoffs: &[f64],
) -> Vec<BTreeSet<usize>> {
    assert_eq!(
        cutoffs.len(),
        frequency.n_levels(),
        "one cutoff per level required"
    );
    frequency
        .values
        .iter()
        .zip(cutoffs)
        .map(|(row, &cut)| {
            row.iter()
                .enumerate()
                .filter(|&(_, &f)| f > cut)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// node frequency
// ---------------------------------------------------------------------------

/// Feature split frequencies per breadth-first node id,
/// `values[node][feature]`. Rows cover every internal slot of the depth
/// cap; a node position that never splits in any tree has a zero row.
#[derive(Debug, Clone)]
pub struct NodeFrequencyMatrix {
    n_features: usize,
    values: Vec<Vec<f64>>,
    /// Number of trees in which each node position splits.
    split_counts: Vec<usize>,
}

impl NodeFrequencyMatrix {
    pub fn n_nodes(&self) -> usize {
        self.values.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn get(&self, node: usize, feature: usize) -> f64 {
        self.values[node][feature]
    }

    /// In how many trees the node position actually splits.
    pub fn split_count(&self, node: usize) -> usize {
        self.split_counts[node]
    }

    /// CSV with a `node` column followed by one column per feature.
    pub fn to_csv(&self, feature_names: &[String]) -> String {
        assert_eq!(feature_names.len(), self.n_features);
        let mut out = String::from("node");
        for name in feature_names {
            let _ = write!(out, ",{name}");
        }
        out.push('\n');
        for (node, row) in self.values.iter().enumerate() {
            let _ = write!(out, "{node}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Computes feature frequencies per node position. An entry is the
/// weighted number of trees splitting that node on that feature, divided
/// by the number of trees splitting the node on anything.
pub fn node_frequency(forest: &Forest) -> NodeFrequencyMatrix {
    let slots = (1usize << forest.depth) - 1;
    let nf = forest.n_features;
    let mut numerator = vec![vec![0.0; nf]; slots];
    let mut split_counts = vec![0usize; slots];
    for (tree, &w) in forest.trees.iter().zip(&forest.weights) {
        for (&id, node) in &tree.nodes {
            if let NodeKind::Branch { feature, .. } = node.kind {
                numerator[id][feature] += w;
                split_counts[id] += 1;
            }
        }
    }
    let mut values = numerator;
    for (id, row) in values.iter_mut().enumerate() {
        if split_counts[id] > 0 {
            for v in row.iter_mut() {
                *v /= split_counts[id] as f64;
            }
        }
    }
    NodeFrequencyMatrix {
        n_features: nf,
        values,
        split_counts,
    }
}

// ---------------------------------------------------------------------------
// proximity
// ---------------------------------------------------------------------------

/// Symmetric sample-by-sample proximity matrix.
#[derive(Debug, Clone)]
pub struct ProximityMatrix {
    values: Vec<Vec<f64>>,
}

impl ProximityMatrix {
    pub fn n_samples(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i][k]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// CSV with a `sample` column followed by one column per sample.
    pub fn to_csv(&self) -> String {
        let n = self.values.len();
        let mut out = String::from("sample");
        for k in 0..n {
            let _ = write!(out, ",{k}");
        }
        out.push('\n');
        for (i, row) in self.values.iter().enumerate() {
            let _ = write!(out, "{i}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Computes the proximity of every sample pair: the weighted fraction of
/// trees routing both samples to the same leaf, divided by the number of
/// trees. Under unit weights the diagonal is exactly 1.
pub fn proximity(forest: &Forest, data: &Dataset) -> Result<ProximityMatrix, ForestError> {
    let n = data.n_samples();
    let mut sums = vec![vec![0.0; n]; n];
    for (tree, &w) in forest.trees.iter().zip(&forest.weights) {
        let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            buckets.entry(tree.leaf_of(data.sample(i))?).or_default().push(i);
        }
        for members in buckets.values() {
            for &a in members {
                for &b in members {
                    sums[a][b] += w;
                }
            }
        }
    }
    let e = forest.trees.len() as f64;
    for row in &mut sums {
        for v in row.iter_mut() {
            *v /= e;
        }
    }
    Ok(ProximityMatrix { values: sums })
}

/// Sample pairs `(i, k)` with `i < k` whose proximity is at least
/// `cutoff`.
pub fn proximal_pairs(proximity: &ProximityMatrix, cutoff: f64) -> Vec<(usize, usize)> {
    let n = proximity.n_samples();
    let mut pairs = Vec::new();
    for i in 0..n {
        for k in i + 1..n {
            if proximity.get(i, k) >= cutoff {
                pairs.push((i, k));
            }
        }
    }
    pairs
}

// ---------------------------------------------------------------------------
// threshold ranges
// ---------------------------------------------------------------------------

/// Minimum and maximum split threshold observed per (node id, feature).
#[derive(Debug, Clone, Default)]
pub struct ThresholdRanges {
    ranges: BTreeMap<(usize, usize), (f64, f64)>,
}

impl ThresholdRanges {
    pub fn get(&self, node: usize, feature: usize) -> Option<(f64, f64)> {
        self.ranges.get(&(node, feature)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        self.ranges
            .iter()
            .map(|(&(node, feature), &(lo, hi))| (node, feature, lo, hi))
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// CSV with columns `node,feature,min,max`, one row per observed
    /// (node, feature) combination in ascending id order.
    pub fn to_csv(&self, feature_names: &[String]) -> String {
        let mut out = String::from("node,feature,min,max\n");
        for (node, feature, lo, hi) in self.iter() {
            let _ = writeln!(out, "{node},{},{lo},{hi}", feature_names[feature]);
        }
        out
    }
}

/// Collects, for every node position and feature, the range of
/// thresholds the ensemble uses there.
pub fn threshold_ranges(forest: &Forest) -> ThresholdRanges {
    let mut ranges: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
    for tree in &forest.trees {
        for (&id, node) in &tree.nodes {
            if let NodeKind::Branch { feature, threshold } = node.kind {
                ranges
                    .entry((id, feature))
                    .and_modify(|(lo, hi)| {
                        *lo = lo.min(threshold);
                        *hi = hi.max(threshold);
                    })
                    .or_insert((threshold, threshold));
            }
        }
    }
    ThresholdRanges { ranges }
}

// ---------------------------------------------------------------------------
// bundle
// ---------------------------------------------------------------------------

/// All statistics for one forest/dataset pair, computed in one pass.
#[derive(Debug, Clone)]
pub struct TeStatistics {
    pub level_frequency: LevelFrequencyMatrix,
    pub node_frequency: NodeFrequencyMatrix,
    pub proximity: ProximityMatrix,
    pub threshold_ranges: ThresholdRanges,
}

impl TeStatistics {
    pub fn compute(
        forest: &Forest,
        data: &Dataset,
        mode: FrequencyMode,
    ) -> Result<Self, ForestError> {
        Ok(Self {
            level_frequency: level_frequency(forest, mode),
            node_frequency: node_frequency(forest),
            proximity: proximity(forest, data)?,
            threshold_ranges: threshold_ranges(forest),
        })
    }
}
