//! Faithfulness and interpretability metrics for surrogate trees.
//!
//! The central quantity is *fidelity*: how often the surrogate agrees
//! with the ensemble it replaces.  Both fidelity and plain accuracy are
//! computed through the same algebraic form
//!
//! ```text
//! 100 * (1 - (1/(2n)) * sum_i r_i * (r_i - c_i))
//! ```
//!
//! over reference predictions `r` and candidate predictions `c` in
//! `{-1, +1}`, which equals the percentage of samples where the two
//! agree (each disagreement contributes exactly `2` to the sum).
//!
//! Beyond pointwise agreement the module measures partition agreement:
//! of the sample pairs the ensemble always routes together (pairwise
//! proximity exactly 1), what share does the surrogate also co-leaf
//! (`U`), and of the pairs the ensemble never routes together
//! (proximity exactly 0), what share does the surrogate also separate
//! (`U-bar`).  Either fraction is undefined when its reference set is
//! empty, reported as `None` and an empty CSV cell.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dataset::Dataset;
use crate::forest::{Forest, ForestError};
use crate::stats::{proximal_pairs, proximity, FrequencyMode, LevelFrequencyMatrix};
use crate::surrogate::SurrogateTree;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot score an empty prediction vector")]
    Empty,
    #[error("prediction vectors disagree in length: {left} vs {right}")]
    Mismatch { left: usize, right: usize },
    #[error("predictions must be -1 or +1, found {0}")]
    BadLabel(i8),
    #[error(transparent)]
    Forest(#[from] ForestError),
}

/// Percentage of positions where two sign vectors agree, computed via
/// the algebraic form `100 * (1 - (1/(2n)) * sum r_i (r_i - c_i))`.
pub fn agreement_percent(reference: &[i8], candidate: &[i8]) -> Result<f64, EvalError> {
    if reference.len() != candidate.len() {
        return Err(EvalError::Mismatch {
            left: reference.len(),
            right: candidate.len(),
        });
    }
    if reference.is_empty() {
        return Err(EvalError::Empty);
    }
    if let Some(&bad) = reference
        .iter()
        .chain(candidate)
        .find(|&&v| v != -1 && v != 1)
    {
        return Err(EvalError::BadLabel(bad));
    }
    let sum: f64 = reference
        .iter()
        .zip(candidate)
        .map(|(&r, &c)| f64::from(r) * (f64::from(r) - f64::from(c)))
        .sum();
    Ok(100.0 * (1.0 - sum / (2.0 * reference.len() as f64)))
}

/// Percentage of samples where the surrogate reproduces the ensemble's
/// prediction.
pub fn fidelity(
    surrogate: &SurrogateTree,
    forest: &Forest,
    data: &Dataset,
) -> Result<f64, EvalError> {
    let reference = forest.predict_all(data)?;
    let candidate = surrogate.predict_all(data);
    agreement_percent(&reference, &candidate)
}

/// Percentage of samples where the surrogate matches the true label.
pub fn surrogate_accuracy(surrogate: &SurrogateTree, data: &Dataset) -> Result<f64, EvalError> {
    agreement_percent(data.labels(), &surrogate.predict_all(data))
}

/// Percentage of samples where the ensemble matches the true label.
pub fn forest_accuracy(forest: &Forest, data: &Dataset) -> Result<f64, EvalError> {
    agreement_percent(data.labels(), &forest.predict_all(data)?)
}

/// Per-level feature frequency of the surrogate: the fraction of branch
/// slots at each level whose hyperplane gives the feature a nonzero
/// coefficient.  Inert slots count in the denominator, mirroring the
/// full-level convention of the ensemble statistic it is compared with.
pub fn miret_level_frequency(surrogate: &SurrogateTree) -> LevelFrequencyMatrix {
    let topo = surrogate.topology();
    let rows = (0..surrogate.depth())
        .map(|level| {
            let slots = topo.branches_at(level).count() as f64;
            let mut row = vec![0.0; surrogate.n_features()];
            for t in topo.branches_at(level) {
                for (j, &a) in surrogate.coefficients()[t].iter().enumerate() {
                    if a != 0.0 {
                        row[j] += 1.0 / slots;
                    }
                }
            }
            row
        })
        .collect();
    LevelFrequencyMatrix::from_rows(FrequencyMode::FullLevel, rows)
}

/// Partition-agreement fractions between ensemble and surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityAgreement {
    /// Share of always-co-leafed ensemble pairs the surrogate co-leafs,
    /// as a percentage; `None` when no such pair exists.
    pub u_percent: Option<f64>,
    /// Number of always-co-leafed ensemble pairs.
    pub u_count: usize,
    /// Share of never-co-leafed ensemble pairs the surrogate separates,
    /// as a percentage; `None` when no such pair exists.
    pub u_bar_percent: Option<f64>,
    /// Number of never-co-leafed ensemble pairs.
    pub u_bar_count: usize,
}

/// Compares the pair partitions induced by ensemble proximity and by
/// the surrogate's leaves on the given split.
pub fn proximity_agreement(
    surrogate: &SurrogateTree,
    forest: &Forest,
    data: &Dataset,
) -> Result<ProximityAgreement, EvalError> {
    let prox = proximity(forest, data)?;
    let leaves: Vec<usize> = (0..data.n_samples())
        .map(|i| surrogate.leaf(data.sample(i)))
        .collect();
    let always = proximal_pairs(&prox, 1.0);
    let u_count = always.len();
    let u_hits = always
        .iter()
        .filter(|&&(i, k)| leaves[i] == leaves[k])
        .count();
    let n = data.n_samples();
    let mut u_bar_count = 0usize;
    let mut u_bar_hits = 0usize;
    for i in 0..n {
        for k in i + 1..n {
            if prox.get(i, k) == 0.0 {
                u_bar_count += 1;
                if leaves[i] != leaves[k] {
                    u_bar_hits += 1;
                }
            }
        }
    }
    let percent = |hits: usize, count: usize| {
        (count > 0).then(|| 100.0 * hits as f64 / count as f64)
    };
    Ok(ProximityAgreement {
        u_percent: percent(u_hits, u_count),
        u_count,
        u_bar_percent: percent(u_bar_hits, u_bar_count),
        u_bar_count,
    })
}

/// Everything worth reporting about one surrogate on one split.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub fidelity: f64,
    pub surrogate_accuracy: f64,
    pub forest_accuracy: f64,
    pub level_frequency: LevelFrequencyMatrix,
    pub proximity: ProximityAgreement,
}

impl EvalReport {
    /// Machine-readable summary: one header line, one value line, empty
    /// cells for undefined fractions.
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(|p| p.to_string()).unwrap_or_default();
        format!(
            "fidelity_percent,surrogate_accuracy_percent,forest_accuracy_percent,\
             u_percent,u_count,u_bar_percent,u_bar_count\n{},{},{},{},{},{},{}\n",
            self.fidelity,
            self.surrogate_accuracy,
            self.forest_accuracy,
            cell(self.proximity.u_percent),
            self.proximity.u_count,
            cell(self.proximity.u_bar_percent),
            self.proximity.u_bar_count,
        )
    }

    /// Human-readable summary table.
    pub fn to_text(&self, feature_names: &[String]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "fidelity            {:.1}%", self.fidelity);
        let _ = writeln!(out, "surrogate accuracy  {:.1}%", self.surrogate_accuracy);
        let _ = writeln!(out, "forest accuracy     {:.1}%", self.forest_accuracy);
        match self.proximity.u_percent {
            Some(p) => {
                let _ = writeln!(
                    out,
                    "co-leafed pairs     {:.1}% of {}",
                    p, self.proximity.u_count
                );
            }
            None => {
                let _ = writeln!(out, "co-leafed pairs     undefined (no reference pairs)");
            }
        }
        match self.proximity.u_bar_percent {
            Some(p) => {
                let _ = writeln!(
                    out,
                    "separated pairs     {:.1}% of {}",
                    p, self.proximity.u_bar_count
                );
            }
            None => {
                let _ = writeln!(out, "separated pairs     undefined (no reference pairs)");
            }
        }
        out.push_str("surrogate level frequency:\n");
        out.push_str(&self.level_frequency.to_csv(feature_names));
        out
    }
}

/// Scores a surrogate against its source ensemble on one split.
pub fn evaluate(
    surrogate: &SurrogateTree,
    forest: &Forest,
    data: &Dataset,
) -> Result<EvalReport, EvalError> {
    let reference = forest.predict_all(data)?;
    let candidate = surrogate.predict_all(data);
    Ok(EvalReport {
        fidelity: agreement_percent(&reference, &candidate)?,
        surrogate_accuracy: agreement_percent(data.labels(), &candidate)?,
        forest_accuracy: agreement_percent(data.labels(), &reference)?,
        level_frequency: miret_level_frequency(surrogate),
        proximity: proximity_agreement(surrogate, forest, data)?,
    })
}

// ---------------------------------------------------------------------------
