//! Hyperparameter grid search under stratified cross-validation.
//!
//! Two knobs shape the compression trade-off: the sparsity weight
//! `alpha` and the frequency percentile `h` that turns ensemble split
//! frequencies into per-level admission cutoffs.  [`cross_validate`]
//! scores every `(alpha, h)` cell of a [`TuneGrid`] by k-fold
//! cross-validation — train the forest on the fold's training side,
//! compress it, measure fidelity on the held-out side — and selects the
//! cell with the best mean validation fidelity, tie-broken by lower
//! mean sparsity (active split indicators), then lower `alpha`, then
//! higher `h` (fewer admitted features).
//!
//! Percentiles use the nearest-rank convention on ascending positive
//! frequencies: the `ceil(h/100 * n)`-th smallest value.  No
//! interpolation means identical selections on every platform.  The
//! percentile `0` is a sentinel: no cutoff at all, every feature the
//! ensemble split on is admitted.
//!
//! Cells and folds are independent and run in parallel; outcomes are
//! merged in deterministic `(cell, fold)` order, so repeated runs with
//! the same seeds produce byte-identical reports.  A fold whose program
//! cannot produce any tree within its time slice is scored as fidelity
//! zero and flagged rather than aborting the whole search.

use std::fmt::Write as _;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::evaluation::{fidelity, EvalError};
use crate::forest::{train, ForestConfig, ForestError};
use crate::model::build::{build, prepare_inputs, BuildError, MiretHyperparams};
use crate::model::warm::{rounding_heuristic, warm_starts};
use crate::solver::{solve_with, SolveError, SolveOptions};
use crate::stats::LevelFrequencyMatrix;
use crate::surrogate::{SurrogateError, SurrogateTree};

#[derive(Debug, Error)]
pub enum TuneError {
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("fold {fold} has an empty {side} side; use fewer folds or more data")]
    EmptyFold { fold: usize, side: &'static str },
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Decode(#[from] SurrogateError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// The searched hyperparameter grid.
#[derive(Debug, Clone)]
pub struct TuneGrid {
    /// Sparsity penalty weights.
    pub alphas: Vec<f64>,
    /// Frequency percentiles; `0` is the no-cutoff sentinel.
    pub percentiles: Vec<f64>,
    /// Fold count for cross-validation.
    pub folds: usize,
}

impl Default for TuneGrid {
    fn default() -> Self {
        TuneGrid {
            alphas: vec![0.2, 0.4, 0.5, 0.6, 0.8],
            percentiles: vec![0.0, 25.0, 100.0 / 3.0, 50.0],
            folds: 4,
        }
    }
}

impl TuneGrid {
    fn validate(&self) -> Result<(), TuneError> {
        if self.alphas.is_empty() || self.percentiles.is_empty() {
            return Err(TuneError::BadGrid("grids must be non-empty".into()));
        }
        if self.folds < 2 {
            return Err(TuneError::BadGrid("need at least 2 folds".into()));
        }
        if self.alphas.iter().any(|&a| !a.is_finite() || a < 0.0) {
            return Err(TuneError::BadGrid("alphas must be finite and >= 0".into()));
        }
        if self
            .percentiles
            .iter()
            .any(|&h| !(0.0..=100.0).contains(&h))
        {
            return Err(TuneError::BadGrid("percentiles must lie in [0, 100]".into()));
        }
        Ok(())
    }
}

/// Per-level admission cutoffs from a frequency matrix: the nearest-rank
/// `h`-th percentile of each level's positive frequencies.  The sentinel
/// `h = 0` and levels without any positive frequency yield `0`.
pub fn gamma_from_percentile(frequency: &LevelFrequencyMatrix, percentile: f64) -> Vec<f64> {
    assert!(
        (0.0..=100.0).contains(&percentile),
        "percentile must lie in [0, 100]"
    );
    (0..frequency.n_levels())
        .map(|level| {
            if percentile == 0.0 {
                return 0.0;
            }
            let mut positives: Vec<f64> = frequency.rows()[level]
                .iter()
                .copied()
                .filter(|&v| v > 0.0)
                .collect();
            if positives.is_empty() {
                return 0.0;
            }
            positives.sort_by(f64::total_cmp);
            let rank = (percentile / 100.0 * positives.len() as f64).ceil() as usize;
            positives[rank.max(1) - 1]
        })
        .collect()
}

/// Splits indices into `k` validation folds, stratified by class: each
/// class is shuffled with its own generator and dealt round-robin, so
/// fold class shares match the data within one sample.  Every index
/// lands in exactly one fold; folds are sorted for stable downstream
/// iteration.
pub fn stratified_folds(labels: &[i8], k: usize, seed: u64) -> Vec<Vec<usize>> {
    assert!(k >= 2, "need at least 2 folds");
    let mut folds = vec![Vec::new(); k];
    for class in [-1i8, 1] {
        let mut members: Vec<usize> = (0..labels.len())
            .filter(|&i| labels[i] == class)
            .collect();
        // Independent per-class generators keep one class's deal stable
        // when only the other class changes.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        members.shuffle(&mut rng);
        for (pos, idx) in members.into_iter().enumerate() {
            folds[pos % k].push(idx);
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    folds
}

/// One fold's outcome within a grid cell.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub fold: usize,
    /// Validation fidelity in percent; zero when flagged.
    pub fidelity: f64,
    /// Active split indicators in the solved program.
    pub sparsity: f64,
    /// Final optimality gap; `None` when flagged.
    pub gap_percent: Option<f64>,
    pub seconds: f64,
    /// The program produced no tree within its slice (proven infeasible
    /// or no incumbent found in time).
    pub flagged: bool,
}

/// Aggregated outcomes of one `(alpha, percentile)` cell.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub alpha: f64,
    pub percentile: f64,
    pub folds: Vec<FoldOutcome>,
    pub mean_fidelity: f64,
    pub mean_sparsity: f64,
}

/// Full grid-search record plus the selected cell.
#[derive(Debug, Clone)]
pub struct TuneReport {
    pub cells: Vec<CellSummary>,
    pub selected_alpha: f64,
    pub selected_percentile: f64,
}

impl TuneReport {
    /// One CSV row per `(cell, fold)` with per-cell means repeated, empty
    /// gap cells for flagged folds.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "alpha,percentile,fold,fidelity_percent,sparsity,gap_percent,seconds,flagged\n",
        );
        for cell in &self.cells {
            for fold in &cell.folds {
                let gap = fold.gap_percent.map(|g| g.to_string()).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{:.3},{}",
                    cell.alpha,
                    cell.percentile,
                    fold.fold,
                    fold.fidelity,
                    fold.sparsity,
                    gap,
                    fold.seconds,
                    fold.flagged,
                );
            }
        }
        out
    }
}

/// Index of the winning cell: highest mean fidelity, then lowest mean
/// sparsity, then lowest `alpha`, then highest percentile.
pub(crate) fn select(cells: &[CellSummary]) -> usize {
    cells
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            b.mean_fidelity
                .total_cmp(&a.mean_fidelity)
                .then(a.mean_sparsity.total_cmp(&b.mean_sparsity))
                .then(a.alpha.total_cmp(&b.alpha))
                .then(b.percentile.total_cmp(&a.percentile))
        })
        .map(|(i, _)| i)
        .expect("grid validated non-empty")
}

/// Grid-searches `(alpha, percentile)` by stratified cross-validation.
///
/// Every `(cell, fold)` task trains the ensemble on the fold's training
/// side, derives that fold's cutoffs from its own frequency matrix,
/// builds and solves the compression program with a time slice of
/// `budget / (cells * folds)`, and scores the decoded tree's fidelity
/// against the fold ensemble on the held-out side.
pub fn cross_validate(
    data: &Dataset,
    forest_config: &ForestConfig,
    grid: &TuneGrid,
    budget: Duration,
    seed: u64,
) -> Result<TuneReport, TuneError> {
    grid.validate()?;
    let folds = stratified_folds(data.labels(), grid.folds, seed);
    let mut splits = Vec::with_capacity(folds.len());
    for (f, validation) in folds.iter().enumerate() {
        if validation.is_empty() {
            return Err(TuneError::EmptyFold {
                fold: f,
                side: "validation",
            });
        }
        let training: Vec<usize> = (0..data.n_samples())
            .filter(|i| !validation.contains(i))
            .collect();
        if training.is_empty() {
            return Err(TuneError::EmptyFold {
                fold: f,
                side: "training",
            });
        }
        splits.push((data.subset(&training), data.subset(validation)));
    }
    let mut cells = Vec::new();
    for &alpha in &grid.alphas {
        for &percentile in &grid.percentiles {
            cells.push((alpha, percentile));
        }
    }
    let slice = budget
        .div_f64((cells.len() * splits.len()) as f64)
        .max(Duration::from_millis(1));

    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..splits.len()).map(move |f| (c, f)))
        .collect();
    let outcomes: Vec<FoldOutcome> = tasks
        .par_iter()
        .map(|&(c, f)| {
            let (alpha, percentile) = cells[c];
            let (train_data, val_data) = &splits[f];
            run_fold(
                train_data,
                val_data,
                forest_config,
                alpha,
                percentile,
                slice,
                seed,
                f,
            )
        })
        .collect::<Result<_, TuneError>>()?;

    let summaries: Vec<CellSummary> = cells
        .iter()
        .enumerate()
        .map(|(c, &(alpha, percentile))| {
            let folds: Vec<FoldOutcome> = outcomes[c * splits.len()..(c + 1) * splits.len()]
                .to_vec();
            let n = folds.len() as f64;
            let mean_fidelity = folds.iter().map(|o| o.fidelity).sum::<f64>() / n;
            let mean_sparsity = folds.iter().map(|o| o.sparsity).sum::<f64>() / n;
            CellSummary {
                alpha,
                percentile,
                folds,
                mean_fidelity,
                mean_sparsity,
            }
        })
        .collect();
    let winner = select(&summaries);
    Ok(TuneReport {
        selected_alpha: summaries[winner].alpha,
        selected_percentile: summaries[winner].percentile,
        cells: summaries,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    train_data: &Dataset,
    val_data: &Dataset,
    forest_config: &ForestConfig,
    alpha: f64,
    percentile: f64,
    slice: Duration,
    seed: u64,
    fold: usize,
) -> Result<FoldOutcome, TuneError> {
    let forest = train(train_data, forest_config)?;
    let inputs = prepare_inputs(&forest, train_data)?;
    let mut hp = MiretHyperparams::new(forest.depth, alpha);
    hp.gammas = gamma_from_percentile(&inputs.frequency, percentile);
    let model = build(train_data, &inputs, &hp)?;
    let mut options = SolveOptions::new(slice, seed);
    options.warm_starts = warm_starts(&model, train_data, &forest);
    options.rounder = Some(rounding_heuristic(&model, train_data));
    match solve_with(&model.milp, &options) {
        Ok(solved) => {
            let tree = SurrogateTree::decode(&model, &solved.x, train_data)?;
            let sparsity: f64 = model
                .topology
                .branches()
                .map(|t| {
                    (0..model.map.n_features)
                        .filter(|&j| solved.x[model.map.s(t, j)] > 0.5)
                        .count() as f64
                })
                .sum();
            Ok(FoldOutcome {
                fold,
                fidelity: fidelity(&tree, &forest, val_data)?,
                sparsity,
                gap_percent: Some(solved.report.gap_percent),
                seconds: solved.report.wall_seconds,
                flagged: false,
            })
        }
        Err(SolveError::Infeasible | SolveError::NoIncumbent) => Ok(FoldOutcome {
            fold,
            fidelity: 0.0,
            sparsity: 0.0,
            gap_percent: None,
            seconds: slice.as_secs_f64(),
            flagged: true,
        }),
        Err(other) => Err(other.into()),
    }
}

// ---------------------------------------------------------------------------
