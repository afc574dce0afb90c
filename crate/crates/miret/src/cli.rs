//! Command-line surface for the unboxing pipeline.
//!
//! Five subcommands mirror the pipeline stages so any stage can be
//! rerun on the serialized artifacts of an earlier one:
//!
//! * `forest` — ingest a raw CSV table, normalize and split it, train
//!   the ensemble, and serialize data splits plus the forest.
//! * `vite` — render the ensemble's frequency and proximity statistics
//!   as SVG heatmaps and CSV tables.
//! * `miret` — build the compression program over a serialized forest
//!   and either solve it into a surrogate tree or export it as a
//!   CPLEX-LP document for an external solver.
//! * `eval` — score a decoded surrogate against its ensemble.
//! * `tune` — grid-search the sparsity weight and frequency percentile
//!   by stratified cross-validation.
//!
//! Every run writes its artifacts under one output directory (flag
//! `--out` or environment variable `MIRET_OUT`) and records its full
//! configuration — seeds included — under its subcommand's key in
//! `manifest.json` there, so any artifact can be reproduced from the
//! manifest alone.  Failures exit nonzero with a one-line diagnostic.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::dataset::{load_csv_split, read_normalized_csv, DatasetError, SplitSpec};
use crate::evaluation::{evaluate, EvalError};
use crate::forest::{train, Forest, ForestConfig, ForestError};
use crate::model::build::{build, prepare_inputs, BuildError, MiretHyperparams};
use crate::model::warm::{rounding_heuristic, warm_starts};
use crate::model::{write_lp, Formulation};
use crate::solver::{solve_with, SolveError, SolveOptions, SolveStatus};
use crate::stats::{FrequencyMode, TeStatistics};
use crate::surrogate::{SurrogateError, SurrogateTree};
use crate::tuning::{cross_validate, gamma_from_percentile, TuneError, TuneGrid};
use crate::vite::{render_level_heatmap, render_representative_tree, HeatmapSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest {path}: {source}")]
    Manifest {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Tune(#[from] TuneError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(
    name = "miret",
    version,
    about = "Unboxes fixed-depth random forests: statistics, heatmaps, and an exact surrogate tree"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest a CSV table, split it, train the ensemble, serialize all three.
    Forest(ForestArgs),
    /// Render ensemble statistics as SVG heatmaps and CSV tables.
    Vite(ViteArgs),
    /// Build the compression program; solve it or export it as an LP file.
    Miret(MiretArgs),
    /// Score a decoded surrogate tree against its ensemble on a dataset.
    Eval(EvalArgs),
    /// Grid-search alpha and the frequency percentile by cross-validation.
    Tune(TuneArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormulationArg {
    Basic,
    Strengthened,
}

impl From<FormulationArg> for Formulation {
    fn from(arg: FormulationArg) -> Self {
        match arg {
            FormulationArg::Basic => Formulation::Basic,
            FormulationArg::Strengthened => Formulation::Strengthened,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Divide by the splits observed at the level.
    Observed,
    /// Divide by the full level capacity.
    Full,
}

impl From<ModeArg> for FrequencyMode {
    fn from(arg: ModeArg) -> Self {
        match arg {
            ModeArg::Observed => FrequencyMode::ObservedSplits,
            ModeArg::Full => FrequencyMode::FullLevel,
        }
    }
}

#[derive(Debug, Args)]
struct ForestArgs {
    /// Raw CSV table with one label column.
    #[arg(long)]
    data: PathBuf,
    /// Name of the label column.
    #[arg(long)]
    label: String,
    /// Tree depth cap.
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Ensemble size.
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Features examined per split; omit to examine all.
    #[arg(long)]
    max_features: Option<usize>,
    /// Fraction of rows assigned to the training split.
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    /// Seed for the split shuffle and the bootstrap streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, env = "MIRET_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ViteArgs {
    /// Serialized forest (`forest.txt`).
    #[arg(long)]
    forest: PathBuf,
    /// Normalized CSV split (as written by `forest`).
    #[arg(long)]
    data: PathBuf,
    /// Denominator convention for the level-frequency heatmap.
    #[arg(long, value_enum, default_value_t = ModeArg::Observed)]
    mode: ModeArg,
    /// Title drawn above the heatmap.
    #[arg(long, default_value = "")]
    title: String,
    /// Output directory.
    #[arg(long, env = "MIRET_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MiretArgs {
    /// Serialized forest (`forest.txt`).
    #[arg(long)]
    forest: PathBuf,
    /// Normalized training split (as written by `forest`).
    #[arg(long)]
    data: PathBuf,
    /// Sparsity penalty weight.
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    /// Frequency percentile for per-level cutoffs; 0 admits every
    /// feature the ensemble split on.
    #[arg(long, default_value_t = 0.0)]
    percentile: f64,
    /// Explicit per-level cutoffs, comma-separated, deepest last;
    /// overrides --percentile.
    #[arg(long, value_delimiter = ',', conflicts_with = "percentile")]
    gammas: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = FormulationArg::Strengthened)]
    formulation: FormulationArg,
    /// Proximity needed before a pair must share a surrogate leaf.
    #[arg(long, default_value_t = 1.0)]
    proximity_cutoff: f64,
    /// Margin enforcing the strict side of right routing.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// Right-hand side of the minimum-split cut (strengthened form).
    #[arg(long, default_value_t = 1.0)]
    min_splits: f64,
    /// Solver wall-clock budget in seconds.
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
    /// Seed recorded into the solve report.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the program as a CPLEX-LP file and skip solving.
    #[arg(long)]
    export_lp: bool,
    /// Output directory.
    #[arg(long, env = "MIRET_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Serialized surrogate tree (`surrogate.txt`).
    #[arg(long)]
    surrogate: PathBuf,
    /// Serialized forest (`forest.txt`).
    #[arg(long)]
    forest: PathBuf,
    /// Normalized CSV split to score on.
    #[arg(long)]
    data: PathBuf,
    /// Output directory.
    #[arg(long, env = "MIRET_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TuneArgs {
    /// Normalized training split (as written by `forest`).
    #[arg(long)]
    data: PathBuf,
    /// Tree depth cap for the fold ensembles.
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Ensemble size for the fold ensembles.
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Features examined per split; omit to examine all.
    #[arg(long)]
    max_features: Option<usize>,
    /// Sparsity weights to try.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.2, 0.4, 0.5, 0.6, 0.8])]
    alphas: Vec<f64>,
    /// Frequency percentiles to try; 0 is the no-cutoff sentinel.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 25.0, 100.0 / 3.0, 50.0])]
    percentiles: Vec<f64>,
    /// Fold count.
    #[arg(long, default_value_t = 4)]
    folds: usize,
    /// Whole-search wall-clock budget in seconds, divided evenly over
    /// all (cell, fold) solves.
    #[arg(long, default_value_t = 600.0)]
    budget: f64,
    /// Seed for fold dealing, forest training, and the solver.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, env = "MIRET_OUT", default_value = "out")]
    out: PathBuf,
}

/// Parses real process arguments and runs; the binary's whole body.
pub fn run() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

/// Parses the given arguments and runs them (test entry point).
pub fn execute_from<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)
        .map_err(|e| CliError::Usage(e.to_string().trim().to_string()))?;
    execute(cli)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Forest(args) => run_forest(&args),
        Command::Vite(args) => run_vite(&args),
        Command::Miret(args) => run_miret(&args),
        Command::Eval(args) => run_eval(&args),
        Command::Tune(args) => run_tune(&args),
    }
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

fn run_forest(args: &ForestArgs) -> Result<(), CliError> {
    let spec = SplitSpec {
        train_fraction: args.train_fraction,
        seed: args.seed,
    };
    let (train_data, test_data) = load_csv_split(&args.data, &args.label, &spec)?;
    let mut config = ForestConfig::new(args.trees, args.depth, args.seed);
    config.max_features = args.max_features;
    let forest = train(&train_data, &config)?;
    ensure_dir(&args.out)?;
    train_data.write_csv(&args.out.join("train.csv"))?;
    test_data.write_csv(&args.out.join("test.csv"))?;
    write_file(&args.out.join("forest.txt"), &forest.to_text())?;
    update_manifest(
        &args.out,
        "forest",
        json!({
            "data": args.data.display().to_string(),
            "label": args.label,
            "depth": args.depth,
            "trees": args.trees,
            "max_features": args.max_features,
            "train_fraction": args.train_fraction,
            "seed": args.seed,
            "artifacts": ["train.csv", "test.csv", "forest.txt"],
        }),
    )?;
    println!(
        "trained {} trees of depth {} on {} samples ({} held out); wrote {}",
        args.trees,
        args.depth,
        train_data.n_samples(),
        test_data.n_samples(),
        args.out.join("forest.txt").display()
    );
    Ok(())
}

fn run_vite(args: &ViteArgs) -> Result<(), CliError> {
    let forest = Forest::from_text(&read_file(&args.forest)?)?;
    let data = read_normalized_csv(&args.data)?;
    check_features(&forest, data.n_features())?;
    let stats = TeStatistics::compute(&forest, &data, args.mode.into())?;
    let names = data.feature_names();
    let spec = HeatmapSpec {
        title: args.title.clone(),
        ..HeatmapSpec::default()
    };
    ensure_dir(&args.out)?;
    write_file(
        &args.out.join("level_frequency.svg"),
        &render_level_heatmap(&stats.level_frequency, names, &spec),
    )?;
    write_file(
        &args.out.join("representative_tree.svg"),
        &render_representative_tree(
            &stats.node_frequency,
            &stats.threshold_ranges,
            forest.depth,
            names,
            &spec,
        ),
    )?;
    write_file(
        &args.out.join("level_frequency.csv"),
        &stats.level_frequency.to_csv(names),
    )?;
    write_file(
        &args.out.join("node_frequency.csv"),
        &stats.node_frequency.to_csv(names),
    )?;
    write_file(&args.out.join("proximity.csv"), &stats.proximity.to_csv())?;
    write_file(
        &args.out.join("threshold_ranges.csv"),
        &stats.threshold_ranges.to_csv(names),
    )?;
    update_manifest(
        &args.out,
        "vite",
        json!({
            "forest": args.forest.display().to_string(),
            "data": args.data.display().to_string(),
            "mode": format!("{:?}", args.mode),
            "title": args.title,
            "artifacts": [
                "level_frequency.svg", "representative_tree.svg",
                "level_frequency.csv", "node_frequency.csv",
                "proximity.csv", "threshold_ranges.csv",
            ],
        }),
    )?;
    println!(
        "rendered statistics of {} trees; wrote 2 SVG and 4 CSV files under {}",
        forest.trees.len(),
        args.out.display()
    );
    Ok(())
}

fn run_miret(args: &MiretArgs) -> Result<(), CliError> {
    let forest = Forest::from_text(&read_file(&args.forest)?)?;
    let data = read_normalized_csv(&args.data)?;
    check_features(&forest, data.n_features())?;
    let inputs = prepare_inputs(&forest, &data)?;
    let gammas = match &args.gammas {
        Some(gammas) => {
            if gammas.len() != forest.depth {
                return Err(CliError::Usage(format!(
                    "--gammas needs {} values (one per level), got {}",
                    forest.depth,
                    gammas.len()
                )));
            }
            gammas.clone()
        }
        None => gamma_from_percentile(&inputs.frequency, args.percentile),
    };
    let hp = MiretHyperparams {
        alpha: args.alpha,
        gammas,
        proximity_cutoff: args.proximity_cutoff,
        epsilon: args.epsilon,
        formulation: args.formulation.into(),
        min_splits: args.min_splits,
    };
    let model = build(&data, &inputs, &hp)?;
    ensure_dir(&args.out)?;
    let manifest = json!({
        "forest": args.forest.display().to_string(),
        "data": args.data.display().to_string(),
        "alpha": args.alpha,
        "percentile": args.percentile,
        "gammas": hp.gammas,
        "formulation": format!("{:?}", args.formulation),
        "proximity_cutoff": args.proximity_cutoff,
        "epsilon": args.epsilon,
        "min_splits": args.min_splits,
        "time_limit": args.time_limit,
        "seed": args.seed,
        "export_lp": args.export_lp,
    });
    if args.export_lp {
        let path = args.out.join("model.lp");
        write_file(&path, &write_lp(&model.milp, "miret"))?;
        update_manifest(&args.out, "miret", manifest)?;
        println!(
            "exported {} variables / {} rows to {}",
            model.milp.variables.len(),
            model.milp.constraints.len(),
            path.display()
        );
        return Ok(());
    }
    if args.time_limit <= 0.0 {
        return Err(CliError::Usage("--time-limit must be positive".into()));
    }
    let mut options = SolveOptions::new(Duration::from_secs_f64(args.time_limit), args.seed);
    options.warm_starts = warm_starts(&model, &data, &forest);
    options.rounder = Some(rounding_heuristic(&model, &data));
    let solved = solve_with(&model.milp, &options)?;
    let tree = SurrogateTree::decode(&model, &solved.x, &data)?;
    write_file(&args.out.join("surrogate.txt"), &tree.to_text())?;
    write_file(&args.out.join("solve_log.csv"), &solved.report.log_csv())?;
    let status = match solved.report.status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::FeasibleTimeLimit => "feasible (budget hit)",
    };
    write_file(
        &args.out.join("solve_report.json"),
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&json!({
                "status": status,
                "objective": solved.report.objective,
                "bound": solved.report.bound,
                "gap_percent": solved.report.gap_percent,
                "nodes": solved.report.nodes,
                "simplex_iterations": solved.report.simplex_iterations,
                "wall_seconds": solved.report.wall_seconds,
                "seed": solved.report.seed,
            }))
            .expect("report serializes")
        ),
    )?;
    update_manifest(&args.out, "miret", manifest)?;
    println!(
        "{status}: objective {:.6}, gap {:.4}%, {} nodes in {:.1}s; wrote {}",
        solved.report.objective,
        solved.report.gap_percent,
        solved.report.nodes,
        solved.report.wall_seconds,
        args.out.join("surrogate.txt").display()
    );
    Ok(())
}

fn run_eval(args: &EvalArgs) -> Result<(), CliError> {
    let surrogate = SurrogateTree::from_text(&read_file(&args.surrogate)?)?;
    let forest = Forest::from_text(&read_file(&args.forest)?)?;
    let data = read_normalized_csv(&args.data)?;
    check_features(&forest, data.n_features())?;
    if surrogate.n_features() != data.n_features() {
        return Err(CliError::Usage(format!(
            "surrogate expects {} features, data has {}",
            surrogate.n_features(),
            data.n_features()
        )));
    }
    let report = evaluate(&surrogate, &forest, &data)?;
    ensure_dir(&args.out)?;
    write_file(&args.out.join("eval.csv"), &report.to_csv())?;
    let text = report.to_text(data.feature_names());
    write_file(&args.out.join("eval.txt"), &text)?;
    update_manifest(
        &args.out,
        "eval",
        json!({
            "surrogate": args.surrogate.display().to_string(),
            "forest": args.forest.display().to_string(),
            "data": args.data.display().to_string(),
            "artifacts": ["eval.csv", "eval.txt"],
        }),
    )?;
    print!("{text}");
    Ok(())
}

fn run_tune(args: &TuneArgs) -> Result<(), CliError> {
    let data = read_normalized_csv(&args.data)?;
    let mut config = ForestConfig::new(args.trees, args.depth, args.seed);
    config.max_features = args.max_features;
    let grid = TuneGrid {
        alphas: args.alphas.clone(),
        percentiles: args.percentiles.clone(),
        folds: args.folds,
    };
    if args.budget <= 0.0 {
        return Err(CliError::Usage("--budget must be positive".into()));
    }
    let report = cross_validate(
        &data,
        &config,
        &grid,
        Duration::from_secs_f64(args.budget),
        args.seed,
    )?;
    ensure_dir(&args.out)?;
    write_file(&args.out.join("tune.csv"), &report.to_csv())?;
    write_file(
        &args.out.join("tune_selection.json"),
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&json!({
                "alpha": report.selected_alpha,
                "percentile": report.selected_percentile,
            }))
            .expect("selection serializes")
        ),
    )?;
    update_manifest(
        &args.out,
        "tune",
        json!({
            "data": args.data.display().to_string(),
            "depth": args.depth,
            "trees": args.trees,
            "max_features": args.max_features,
            "alphas": args.alphas,
            "percentiles": args.percentiles,
            "folds": args.folds,
            "budget": args.budget,
            "seed": args.seed,
            "artifacts": ["tune.csv", "tune_selection.json"],
        }),
    )?;
    println!(
        "searched {} cells x {} folds; selected alpha={}, percentile={}",
        report.cells.len(),
        args.folds,
        report.selected_alpha,
        report.selected_percentile
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// plumbing
// ---------------------------------------------------------------------------

fn check_features(forest: &Forest, n_features: usize) -> Result<(), CliError> {
    if forest.n_features != n_features {
        return Err(CliError::Usage(format!(
            "forest expects {} features, data has {}",
            forest.n_features, n_features
        )));
    }
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read-modify-writes `manifest.json` in the output directory, storing
/// the run's full configuration under its subcommand key.
fn update_manifest(out: &Path, key: &str, entry: serde_json::Value) -> Result<(), CliError> {
    let path = out.join("manifest.json");
    let mut root: serde_json::Map<String, serde_json::Value> = if path.exists() {
        serde_json::from_str(&read_file(&path)?).map_err(|source| CliError::Manifest {
            path: path.clone(),
            source,
        })?
    } else {
        serde_json::Map::new()
    };
    root.insert(key.to_string(), entry);
    let rendered = serde_json::to_string_pretty(&serde_json::Value::Object(root))
        .expect("manifest serializes");
    write_file(&path, &format!("{rendered}\n"))
}

// ---------------------------------------------------------------------------
