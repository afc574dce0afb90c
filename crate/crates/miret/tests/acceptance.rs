//! Acceptance gate: eleven checks covering the statistics oracles, the
//! MILP solver, formulation equivalence, solution audits, desk-scale
//! surrogate quality, rendering determinism, and the metric identities.
//!
//! Every check prints one `criterion NN: PASS` line on success; a
//! failure panics with a matching `criterion NN: FAIL` line. Checks
//! with a stated runtime budget measure and assert it themselves.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use common::*;
use miret::dataset::{split, Dataset, SplitSpec};
use miret::evaluation::{agreement_percent, fidelity};
use miret::forest::{train, Forest, ForestConfig, NodeKind, Tree, TreeNode};
use miret::model::build::{build, prepare_inputs, Formulation, MiretHyperparams, MiretModel};
use miret::model::milp::{MilpModel, VarKind};
use miret::model::warm::{rounding_heuristic, warm_starts};
use miret::solver::branch_bound::{solve_with, SolveError, SolveOptions, SolveStatus, Solved};
use miret::stats::{self, FrequencyMode};
use miret::surrogate::SurrogateTree;
use miret::tuning::gamma_from_percentile;
use miret::vite::{render_level_heatmap, HeatmapSpec};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

/// Trains a small forest and builds the surrogate MILP over it.
fn surrogate_model(
    data: &Dataset,
    n_trees: usize,
    depth: usize,
    seed: u64,
    hp: &MiretHyperparams,
) -> (Forest, MiretModel) {
    let forest = train(data, &ForestConfig::new(n_trees, depth, seed)).expect("train");
    let inputs = prepare_inputs(&forest, data).expect("inputs");
    let model = build(data, &inputs, hp).expect("build");
    (forest, model)
}

/// Solves with the standard accelerators: embedded-forest warm starts
/// and the per-node repair heuristic.
fn solve_accelerated(
    model: &MiretModel,
    data: &Dataset,
    forest: &Forest,
    limit: Duration,
) -> Result<Solved, SolveError> {
    let mut options = SolveOptions::new(limit, 0);
    options.warm_starts = warm_starts(model, data, forest);
    options.rounder = Some(rounding_heuristic(model, data));
    solve_with(&model.milp, &options)
}

/// Asserts the full solution audit: zero violations at 1e-6 and a
/// decodable tree whose assignments agree with its geometry on every
/// training sample (decode re-walks each sample and fails otherwise).
fn audit(model: &MiretModel, x: &[f64], data: &Dataset, what: &str) -> SurrogateTree {
    let violations = model
        .milp
        .check_solution(x, 1e-6)
        .expect("solution arity matches the model");
    assert!(
        violations.is_empty(),
        "criterion 05: FAIL — {what}: {} violations, first {:?}",
        violations.len(),
        violations.first()
    );
    SurrogateTree::decode(model, x, data)
        .unwrap_or_else(|e| panic!("criterion 05: FAIL — {what}: decode rejected: {e}"))
}

/// Binary variables the solver actually has to decide.
fn free_binaries(model: &MilpModel) -> usize {
    model
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Binary && v.lb < v.ub)
        .count()
}

/// Per-level cutoffs admitting only the most frequent feature(s): halfway
/// between the top two distinct frequencies, or zero for an idle level.
fn top_feature_cutoffs(frequency: &stats::LevelFrequencyMatrix) -> Vec<f64> {
    (0..frequency.n_levels())
        .map(|level| {
            let mut row: Vec<f64> = (0..frequency.n_features())
                .map(|j| frequency.get(level, j))
                .collect();
            row.sort_by(|a, b| b.total_cmp(a));
            let top = row[0];
            if top == 0.0 {
                return 0.0;
            }
            match row.iter().find(|&&v| v < top) {
                Some(&second) => (top + second) / 2.0,
                None => top / 2.0,
            }
        })
        .collect()
}

/// A small basic-form surrogate instance with at most 20 free binaries;
/// retries fresh data when tied frequencies admit too many features.
fn small_surrogate_milp(rng: &mut ChaCha8Rng, n_samples: usize, focused: bool) -> MilpModel {
    for _ in 0..50 {
        let data = random_dataset(rng, n_samples, 2);
        let forest = match train(&data, &ForestConfig::new(3, 2, rng.random())) {
            Ok(f) => f,
            Err(_) => continue,
        };
        let inputs = prepare_inputs(&forest, &data).expect("inputs");
        let mut hp = MiretHyperparams::new(2, 0.3);
        hp.formulation = Formulation::Basic;
        if focused {
            hp.gammas = top_feature_cutoffs(&inputs.frequency);
        }
        let model = build(&data, &inputs, &hp).expect("build");
        if free_binaries(&model.milp) <= 20 {
            return model.milp;
        }
    }
    panic!("no instance under the binary cap after 50 attempts");
}

/// Six samples split cleanly on one feature, so the optimal surrogate
/// must spend at least one split.
fn clustered_mini(rng: &mut ChaCha8Rng, split_feature: usize) -> Dataset {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..6 {
        let low = i < 3;
        let value = if low {
            0.05 + 0.20 * rng.random::<f64>()
        } else {
            0.75 + 0.20 * rng.random::<f64>()
        };
        let mut row = vec![rng.random::<f64>(), rng.random::<f64>()];
        row[split_feature] = value;
        rows.push(row);
        labels.push(if low { -1 } else { 1 });
    }
    make_dataset(rows, labels)
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_frequency_oracles() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let nf = rng.random_range(2..=6);
        let n = rng.random_range(8..=24);
        let data = random_dataset(&mut rng, n, nf);
        let n_trees = rng.random_range(1..=5);
        let mut config = ForestConfig::new(n_trees, rng.random_range(1..=3), rng.random());
        if case % 2 == 1 {
            config.weights = Some((0..n_trees).map(|_| 0.5 + rng.random::<f64>()).collect());
        }
        if case % 3 == 2 {
            config.max_features = Some(rng.random_range(1..=nf));
        }
        let forest = train(&data, &config).expect("train");
        let parsed = parse_forest_text(&forest.to_text());

        for (mode, full) in [
            (FrequencyMode::ObservedSplits, false),
            (FrequencyMode::FullLevel, true),
        ] {
            let lib = stats::level_frequency(&forest, mode);
            let gap = matrix_gap(lib.rows(), &recount_level_frequency(&parsed, full));
            assert!(
                gap <= 1e-12,
                "criterion 01: FAIL — case {case}: level frequency off by {gap:e}"
            );
            worst = worst.max(gap);
        }

        let lib = stats::node_frequency(&forest);
        let lib_rows: Vec<Vec<f64>> = (0..lib.n_nodes())
            .map(|t| (0..nf).map(|j| lib.get(t, j)).collect())
            .collect();
        let gap = matrix_gap(&lib_rows, &recount_node_frequency(&parsed));
        assert!(
            gap <= 1e-12,
            "criterion 01: FAIL — case {case}: node frequency off by {gap:e}"
        );
        worst = worst.max(gap);

        let lib = stats::proximity(&forest, &data).expect("proximity");
        let gap = matrix_gap(lib.rows(), &recount_proximity(&parsed, data.features()));
        assert!(
            gap <= 1e-12,
            "criterion 01: FAIL — case {case}: proximity off by {gap:e}"
        );
        worst = worst.max(gap);
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(
        secs < 10.0,
        "criterion 01: FAIL — recount took {secs:.1} s (budget 10 s)"
    );
    println!(
        "criterion 01: PASS — 50 forests recounted, worst gap {worst:.1e}, {secs:.2} s"
    );
}

#[test]
fn criterion_02_normalization_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for case in 0..50 {
        let nf = rng.random_range(2..=6);
        let n = rng.random_range(8..=24);
        let data = random_dataset(&mut rng, n, nf);
        let config = ForestConfig::new(
            rng.random_range(1..=5),
            rng.random_range(1..=3),
            rng.random(),
        );
        let forest = train(&data, &config).expect("train");

        let level = stats::level_frequency(&forest, FrequencyMode::ObservedSplits);
        for (d, row) in level.rows().iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if sum == 0.0 {
                continue; // no tree splits this level at all
            }
            assert!(
                (sum - 1.0).abs() <= 1e-9,
                "criterion 02: FAIL — case {case}: level {d} sums to {sum}"
            );
        }

        let node = stats::node_frequency(&forest);
        for t in 0..node.n_nodes() {
            if node.split_count(t) == 0 {
                continue;
            }
            let sum: f64 = (0..nf).map(|j| node.get(t, j)).sum();
            assert!(
                (sum - 1.0).abs() <= 1e-9,
                "criterion 02: FAIL — case {case}: node {t} sums to {sum}"
            );
        }

        let prox = stats::proximity(&forest, &data).expect("proximity");
        for i in 0..prox.n_samples() {
            assert!(
                prox.get(i, i) == 1.0,
                "criterion 02: FAIL — case {case}: diagonal {i} is {}",
                prox.get(i, i)
            );
            for k in 0..prox.n_samples() {
                assert!(
                    prox.get(i, k) == prox.get(k, i),
                    "criterion 02: FAIL — case {case}: asymmetry at ({i}, {k})"
                );
            }
        }
    }
    println!("criterion 02: PASS — sums, symmetry and diagonals hold on 50 forests");
}

#[test]
fn criterion_03_solver_certification() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut instances: Vec<(String, MilpModel)> = Vec::new();
    for i in 0..27 {
        instances.push((format!("random {i}"), random_milp(&mut rng, i % 4 != 3)));
    }
    instances.push((
        "surrogate 3 samples".into(),
        small_surrogate_milp(&mut rng, 3, false),
    ));
    instances.push((
        "surrogate 3 samples focused".into(),
        small_surrogate_milp(&mut rng, 3, true),
    ));
    instances.push((
        "surrogate 4 samples focused".into(),
        small_surrogate_milp(&mut rng, 4, true),
    ));

    let mut feasible = 0usize;
    let mut infeasible = 0usize;
    for (name, model) in &instances {
        let binaries = free_binaries(model);
        assert!(
            binaries <= 20,
            "criterion 03: FAIL — {name} has {binaries} free binaries"
        );
        let oracle = oracle_optimum(model);
        let solved = solve_with(model, &SolveOptions::new(Duration::from_secs(30), 7));
        match (oracle, solved) {
            (OracleOutcome::Optimal(want), Ok(sol)) => {
                assert_eq!(
                    sol.report.status,
                    SolveStatus::Optimal,
                    "criterion 03: FAIL — {name}: solver hit its budget"
                );
                assert!(
                    (sol.report.objective - want).abs() <= 1e-6,
                    "criterion 03: FAIL — {name}: solver {} vs oracle {want}",
                    sol.report.objective
                );
                let violations = model.check_solution(&sol.x, 1e-6).expect("arity");
                assert!(
                    violations.is_empty(),
                    "criterion 03: FAIL — {name}: solution violates {:?}",
                    violations.first()
                );
                feasible += 1;
            }
            (OracleOutcome::Infeasible, Err(SolveError::Infeasible)) => {
                infeasible += 1;
            }
            (oracle, solved) => {
                let solved = match solved {
                    Ok(s) => format!("feasible at {}", s.report.objective),
                    Err(e) => format!("error: {e}"),
                };
                panic!("criterion 03: FAIL — {name}: oracle {oracle:?} vs solver {solved}");
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(
        secs < 60.0,
        "criterion 03: FAIL — certification took {secs:.1} s (budget 60 s)"
    );
    println!(
        "criterion 03: PASS — 30 instances agree with enumeration \
         ({feasible} optimal, {infeasible} infeasible), {secs:.1} s"
    );
}

#[test]
fn criterion_04_formulation_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    for case in 0..10 {
        let data = clustered_mini(&mut rng, case % 2);
        let forest = train(&data, &ForestConfig::new(3, 2, rng.random())).expect("train");
        let inputs = prepare_inputs(&forest, &data).expect("inputs");

        let mut objectives = [0.0f64; 2];
        for (slot, formulation) in [Formulation::Basic, Formulation::Strengthened]
            .into_iter()
            .enumerate()
        {
            let mut hp = MiretHyperparams::new(2, 0.2);
            hp.formulation = formulation;
            let model = build(&data, &inputs, &hp).expect("build");
            let solved = solve_accelerated(&model, &data, &forest, Duration::from_secs(120))
                .expect("tiny instance solves");
            assert_eq!(
                solved.report.status,
                SolveStatus::Optimal,
                "criterion 04: FAIL — case {case} ({formulation:?}) not proven optimal"
            );
            audit(&model, &solved.x, &data, &format!("case {case}"));
            objectives[slot] = solved.report.objective;
        }
        let gap = (objectives[0] - objectives[1]).abs();
        assert!(
            gap <= 1e-6,
            "criterion 04: FAIL — case {case}: basic {} vs strengthened {}",
            objectives[0],
            objectives[1]
        );
        worst = worst.max(gap);
    }
    println!("criterion 04: PASS — 10 instances, optima agree within {worst:.1e}");
}

#[test]
fn criterion_05_solution_audit() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut audited = 0usize;
    for (n, formulation) in [(6, Formulation::Basic), (8, Formulation::Strengthened)] {
        let data = clustered_mini_sized(&mut rng, n);
        let mut hp = MiretHyperparams::new(2, 0.2);
        hp.formulation = formulation;
        let (forest, model) = surrogate_model(&data, 3, 2, rng.random(), &hp);
        let solved = solve_accelerated(&model, &data, &forest, Duration::from_secs(60))
            .expect("instance solves");
        let tree = audit(&model, &solved.x, &data, &format!("{formulation:?}"));
        // The decoded geometry must reproduce the assigned leaf classes.
        for i in 0..data.n_samples() {
            let class = tree.predict(data.sample(i));
            assert!(
                class == -1 || class == 1,
                "criterion 05: FAIL — sample {i} got class {class}"
            );
        }
        audited += 1;
    }
    assert_eq!(audited, 2);
    println!(
        "criterion 05: PASS — audited solutions carry zero violations and decode cleanly \
         (also enforced after every solve in criteria 03, 04, 06, 07, 08)"
    );
}

/// Like `clustered_mini` but with a chosen sample count.
fn clustered_mini_sized(rng: &mut ChaCha8Rng, n: usize) -> Dataset {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let low = i < n / 2;
        let x0 = if low {
            0.05 + 0.20 * rng.random::<f64>()
        } else {
            0.75 + 0.20 * rng.random::<f64>()
        };
        rows.push(vec![x0, rng.random::<f64>()]);
        labels.push(if low { -1 } else { 1 });
    }
    make_dataset(rows, labels)
}

#[test]
fn criterion_06_proximity_echo() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut pairs_checked = 0usize;
    for case in 0..3 {
        // Duplicated rows are routed identically by every tree, so the
        // instance is guaranteed non-trivial pairs at proximity 1.
        let base = clustered_mini_sized(&mut rng, 4);
        let mut rows: Vec<Vec<f64>> = base.features().to_vec();
        let mut labels: Vec<i8> = base.labels().to_vec();
        for i in 0..4 {
            rows.push(rows[i].clone());
            labels.push(labels[i]);
        }
        let data = make_dataset(rows, labels);
        let hp = MiretHyperparams::new(2, 0.2); // proximity cutoff 1 by default
        let (forest, model) = surrogate_model(&data, 3, 2, rng.random(), &hp);
        let solved = solve_accelerated(&model, &data, &forest, Duration::from_secs(30))
            .expect("instance solves");
        let tree = audit(&model, &solved.x, &data, &format!("echo case {case}"));

        let prox = stats::proximity(&forest, &data).expect("proximity");
        let pairs = stats::proximal_pairs(&prox, 1.0);
        assert!(
            !pairs.is_empty(),
            "criterion 06: FAIL — case {case} produced no proximity-1 pairs"
        );
        for &(i, k) in &pairs {
            let (li, lk) = (tree.leaf(data.sample(i)), tree.leaf(data.sample(k)));
            assert!(
                li == lk,
                "criterion 06: FAIL — case {case}: pair ({i}, {k}) split across leaves \
                 {li} and {lk}"
            );
        }
        pairs_checked += pairs.len();
    }
    println!(
        "criterion 06: PASS — {pairs_checked} always-together pairs share their surrogate leaf"
    );
}

#[test]
fn criterion_07_separable_fidelity() {
    let data = separable_dataset(777);
    let forest = train(&data, &ForestConfig::new(25, 2, 4242)).expect("train");

    // Premise: the ensemble's own predictions split on one axis cut.
    let predicted = forest.predict_all(&data).expect("predict");
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (i, &p) in predicted.iter().enumerate() {
        let x0 = data.sample(i)[0];
        if p == -1 {
            lo = lo.max(x0);
        } else {
            hi = hi.min(x0);
        }
    }
    assert!(
        lo < hi,
        "criterion 07: FAIL — predictions are not separable on the first feature"
    );

    let inputs = prepare_inputs(&forest, &data).expect("inputs");
    let hp = MiretHyperparams::new(2, 0.2);
    let model = build(&data, &inputs, &hp).expect("build");

    let started = Instant::now();
    let solved = solve_accelerated(&model, &data, &forest, Duration::from_secs(120))
        .expect("separable instance solves");
    let secs = started.elapsed().as_secs_f64();
    assert_eq!(
        solved.report.status,
        SolveStatus::Optimal,
        "criterion 07: FAIL — optimality not proven (gap {:.2}%)",
        solved.report.gap_percent
    );
    assert!(
        secs < 120.0,
        "criterion 07: FAIL — proof took {secs:.1} s (budget 120 s)"
    );
    let tree = audit(&model, &solved.x, &data, "separable instance");
    let fid = fidelity(&tree, &forest, &data).expect("fidelity");
    assert!(
        fid == 100.0,
        "criterion 07: FAIL — training fidelity {fid}%"
    );
    println!(
        "criterion 07: PASS — fidelity 100% proven optimal in {secs:.1} s \
         ({} nodes)",
        solved.report.nodes
    );
}

#[test]
fn criterion_08_desk_scale_run_and_09_sparsity() {
    let full = cleveland_standin();
    let (train_split, _test_split) = split(
        &full,
        &SplitSpec {
            train_fraction: 0.8,
            seed: 11,
        },
    )
    .expect("split");
    let picked = stratified_subsample(train_split.labels(), 80, 5);
    let sub = train_split.subset(&picked);

    let forest = train(&train_split, &ForestConfig::new(100, 2, 99)).expect("train");
    let inputs = prepare_inputs(&forest, &sub).expect("inputs");
    let mut hp = MiretHyperparams::new(2, 0.2);
    hp.gammas = gamma_from_percentile(&inputs.frequency, 100.0 / 3.0);
    let model = build(&sub, &inputs, &hp).expect("build");

    let solved = solve_accelerated(&model, &sub, &forest, Duration::from_secs(600))
        .expect("warm starts guarantee an incumbent");
    let tree = audit(&model, &solved.x, &sub, "desk-scale run");
    let fid = fidelity(&tree, &forest, &sub).expect("fidelity");
    assert!(
        fid >= 85.0,
        "criterion 08: FAIL — subsample fidelity {fid:.1}% (need 85%)"
    );
    let depth = tree.effective_depth();
    assert!(
        depth <= 2,
        "criterion 08: FAIL — effective depth {depth}"
    );
    println!(
        "criterion 08: PASS — fidelity {fid:.1}% at effective depth {depth} \
         ({}, gap {:.1}%)",
        match solved.report.status {
            SolveStatus::Optimal => "proven optimal",
            SolveStatus::FeasibleTimeLimit => "budget hit",
        },
        solved.report.gap_percent
    );

    let used = tree.features_used().len();
    let forest_used = forest.used_features().len();
    assert!(
        used < forest_used,
        "criterion 09: FAIL — surrogate uses {used} features, forest {forest_used}"
    );
    println!(
        "criterion 09: PASS — surrogate uses {used} distinct features, forest uses {forest_used}"
    );
}

#[test]
fn criterion_10_rendering_determinism() {
    let forest = toy_forest();
    forest.validate().expect("toy forest is well-formed");
    assert!(
        !forest.used_features().contains(&3),
        "criterion 10: FAIL — the toy forest was meant to leave x4 unused"
    );

    let names: Vec<String> = ["x1", "x2", "x3", "x4"].iter().map(|s| s.to_string()).collect();
    let spec = HeatmapSpec::default();
    let render = |f: &Forest| {
        let freq = stats::level_frequency(f, FrequencyMode::ObservedSplits);
        render_level_heatmap(&freq, &names, &spec)
    };
    let first = render(&forest);
    let second = render(&forest);
    let rebuilt = render(&toy_forest());
    assert!(
        first == second && first == rebuilt,
        "criterion 10: FAIL — repeated renders differ"
    );

    // The unused feature renders as a blank (all-white, 0.0-labelled) row.
    let mut blank_cells = 0usize;
    for line in first.lines() {
        if line.contains("data-feature=\"3\"") {
            if line.contains("<rect") {
                assert!(
                    line.contains("fill=\"#ffffff\""),
                    "criterion 10: FAIL — unused-feature cell is shaded: {line}"
                );
                blank_cells += 1;
            } else {
                assert!(
                    line.contains(">0.0<"),
                    "criterion 10: FAIL — unused-feature label is not 0.0: {line}"
                );
            }
        }
    }
    assert_eq!(
        blank_cells, 3,
        "criterion 10: FAIL — expected one blank cell per level"
    );
    assert!(
        first.contains(">x4<"),
        "criterion 10: FAIL — unused feature missing from the axis"
    );

    // The CSV column for the unused feature is identically zero.
    let freq = stats::level_frequency(&forest, FrequencyMode::ObservedSplits);
    for line in freq.to_csv(&names).lines().skip(1) {
        let last = line.rsplit(',').next().expect("csv field");
        assert_eq!(
            last.parse::<f64>().expect("numeric"),
            0.0,
            "criterion 10: FAIL — unused-feature column carries {last}"
        );
    }
    println!("criterion 10: PASS — byte-identical renders with a blank unused-feature row");
}

/// Three depth-3 trees over four features, the last never used: the
/// shape of the worked heatmap example.
fn toy_forest() -> Forest {
    let branch = |feature: usize, threshold: f64, counts: [u32; 2]| TreeNode {
        kind: NodeKind::Branch { feature, threshold },
        counts,
    };
    let leaf = |counts: [u32; 2]| TreeNode {
        kind: NodeKind::Leaf,
        counts,
    };
    let tree0 = Tree {
        nodes: BTreeMap::from([
            (0, branch(0, 0.55, [6, 6])),
            (1, branch(1, 0.30, [4, 2])),
            (2, branch(2, 0.60, [2, 4])),
            (3, leaf([3, 0])),
            (4, leaf([1, 2])),
            (5, leaf([2, 1])),
            (6, leaf([0, 3])),
        ]),
    };
    let tree1 = Tree {
        nodes: BTreeMap::from([
            (0, branch(1, 0.40, [6, 6])),
            (1, branch(2, 0.25, [3, 3])),
            (2, leaf([3, 3])),
            (3, branch(0, 0.70, [2, 1])),
            (4, leaf([1, 2])),
            (7, leaf([1, 1])),
            (8, leaf([1, 0])),
        ]),
    };
    let tree2 = Tree {
        nodes: BTreeMap::from([
            (0, branch(2, 0.50, [7, 5])),
            (1, branch(0, 0.35, [4, 2])),
            (2, branch(1, 0.65, [3, 3])),
            (3, leaf([2, 1])),
            (4, branch(1, 0.45, [2, 1])),
            (5, leaf([2, 2])),
            (6, leaf([1, 1])),
            (9, leaf([1, 1])),
            (10, leaf([1, 0])),
        ]),
    };
    Forest {
        depth: 3,
        n_features: 4,
        trees: vec![tree0, tree1, tree2],
        weights: vec![1.0; 3],
        seed: 0,
    }
}

#[test]
fn criterion_11_metric_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=200);
        let reference: Vec<i8> = (0..n).map(|_| if rng.random() { 1 } else { -1 }).collect();
        let candidate: Vec<i8> = (0..n).map(|_| if rng.random() { 1 } else { -1 }).collect();
        let algebraic = agreement_percent(&reference, &candidate).expect("agreement");
        let matches = reference
            .iter()
            .zip(&candidate)
            .filter(|(a, b)| a == b)
            .count();
        let counted = 100.0 * matches as f64 / n as f64;
        let gap = (algebraic - counted).abs();
        assert!(
            gap <= 1e-9,
            "criterion 11: FAIL — algebraic {algebraic} vs counted {counted}"
        );
        worst = worst.max(gap);
    }
    println!("criterion 11: PASS — 100 predictor pairs agree within {worst:.1e}");
}
