//! Unboxing toolkit for fixed-depth random forests.
//!
//! The crate ingests a labelled CSV table, trains a depth-capped random
//! forest, and then "unboxes" it along two complementary routes:
//!
//! * **Inspection** — split-frequency, node-frequency and proximity
//!   statistics over the ensemble ([`stats`]), rendered as deterministic
//!   SVG heatmaps ([`vite`]).
//! * **Compression** — a mixed-integer program whose optimum is a single
//!   multivariate tree of the same depth that mimics the forest
//!   ([`model`]), solved exactly by a built-in branch-and-bound over an
//!   LP relaxation ([`solver`]), and decoded into a compact surrogate
//!   ([`surrogate`]).
//!
//! [`evaluation`] measures how faithful the surrogate is and [`tuning`]
//! grid-searches the trade-off hyperparameters with stratified
//! cross-validation. [`cli`] wires everything into the `miret` binary.

pub mod cli;
pub mod dataset;
pub mod evaluation;
pub mod forest;
pub mod model;
pub mod solver;
pub mod stats;
pub mod surrogate;
pub mod tuning;
pub mod vite;

pub use dataset::{load_csv, load_csv_split, Dataset, SplitSpec};
pub use forest::{class_probabilities, train, ClassProbabilities, Forest, ForestConfig, Tree};
