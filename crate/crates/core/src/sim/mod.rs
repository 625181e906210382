//! Simulation harness: random hurdle populations, exact ground truth on a
//! fine grid, and a study runner comparing estimators against it.

pub mod grid;
pub mod hurdle;
pub mod study;
pub mod summary;
pub mod truth;

pub use grid::{build_grid, sample_visitors, RiemannGrid, DEFAULT_RESOLUTION};
pub use hurdle::{random_hurdle, BetaComponent, HurdleModel};
pub use study::{
    evaluate, run_single, run_study, run_study_with, simulate_experiment, EstimateRow, Estimator,
    SimFailure, SimOutcome, SimulatedExperiment, SimulationRecord, Statistic, StudyConfig,
    StudyCsvWriter,
};
pub use summary::{summarize, SummaryRow};
pub use truth::{ground_truth, TruthRecord};
