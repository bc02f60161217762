//! Nested cross-validation experiments over datasets, model presets and
//! tuning regimes, and the report files built from them.
//!
//! Every outer fold plan is drawn once per dataset from the experiment seed
//! and shared by every model and regime. Seeds for tuning, encoding and
//! fitting derive from (seed, dataset, model, regime, fold), so results do
//! not depend on how jobs are scheduled across threads.

mod config;
mod report;
mod run;

pub use config::{DatasetSpec, ExperimentConfig, ModelSpec, Preset, Regime};
pub use report::{
    baseline_regime, digest, emit_report, entry_label, error_table, fold_table, mean_sd, pairwise_table, pct_diff,
    pct_diff_table, plan_file_name, rank_table, score_matrix, summary_table, ReportFormat, Table, RANK_ALPHA,
};
pub use run::{outer_seed, run_experiment, CellError, CellPlan, ExperimentReport, FoldRecord};
