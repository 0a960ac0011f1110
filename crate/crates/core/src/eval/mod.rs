//! Classification metrics and benchmark harnesses.

mod harness;
mod metrics;

pub use harness::{
    median, run_ablation, run_scalability, samples_at_step, samples_from_records,
    write_ablation_table, write_curve_table, write_scalability_table, write_sweep_table,
    AblationPoint, HarnessError, ScalabilityConfig, ScalabilityRecord,
};
pub use metrics::{
    default_threshold_grid, mann_whitney_u_doubled, pr_auc, roc_auc, summarize, threshold_sweep,
    CurvePoint, CurveSummary, EvalError, EvalSample,
};
