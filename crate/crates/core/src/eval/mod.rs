//! Per-class ROC-AUC reports and the scaling benchmark.

mod auc;
mod bench;
mod report;

pub use auc::{roc_auc, roc_auc_f32};
pub use bench::{
    check_sizes, linear_fit, measure_scaling, scaling_benchmark, BenchOptions, BenchTask,
    LinearFit, ScalingResult, Timing,
};
pub use report::{delta_pcp, geometric_mean_auc, per_class_report, EvalReport, CLASS_NAMES};
