//! Experiment harness: configs, the benchmark catalog, studies and reports.

mod catalog;
mod config;
mod report;
mod study;

pub use catalog::{Discretization, ProblemKind};
pub use config::{load_config, parse_config, save_config, write_config, ExperimentConfig, OptimizerKind, StudyMode};
pub use report::{
    emit_report, fit_slope, mean_std, write_report_csv, write_summary_csv, write_timing_csv, Report, ReportFiles,
    ReportRow, SlopeFit, REPORT_HEADER, SUMMARY_HEADER, TIMING_HEADER,
};
pub use study::{
    acceptance_checks, benchmark_bound, layer_width, run_benchmark, run_convergence_study, run_singular_study, Check,
    StudyKind, LAYER_REFERENCE_ELEMENTS, LAYER_WIDTH_FRACTION,
};
