pub mod experiment;
pub mod folds;
pub mod metrics;
pub mod report;

pub use experiment::{run_experiment, ExperimentError, ExperimentModel, ExperimentOptions};
pub use folds::{stratified_kfold, FoldAssignment, FoldError};
pub use metrics::{micro_metrics, MetricError, MetricSet};
pub use report::{render_report, DatasetSummary, ReportFormat, ReportRow, ReportTable};
