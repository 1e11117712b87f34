//! Round-loop simulation, file formats, audit and reporting.

mod config;
mod files;
mod metrics;
mod report;
mod simulate;

pub use config::{Accounting, Profile, SimulationConfig, CONFIG_SCHEMA};
pub use files::{
    read_batch, read_ledger, read_policies, write_batch, write_ledger, write_policies, write_run, BatchFile,
    LedgerFile, PoliciesFile, BATCH_SCHEMA, LEDGER_SCHEMA, POLICIES_SCHEMA,
};
pub use metrics::{read_metrics, write_metrics, RoundMetrics, METRICS_SCHEMA};
pub use report::{compare, load_runs, report, Comparison, Report, RunSeries};
pub use simulate::{audit, prepare_batch, run_replicated, run_simulation, run_workload, AuditReport, SimulationResult};
