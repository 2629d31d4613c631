//! Configuration files, output writers and the command-line interface.

mod app;
mod config;
mod output;

pub use app::run_cli;
pub use config::{
    parse_config, DomainSection, ModelSection, OutputSection, RunManifest, SolverSection, StudySection, TimeSection,
};
pub use output::{
    diagnostics_row, fmt_float, read_snapshot, write_diagnostics_csv, write_snapshot, write_table, SnapshotData,
    DIAGNOSTICS_COLUMNS, SNAPSHOT_ORDERING,
};
