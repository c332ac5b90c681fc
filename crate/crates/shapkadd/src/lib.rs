//! File formats, external value oracles, the benchmark harness and the
//! command-line front end for `shapkadd-core`.

pub mod bench;
pub mod cache;
pub mod cli;
pub mod data;
pub mod error;
pub mod gamespec;
pub mod interactions;
pub mod oracle;
pub mod plot;
pub mod table;

pub use shapkadd_core as core;

pub use bench::{run_benchmark, Aggregate, BenchmarkPlan, BenchmarkRecord, BenchmarkReport};
pub use cache::CachedGame;
pub use error::{Error, Result};
pub use gamespec::GameSpec;
pub use oracle::OracleGame;
pub use table::{load_value_table, save_value_table, Real};
