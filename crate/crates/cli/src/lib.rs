//! Benchmark, verification and inspection harness around `rknn-core`.
//!
//! The `rknn` binary is a thin argument parser over these modules, so tests
//! can drive the same code paths without spawning processes.

pub mod bench;
pub mod instance;
pub mod stats;
pub mod verify;

pub use bench::{run_bench, write_csv, write_json, Algo, BenchConfig, BenchRow};
pub use instance::{load_instance, GenSpec, Instance, InstanceSpec, Sampling, Source};
pub use stats::{run_stats, StatsReport};
pub use verify::{run_verify, VerifyConfig, VerifyReport};
