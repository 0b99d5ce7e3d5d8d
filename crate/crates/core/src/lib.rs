//! Execution-DAG analysis of RISC-V instruction traces.
//!
//! A trace is parsed into [`trace::TraceRecord`]s, each record is decoded into
//! the registers and memory bytes it reads and writes ([`isa`]), and the
//! [`edag::EdagBuilder`] turns the stream into an execution DAG, optionally
//! filtering memory accesses through a [`cache::Cache`]. The resulting
//! [`edag::EdagSummary`] feeds the cost bounds and sensitivity metrics in
//! [`metrics`].

pub mod cache;
pub mod cli;
pub mod edag;
pub mod graph;
pub mod isa;
pub mod metrics;
pub mod oracle;
pub mod reg;
pub mod synth;
pub mod trace;

pub use cache::{Cache, CacheConfig, CacheStats};
pub use edag::{
    build, build_from_str, BuildOptions, CostModel, EdagBuilder, EdagSummary, FalseDeps,
};
pub use graph::{export_dot, MaterializedEdag};
pub use metrics::{compute_metrics, ModelParams, RankMetric};
pub use reg::Reg;
pub use trace::{open_trace, read_trace, TraceRecord};
