//! Distributed GEMM benchmark on the in-process rank engine.
//!
//! Builds the case-study matrix distributions from named dimensions,
//! scatters tiles to a rank group, runs the rank-local kernels, gathers
//! the result, and validates it bit for bit against a sequential
//! reference. Timings are reported as CSV.

pub mod config;
pub mod oracle;
pub mod problem;
pub mod report;
pub mod run;

pub use config::{dataset_dims, GemmConfig, Majors, DATASETS};
pub use oracle::{check_result, init_a, init_b, init_c, reference_gemm, Mismatch, ALPHA, BETA};
pub use problem::{build_problem, endpoint_plans, MatrixDist, Problem};
pub use report::{csv_report, make_records, BenchRecord, CSV_HEADER};
pub use run::{run_distributed_gemm, BenchError, GemmRun, PhaseRow};
