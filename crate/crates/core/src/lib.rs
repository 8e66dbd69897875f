//! Emulated reduction-order non-determinism in reduced-precision matmul, and the
//! statistics used to test whether that noise looks like i.i.d. Gaussian static.

pub mod error;
pub mod harness;
pub mod matmul;
pub mod precision;
pub mod report;
pub mod seeding;
pub mod stats;

pub use error::{Error, Result};
pub use harness::{regenerate_trial, run_experiment, run_experiment_with, ExperimentConfig, NoiseReport};
pub use matmul::{
    dot_scheduled, matmul_batched, matmul_batched_row0, matmul_single, Accumulator, Arithmetic, Matrix, MatmulSpec,
    ReductionSchedule,
};
pub use report::{ReportDocument, ReportOptions, SCHEMA_VERSION};
pub use precision::{quantize, quantize_vector, quantize_with, PrecisionFormat, SubnormalMode};
pub use stats::{CovarianceSummary, FlipStats, NoiseSample, NullBaseline};
