//! Experiment campaigns: out-of-sample validation, radius sweeps and value
//! tables, with CSV/JSON emission.

mod config;
pub mod oos;
pub mod output;
mod study;
pub mod sweep;

pub use config::{EpsSpec, RunConfig};
pub use oos::{run_out_of_sample, ResultBundle};
pub use study::Study;
pub use sweep::{sweep_epsilon, SweepRow, SWEEP_LEVELS};

use crate::case_io::CaseError;
use crate::dro_opf::DroError;
use crate::lindistflow::SensitivityError;
use crate::uncertainty::UncertaintyError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
    #[error(transparent)]
    Dro(#[from] DroError),
    #[error("{0}")]
    Run(String),
    #[error("{0}")]
    Io(String),
    #[error("invalid run configuration: {0}")]
    Config(String),
}

/// Caps the worker pool at `GRIDVAL_THREADS` (default 1: a 33-bus
/// Wasserstein solve holds about 0.7 GB). Later calls are no-ops.
pub fn init_thread_pool() {
    let n = std::env::var("GRIDVAL_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1);
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
}
