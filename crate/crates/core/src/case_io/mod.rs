//! Case files, radial network construction and scenario configuration.

pub mod matpower;
pub mod network;
pub mod scenario;

pub use matpower::{parse_matpower_case, BranchRow, BusRow, RawCase};
pub use network::{build_network, Branch, CaseUnits, ImpedanceUnit, LoadUnit, Network, Node};
pub use scenario::{
    load_scenario_config, AssetTable, ClusterPreset, ClusterSpec, CostCoeffs, DerLimits, PvCase, PvSpec, PvUnit, DerUnit,
    RiskLevels, ScenarioConfig, VoltageLimits,
};

/// The 33-bus Baran-Wu feeder shipped with the crate.
pub const CASE33BW: &str = include_str!("../../data/case33bw.m");

#[derive(Debug, thiserror::Error)]
pub enum CaseError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("malformed case: {0}")]
    Structure(String),
    #[error("network is not radial: {0}")]
    NotRadial(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}
