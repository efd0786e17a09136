//! Data providers, forecasts, support boxes, sampling and optimal transport.

pub mod clusters;
pub mod profiles;
pub mod sampling;
pub mod support;
pub mod transport;

pub use clusters::{cluster_set_from_spec, feature_index_map, ClusterSet, Feature, FeatureIndex, Slot};
pub use profiles::{hourly_forecast, Forecast, LoadCase, Profiles};
pub use sampling::{generate_samples, truncation_registry, Clip, ResampleClip, SampleSet, Truncation};
pub use support::{default_support, SupportBox};
pub use transport::{transport_registry, wasserstein_distance, MinCostFlow, TransportLp, TransportSolver};

#[derive(Debug, thiserror::Error)]
pub enum UncertaintyError {
    #[error("invalid clustering: {0}")]
    Partition(String),
    #[error("profile data: {0}")]
    Profile(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sample generation: {0}")]
    Generation(String),
    #[error("sample sets are not index-aligned: {0}")]
    Misaligned(String),
    #[error("optimal transport: {0}")]
    Transport(String),
}
