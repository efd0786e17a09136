use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::clusters::FeatureIndex;
use super::profiles::Forecast;
use super::support::SupportBox;
use super::UncertaintyError;
use crate::registry::{Named, Registry};

/// How a normal draw is brought inside its support interval.
pub trait Truncation: Named + Send + Sync {
    fn draw(&self, rng: &mut ChaCha8Rng, mean: f64, std: f64, lo: f64, hi: f64) -> f64;
}

/// Redraw until inside the interval, up to `max_tries`, then clip.
#[derive(Debug, Clone, Copy)]
pub struct ResampleClip {
    pub max_tries: u32,
}

impl Default for ResampleClip {
    fn default() -> Self {
        ResampleClip { max_tries: 100 }
    }
}

impl Named for ResampleClip {
    fn name(&self) -> &'static str {
        "resample-clip"
    }
}

impl Truncation for ResampleClip {
    fn draw(&self, rng: &mut ChaCha8Rng, mean: f64, std: f64, lo: f64, hi: f64) -> f64 {
        let mut v = mean;
        for _ in 0..self.max_tries.max(1) {
            let z: f64 = StandardNormal.sample(rng);
            v = mean + std * z;
            if v >= lo && v <= hi {
                return v;
            }
        }
        v.clamp(lo, hi)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Clip;

impl Named for Clip {
    fn name(&self) -> &'static str {
        "clip"
    }
}

impl Truncation for Clip {
    fn draw(&self, rng: &mut ChaCha8Rng, mean: f64, std: f64, lo: f64, hi: f64) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        (mean + std * z).clamp(lo, hi)
    }
}

pub fn truncation_registry() -> Registry<dyn Truncation> {
    Registry::<dyn Truncation>::new("truncation rule")
        .with(Box::new(ResampleClip::default()))
        .with(Box::new(Clip))
}

/// Per-cluster sample matrices (`I` rows by cluster dimension), per unit.
/// Row `i` of every cluster belongs to the same draw.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub clusters: Vec<DMatrix<f64>>,
}

impl SampleSet {
    pub fn n_samples(&self) -> usize {
        self.clusters.first().map_or(0, |m| m.nrows())
    }

    /// Rows `indices` of every cluster, keeping index alignment.
    pub fn select(&self, indices: &[usize]) -> SampleSet {
        SampleSet {
            clusters: self.clusters.iter().map(|m| m.select_rows(indices)).collect(),
        }
    }

    /// Errors unless all clusters have the same number of rows.
    pub fn check_aligned(&self) -> Result<usize, UncertaintyError> {
        let i = self.n_samples();
        for (f, m) in self.clusters.iter().enumerate() {
            if m.nrows() != i {
                return Err(UncertaintyError::Misaligned(format!(
                    "cluster {} has {} samples, cluster 1 has {i}",
                    f + 1,
                    m.nrows()
                )));
            }
        }
        Ok(i)
    }

    /// Sample `i` in global feature order.
    pub fn global_row(&self, i: usize) -> Vec<f64> {
        self.clusters
            .iter()
            .flat_map(|m| m.row(i).iter().copied().collect::<Vec<_>>())
            .collect()
    }
}

/// Draws `n` samples of every feature from `Normal(forecast, (rel_std *
/// forecast)^2)`, truncated to the support. Draw order is
/// sample, node, feature, independent of the clustering, so the same seed
/// gives the same physical scenarios under any provider arrangement.
pub fn generate_samples(
    forecast: &Forecast,
    rel_std: f64,
    n: usize,
    seed: u64,
    support: &SupportBox,
    index: &FeatureIndex,
    truncation: &dyn Truncation,
) -> Result<SampleSet, UncertaintyError> {
    if !(rel_std >= 0.0) {
        return Err(UncertaintyError::Config(format!("relative std must be >= 0, got {rel_std}")));
    }
    if n == 0 {
        return Err(UncertaintyError::Config("sample count must be positive".into()));
    }
    let n_nodes = forecast.n_nodes();
    for f in 0..index.n_clusters() {
        for m in 0..index.dim(f) {
            let s = index.slot(f, m);
            let (lo, hi) = support.bounds(f, m);
            let mean = forecast.get(s.node, s.feature);
            let tol = 1e-12 * (1.0 + mean.abs());
            if mean < lo - tol || mean > hi + tol {
                return Err(UncertaintyError::Generation(format!(
                    "node {} {}: forecast {mean} outside support [{lo}, {hi}]",
                    s.node,
                    s.feature.name()
                )));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clusters: Vec<DMatrix<f64>> =
        (0..index.n_clusters()).map(|f| DMatrix::zeros(n, index.dim(f))).collect();
    for i in 0..n {
        for node in 0..n_nodes {
            for feature in super::Feature::ALL {
                let (f, m) = index
                    .position(node, feature)
                    .ok_or_else(|| UncertaintyError::Partition(format!("node {node} not clustered")))?;
                let mean = forecast.get(node, feature);
                let (lo, hi) = support.bounds(f, m);
                let std = rel_std * mean.abs();
                let v = if std == 0.0 || lo == hi {
                    mean.clamp(lo, hi)
                } else {
                    truncation.draw(&mut rng, mean, std, lo, hi)
                };
                clusters[f][(i, m)] = v;
            }
        }
    }
    Ok(SampleSet { clusters })
}
