use super::DroError;
use crate::case_io::{AssetTable, Network};
use crate::lindistflow::VoltageSensitivity;
use crate::uncertainty::{ClusterSet, Feature, FeatureIndex, SampleSet, SupportBox};

/// Everything one hourly OPF needs. Quantities are per unit; `eps[f]` is the
/// Wasserstein radius of cluster `f` in the same per-unit feature space.
#[derive(Debug, Clone)]
pub struct OpfInstance {
    pub net: Network,
    pub sens: VoltageSensitivity,
    pub assets: AssetTable,
    pub clusters: ClusterSet,
    pub index: FeatureIndex,
    pub samples: SampleSet,
    pub support: SupportBox,
    pub eps: Vec<f64>,
    pub hour: usize,
}

impl OpfInstance {
    pub fn n_nodes(&self) -> usize {
        self.net.n_nodes()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.n_samples()
    }

    pub fn n_clusters(&self) -> usize {
        self.index.n_clusters()
    }

    pub fn pv_nodes(&self) -> Vec<usize> {
        self.assets.pv_nodes().collect()
    }

    /// Sample `i` of `feature` at `node`.
    pub fn sample(&self, i: usize, node: usize, feature: Feature) -> f64 {
        let (f, m) = self.index.position(node, feature).expect("indexed");
        self.samples.clusters[f][(i, m)]
    }

    pub fn bounds(&self, node: usize, feature: Feature) -> (f64, f64) {
        let (f, m) = self.index.position(node, feature).expect("indexed");
        self.support.bounds(f, m)
    }

    pub fn with_eps(&self, eps: Vec<f64>) -> Result<OpfInstance, DroError> {
        let mut out = self.clone();
        out.eps = eps;
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), DroError> {
        let n = self.n_nodes();
        let f_count = self.n_clusters();
        if self.sens.n_nodes() != n || self.assets.pv_rating.len() != n || self.clusters.n_nodes != n {
            return Err(DroError::Instance("node counts of network, sensitivities, assets and clusters differ".into()));
        }
        let i = self
            .samples
            .check_aligned()
            .map_err(|e| DroError::Assumption(e.to_string()))?;
        if i == 0 {
            return Err(DroError::Instance("no samples".into()));
        }
        if self.samples.clusters.len() != f_count
            || self.support.lower.len() != f_count
            || self.eps.len() != f_count
        {
            return Err(DroError::Instance(format!(
                "{f_count} clusters but {} sample blocks, {} support blocks, {} radii",
                self.samples.clusters.len(),
                self.support.lower.len(),
                self.eps.len()
            )));
        }
        for (f, &e) in self.eps.iter().enumerate() {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(DroError::Instance(format!("radius of cluster {} is {e}", f + 1)));
            }
        }
        for f in 0..f_count {
            let dim = self.index.dim(f);
            if self.samples.clusters[f].ncols() != dim || self.support.lower[f].len() != dim {
                return Err(DroError::Instance(format!("cluster {} dimension mismatch", f + 1)));
            }
            for m in 0..dim {
                let (lo, hi) = self.support.bounds(f, m);
                if !(lo <= hi) {
                    return Err(DroError::Support(format!("cluster {} position {m}: empty interval", f + 1)));
                }
                let slot = self.index.slot(f, m);
                if slot.feature == Feature::PAv && !self.assets.has_pv[slot.node] {
                    let any = self.samples.clusters[f].column(m).iter().any(|&v| v != 0.0);
                    if any || hi > 0.0 {
                        return Err(DroError::Support(format!(
                            "node {} has no PV but positive PV availability data",
                            slot.node
                        )));
                    }
                }
                for r in 0..i {
                    let v = self.samples.clusters[f][(r, m)];
                    let tol = 1e-9 * (1.0 + v.abs());
                    if v < lo - tol || v > hi + tol {
                        return Err(DroError::Support(format!(
                            "sample {r} of cluster {} position {m} lies outside the support",
                            f + 1
                        )));
                    }
                }
            }
        }
        self.assets
            .validate()
            .map_err(|e| DroError::Instance(e.to_string()))?;
        Ok(())
    }
}
