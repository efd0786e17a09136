use serde::Serialize;

use super::clusters::{Feature, FeatureIndex};
use super::profiles::Forecast;
use super::UncertaintyError;
use crate::case_io::AssetTable;

/// Componentwise bounds on each cluster's feature vector, per unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportBox {
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
}

impl SupportBox {
    pub fn bounds(&self, cluster: usize, m: usize) -> (f64, f64) {
        (self.lower[cluster][m], self.upper[cluster][m])
    }

    pub fn is_degenerate(&self, cluster: usize, m: usize) -> bool {
        self.lower[cluster][m] == self.upper[cluster][m]
    }

    pub fn contains(&self, cluster: usize, m: usize, v: f64) -> bool {
        v >= self.lower[cluster][m] && v <= self.upper[cluster][m]
    }
}

/// Load bounds relative to the forecast and PV availability up to the rating.
pub const LOAD_LOWER_FACTOR: f64 = 0.5;
pub const LOAD_UPPER_FACTOR: f64 = 1.2;

/// `p_av in [0, S_n]`, `p_l in [0.5, 1.2] * forecast`, `q_l in [0.5, 1.2] * forecast`.
/// Nodes without PV get `p_av in [0, 0]`.
pub fn default_support(
    forecast: &Forecast,
    assets: &AssetTable,
    index: &FeatureIndex,
) -> Result<SupportBox, UncertaintyError> {
    let n = forecast.n_nodes();
    if assets.pv_rating.len() != n || assets.has_pv.len() != n {
        return Err(UncertaintyError::Config(format!(
            "asset table covers {} nodes, forecast {}",
            assets.pv_rating.len(),
            n
        )));
    }
    let mut lower = Vec::with_capacity(index.n_clusters());
    let mut upper = Vec::with_capacity(index.n_clusters());
    for f in 0..index.n_clusters() {
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for m in 0..index.dim(f) {
            let s = index.slot(f, m);
            let (l, u) = match s.feature {
                Feature::PAv => {
                    let cap = if assets.has_pv[s.node] { assets.pv_rating[s.node] } else { 0.0 };
                    if forecast.p_av[s.node] > cap + 1e-12 {
                        return Err(UncertaintyError::Config(format!(
                            "node {}: PV forecast exceeds its rating",
                            s.node
                        )));
                    }
                    (0.0, cap)
                }
                other => {
                    let v = forecast.get(s.node, other);
                    let (a, b) = (LOAD_LOWER_FACTOR * v, LOAD_UPPER_FACTOR * v);
                    (a.min(b), a.max(b))
                }
            };
            lo.push(l);
            hi.push(u);
        }
        lower.push(lo);
        upper.push(hi);
    }
    Ok(SupportBox { lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_io::{CostCoeffs, DerLimits, RiskLevels, VoltageLimits};
    use crate::uncertainty::{feature_index_map, ClusterSet};

    fn assets(ratings: &[f64]) -> AssetTable {
        AssetTable {
            pv_rating: ratings.to_vec(),
            has_pv: ratings.iter().map(|&s| s > 0.0).collect(),
            der: vec![DerLimits::default(); ratings.len()],
            cost: vec![CostCoeffs::default(); ratings.len()],
            v_limits: VoltageLimits::default(),
            risk: RiskLevels::default(),
        }
    }

    #[test]
    fn box_formulas() {
        let fc = Forecast {
            p_av: vec![250.0, 0.0],
            p_l: vec![100.0, 0.0],
            q_l: vec![60.0, 10.0],
        };
        let idx = feature_index_map(&ClusterSet::per_node(2)).unwrap();
        let b = default_support(&fc, &assets(&[500.0, 0.0]), &idx).unwrap();
        assert_eq!(b.lower[0], vec![0.0, 50.0, 30.0]);
        assert_eq!(b.upper[0], vec![500.0, 120.0, 72.0]);
        // no PV and zero load collapse to points
        assert!(b.is_degenerate(1, 0));
        assert!(b.is_degenerate(1, 1));
        assert_eq!(b.bounds(1, 2), (5.0, 12.0));
    }

    #[test]
    fn forecast_above_rating_rejected() {
        let fc = Forecast {
            p_av: vec![600.0],
            p_l: vec![1.0],
            q_l: vec![1.0],
        };
        let idx = feature_index_map(&ClusterSet::per_node(1)).unwrap();
        assert!(default_support(&fc, &assets(&[500.0]), &idx).is_err());
    }
}
