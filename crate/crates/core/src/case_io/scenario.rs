//! Scenario configuration: PV and DER placement, tariffs, voltage limits and
//! risk levels. See `docs/scenario.md` at the repository root for the JSON
//! schema.

use serde::{Deserialize, Serialize};

use super::network::{CaseUnits, Network};
use super::CaseError;

/// PV placement of the 33-bus study, `(bus, rating kW)`.
pub const HIGH_PV: [(u32, f64); 19] = [
    (3, 500.0),
    (5, 500.0),
    (6, 750.0),
    (8, 400.0),
    (11, 750.0),
    (12, 800.0),
    (14, 200.0),
    (16, 500.0),
    (17, 200.0),
    (18, 500.0),
    (19, 200.0),
    (21, 500.0),
    (22, 500.0),
    (23, 200.0),
    (25, 300.0),
    (27, 600.0),
    (29, 600.0),
    (31, 300.0),
    (33, 800.0),
];

/// Buses of [`HIGH_PV`] that carry no PV in the low-penetration case.
pub const LOW_PV_EXCLUDED: [u32; 9] = [16, 17, 18, 19, 22, 23, 25, 27, 31];

/// DER placement `(bus, |p| limit kW)`.
pub const DEFAULT_DER: [(u32, f64); 4] = [(19, 50.0), (20, 22.0), (24, 50.0), (25, 50.0)];

/// Data-provider clusters of the 33-bus study, as inclusive bus ranges.
pub const STUDY_CLUSTERS: [(u32, u32); 5] = [(1, 10), (11, 18), (19, 22), (23, 25), (26, 33)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PvCase {
    Low,
    High,
}

impl std::str::FromStr for PvCase {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(PvCase::Low),
            "high" => Ok(PvCase::High),
            other => Err(format!("unknown PV case `{other}` (expected low|high)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvUnit {
    pub bus: u32,
    pub rating_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PvSpec {
    Case(PvCase),
    Units(Vec<PvUnit>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerUnit {
    pub bus: u32,
    pub p_min_kw: f64,
    pub p_max_kw: f64,
    #[serde(default)]
    pub q_min_kvar: f64,
    #[serde(default)]
    pub q_max_kvar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostCoeffs {
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub h: f64,
}

impl Default for CostCoeffs {
    fn default() -> Self {
        CostCoeffs {
            c: 10.0,
            d: 3.0,
            e: 3.0,
            h: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CostOverride {
    pub bus: u32,
    pub c: Option<f64>,
    pub d: Option<f64>,
    pub e: Option<f64>,
    pub h: Option<f64>,
}

/// Uniform tariffs (each defaulting independently) plus per-bus overrides.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    pub c: Option<f64>,
    pub d: Option<f64>,
    pub e: Option<f64>,
    pub h: Option<f64>,
    #[serde(default)]
    pub per_bus: Vec<CostOverride>,
}

/// Limits on the squared voltage magnitude, p.u.².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoltageLimits {
    pub v_min: f64,
    pub v_max: f64,
    #[serde(default = "one")]
    pub v0_sq: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for VoltageLimits {
    fn default() -> Self {
        VoltageLimits {
            v_min: 0.9,
            v_max: 1.1,
            v0_sq: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskLevels {
    pub eta_vol: f64,
    pub eta_inv: f64,
}

impl Default for RiskLevels {
    fn default() -> Self {
        RiskLevels {
            eta_vol: 0.05,
            eta_inv: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    /// Path to a profiles CSV; the shipped synthetic profiles when absent.
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default = "default_rel_std")]
    pub rel_std: f64,
}

fn default_rel_std() -> f64 {
    0.2
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec {
            csv: None,
            rel_std: default_rel_std(),
        }
    }
}

/// How uncertain features are grouped into data providers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClusterSpec {
    Named(ClusterPreset),
    Buses(Vec<Vec<u32>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterPreset {
    /// The five aggregators of the 33-bus study.
    Study5,
    /// One provider per node.
    PerNode,
    /// One provider for all load features, one for all PV availability.
    LoadPv,
}

impl Default for ClusterSpec {
    fn default() -> Self {
        ClusterSpec::Named(ClusterPreset::Study5)
    }
}

/// JSON scenario document. Every key is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub units: CaseUnits,
    #[serde(default)]
    pub pv: Option<PvSpec>,
    #[serde(default)]
    pub der: Option<Vec<DerUnit>>,
    #[serde(default)]
    pub cost: CostSpec,
    #[serde(default)]
    pub voltage_limits: Option<VoltageLimits>,
    #[serde(default)]
    pub risk: Option<RiskLevels>,
    #[serde(default)]
    pub profiles: ProfileSpec,
    #[serde(default)]
    pub clusters: ClusterSpec,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CaseError> {
        serde_json::from_str(text).map_err(|e| CaseError::Config(format!("scenario config: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DerLimits {
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

/// Per-node asset and tariff data, indexed like [`Network::nodes`], per unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetTable {
    /// Inverter apparent-power rating; zero where there is no PV.
    pub pv_rating: Vec<f64>,
    pub has_pv: Vec<bool>,
    pub der: Vec<DerLimits>,
    pub cost: Vec<CostCoeffs>,
    pub v_limits: VoltageLimits,
    pub risk: RiskLevels,
}

impl AssetTable {
    pub fn pv_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.has_pv.iter().enumerate().filter(|(_, &b)| b).map(|(n, _)| n)
    }

    pub fn validate(&self) -> Result<(), CaseError> {
        for (n, &s) in self.pv_rating.iter().enumerate() {
            if !(s >= 0.0) {
                return Err(CaseError::Config(format!("node {n}: negative PV rating")));
            }
        }
        for (n, d) in self.der.iter().enumerate() {
            if d.p_min > d.p_max || d.q_min > d.q_max {
                return Err(CaseError::Config(format!("node {n}: DER bounds are inverted")));
            }
        }
        let r = self.risk;
        // 1 is accepted: it switches the chance constraint off
        for (name, eta) in [("eta_vol", r.eta_vol), ("eta_inv", r.eta_inv)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(CaseError::Config(format!("{name} must lie in (0, 1], got {eta}")));
            }
        }
        let v = self.v_limits;
        if !(v.v_min < v.v_max) || !(v.v0_sq > 0.0) {
            return Err(CaseError::Config(format!(
                "invalid voltage limits: v_min={} v_max={} v0_sq={}",
                v.v_min, v.v_max, v.v0_sq
            )));
        }
        Ok(())
    }
}

fn node_for(net: &Network, bus: u32, what: &str) -> Result<usize, CaseError> {
    net.index_of(bus).ok_or_else(|| {
        CaseError::Config(format!("{what} at bus {bus}, which is not a non-slack node of the network"))
    })
}

/// Resolves a scenario document against a network. Omitted keys take the
/// 33-bus study defaults (high PV, four DERs, c=10 d=3 e=3 h=6, limits
/// 0.9/1.1 on the squared magnitude, 5% risk levels).
pub fn load_scenario_config(doc: &ScenarioConfig, net: &Network) -> Result<AssetTable, CaseError> {
    let n = net.n_nodes();
    let mut pv_rating = vec![0.0; n];
    let mut has_pv = vec![false; n];
    let units: Vec<PvUnit> = match doc.pv.clone().unwrap_or(PvSpec::Case(PvCase::High)) {
        PvSpec::Case(case) => HIGH_PV
            .iter()
            .filter(|(bus, _)| case == PvCase::High || !LOW_PV_EXCLUDED.contains(bus))
            .map(|&(bus, rating_kw)| PvUnit { bus, rating_kw })
            .collect(),
        PvSpec::Units(units) => units,
    };
    for u in &units {
        let node = node_for(net, u.bus, "PV unit")?;
        if has_pv[node] {
            return Err(CaseError::Config(format!("two PV units at bus {}", u.bus)));
        }
        if !(u.rating_kw >= 0.0) {
            return Err(CaseError::Config(format!("negative PV rating at bus {}", u.bus)));
        }
        has_pv[node] = true;
        pv_rating[node] = net.kw_to_pu(u.rating_kw);
    }

    let mut der = vec![DerLimits::default(); n];
    let der_units: Vec<DerUnit> = match &doc.der {
        Some(list) => list.clone(),
        None => DEFAULT_DER
            .iter()
            .map(|&(bus, lim)| DerUnit {
                bus,
                p_min_kw: -lim,
                p_max_kw: lim,
                q_min_kvar: 0.0,
                q_max_kvar: 0.0,
            })
            .collect(),
    };
    for d in &der_units {
        let node = node_for(net, d.bus, "DER")?;
        der[node] = DerLimits {
            p_min: net.kw_to_pu(d.p_min_kw),
            p_max: net.kw_to_pu(d.p_max_kw),
            q_min: net.kw_to_pu(d.q_min_kvar),
            q_max: net.kw_to_pu(d.q_max_kvar),
        };
    }

    let dflt = CostCoeffs::default();
    let base = CostCoeffs {
        c: doc.cost.c.unwrap_or(dflt.c),
        d: doc.cost.d.unwrap_or(dflt.d),
        e: doc.cost.e.unwrap_or(dflt.e),
        h: doc.cost.h.unwrap_or(dflt.h),
    };
    let mut cost = vec![base; n];
    for o in &doc.cost.per_bus {
        let node = node_for(net, o.bus, "cost override")?;
        let c = &mut cost[node];
        c.c = o.c.unwrap_or(c.c);
        c.d = o.d.unwrap_or(c.d);
        c.e = o.e.unwrap_or(c.e);
        c.h = o.h.unwrap_or(c.h);
    }

    let table = AssetTable {
        pv_rating,
        has_pv,
        der,
        cost,
        v_limits: doc.voltage_limits.unwrap_or_default(),
        risk: doc.risk.unwrap_or_default(),
    };
    table.validate()?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_io::{build_network, parse_matpower_case, CASE33BW};

    fn net33() -> Network {
        build_network(&parse_matpower_case(CASE33BW).unwrap(), CaseUnits::default()).unwrap()
    }

    #[test]
    fn high_pv_defaults() {
        let net = net33();
        let doc = ScenarioConfig::from_json(r#"{"pv": "high"}"#).unwrap();
        let t = load_scenario_config(&doc, &net).unwrap();
        assert_eq!(t.pv_nodes().count(), 19);
        let n12 = net.index_of(12).unwrap();
        assert!((net.pu_to_kw(t.pv_rating[n12]) - 800.0).abs() < 1e-9);
    }

    #[test]
    fn low_pv_table() {
        let net = net33();
        let doc = ScenarioConfig::from_json(r#"{"pv": "low"}"#).unwrap();
        let t = load_scenario_config(&doc, &net).unwrap();
        assert_eq!(t.pv_nodes().count(), 10);
        assert!(!t.has_pv[net.index_of(16).unwrap()]);
        assert!(t.has_pv[net.index_of(33).unwrap()]);
    }

    #[test]
    fn empty_document_takes_defaults() {
        let net = net33();
        let t = load_scenario_config(&ScenarioConfig::from_json("{}").unwrap(), &net).unwrap();
        assert!(t.cost.iter().all(|c| *c == CostCoeffs::default()));
        assert!(t.cost.iter().all(|c| c.c == 10.0));
        assert_eq!(t.v_limits.v_max, 1.1);
        assert_eq!(t.v_limits.v_min, 0.9);
        assert_eq!(t.risk.eta_inv, 0.05);
        let n20 = net.index_of(20).unwrap();
        assert!((net.pu_to_kw(t.der[n20].p_max) - 22.0).abs() < 1e-9);
        assert_eq!(t.der[n20].q_max, 0.0);
        assert_eq!(t.der[net.index_of(2).unwrap()], DerLimits::default());
    }

    #[test]
    fn overrides_apply() {
        let net = net33();
        let doc = ScenarioConfig::from_json(
            r#"{"cost": {"c": 12, "d": 2, "e": 1, "h": 5, "per_bus": [{"bus": 4, "h": 9}]},
                "pv": [{"bus": 7, "rating_kw": 100}],
                "der": [],
                "risk": {"eta_vol": 0.1, "eta_inv": 0.2},
                "clusters": [[2,3],[4,5,6]]}"#,
        )
        .unwrap();
        let t = load_scenario_config(&doc, &net).unwrap();
        assert_eq!(t.cost[0].c, 12.0);
        assert_eq!(t.cost[net.index_of(4).unwrap()].h, 9.0);
        assert_eq!(t.pv_nodes().collect::<Vec<_>>(), vec![net.index_of(7).unwrap()]);
        assert!(t.der.iter().all(|d| *d == DerLimits::default()));
        assert_eq!(doc.clusters, ClusterSpec::Buses(vec![vec![2, 3], vec![4, 5, 6]]));
    }

    #[test]
    fn unknown_node_is_config_error() {
        let net = net33();
        let doc = ScenarioConfig::from_json(r#"{"pv": [{"bus": 99, "rating_kw": 10}]}"#).unwrap();
        assert!(matches!(load_scenario_config(&doc, &net), Err(CaseError::Config(_))));
        let doc = ScenarioConfig::from_json(r#"{"der": [{"bus": 1, "p_min_kw": 0, "p_max_kw": 1}]}"#).unwrap();
        assert!(matches!(load_scenario_config(&doc, &net), Err(CaseError::Config(_))));
    }

    #[test]
    fn invalid_risk_rejected() {
        let net = net33();
        let doc = ScenarioConfig::from_json(r#"{"risk": {"eta_vol": 0.0, "eta_inv": 0.05}}"#).unwrap();
        assert!(load_scenario_config(&doc, &net).is_err());
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(ScenarioConfig::from_json(r#"{"pvv": "high"}"#).is_err());
    }
}
