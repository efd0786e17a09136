use serde::{Deserialize, Serialize};

use super::clusters::Feature;
use super::UncertaintyError;
use crate::case_io::{AssetTable, Network};

/// Synthetic 24-hour shapes shipped with the crate: a PV bell centred on
/// 13:00 and an evening-peaking load, the low-load profile at 60% of high.
pub const DEFAULT_PROFILES_CSV: &str = include_str!("../../data/profiles.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadCase {
    Low,
    High,
}

impl std::str::FromStr for LoadCase {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(LoadCase::Low),
            "high" => Ok(LoadCase::High),
            other => Err(format!("unknown load case `{other}` (expected low|high)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub hour: usize,
    pub pv_scale: f64,
    pub load_scale_high: f64,
    pub load_scale_low: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profiles {
    pub rows: Vec<ProfileRow>,
}

impl Profiles {
    pub fn from_csv(text: &str) -> Result<Self, UncertaintyError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for rec in rdr.deserialize() {
            let row: ProfileRow = rec.map_err(|e| UncertaintyError::Profile(e.to_string()))?;
            rows.push(row);
        }
        rows.sort_by_key(|r| r.hour);
        for (k, r) in rows.iter().enumerate() {
            if r.hour != k {
                return Err(UncertaintyError::Profile(format!("missing or repeated hour {k}")));
            }
            if [r.pv_scale, r.load_scale_high, r.load_scale_low]
                .iter()
                .any(|v| !(*v >= 0.0))
            {
                return Err(UncertaintyError::Profile(format!("negative scale at hour {k}")));
            }
        }
        if rows.is_empty() {
            return Err(UncertaintyError::Profile("no rows".into()));
        }
        Ok(Profiles { rows })
    }

    pub fn shipped() -> Self {
        Self::from_csv(DEFAULT_PROFILES_CSV).expect("shipped profiles parse")
    }

    pub fn row(&self, hour: usize) -> Result<&ProfileRow, UncertaintyError> {
        self.rows
            .get(hour)
            .ok_or_else(|| UncertaintyError::Profile(format!("no profile for hour {hour}")))
    }
}

/// Point forecast per node, per unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Forecast {
    pub p_av: Vec<f64>,
    pub p_l: Vec<f64>,
    pub q_l: Vec<f64>,
}

impl Forecast {
    pub fn get(&self, node: usize, feature: Feature) -> f64 {
        match feature {
            Feature::PAv => self.p_av[node],
            Feature::PL => self.p_l[node],
            Feature::QL => self.q_l[node],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.p_l.len()
    }
}

/// PV availability is the inverter rating times the PV shape; loads are the
/// case-file base loads times the selected load shape.
pub fn hourly_forecast(
    net: &Network,
    assets: &AssetTable,
    profiles: &Profiles,
    hour: usize,
    load: LoadCase,
) -> Result<Forecast, UncertaintyError> {
    let row = profiles.row(hour)?;
    let ls = match load {
        LoadCase::High => row.load_scale_high,
        LoadCase::Low => row.load_scale_low,
    };
    Ok(Forecast {
        p_av: assets.pv_rating.iter().map(|s| s * row.pv_scale).collect(),
        p_l: net.nodes.iter().map(|n| n.p_load_pu * ls).collect(),
        q_l: net.nodes.iter().map(|n| n.q_load_pu * ls).collect(),
    })
}
