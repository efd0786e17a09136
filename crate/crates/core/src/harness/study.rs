use crate::case_io::{
    build_network, load_scenario_config, parse_matpower_case, AssetTable, Network, PvCase, PvSpec, ScenarioConfig,
    CASE33BW,
};
use crate::dro_opf::OpfInstance;
use crate::lindistflow::{sensitivity_matrices, VoltageSensitivity};
use crate::uncertainty::{
    cluster_set_from_spec, default_support, feature_index_map, generate_samples, hourly_forecast, ClusterSet,
    FeatureIndex, Forecast, LoadCase, Profiles, ResampleClip, SampleSet, SupportBox,
};

use super::HarnessError;

/// A feeder with its assets, providers and profiles: everything that does
/// not change between hours or sample draws.
#[derive(Debug, Clone)]
pub struct Study {
    pub net: Network,
    pub sens: VoltageSensitivity,
    pub assets: AssetTable,
    pub clusters: ClusterSet,
    pub index: FeatureIndex,
    pub profiles: Profiles,
    pub rel_std: f64,
}

impl Study {
    pub fn new(case_text: &str, scenario: &ScenarioConfig) -> Result<Self, HarnessError> {
        let raw = parse_matpower_case(case_text)?;
        let net = build_network(&raw, scenario.units)?;
        let assets = load_scenario_config(scenario, &net)?;
        let sens = sensitivity_matrices(&net, assets.v_limits.v0_sq)?;
        let clusters = cluster_set_from_spec(&scenario.clusters, &net)?;
        let index = feature_index_map(&clusters)?;
        let profiles = match &scenario.profiles.csv {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| HarnessError::Io(format!("profiles `{path}`: {e}")))?;
                Profiles::from_csv(&text)?
            }
            None => Profiles::shipped(),
        };
        Ok(Study {
            net,
            sens,
            assets,
            clusters,
            index,
            profiles,
            rel_std: scenario.profiles.rel_std,
        })
    }

    /// The shipped 33-bus feeder with the five-provider arrangement.
    pub fn case33(pv: PvCase) -> Self {
        let doc = ScenarioConfig {
            pv: Some(PvSpec::Case(pv)),
            ..Default::default()
        };
        Self::new(CASE33BW, &doc).expect("shipped 33-bus study is valid")
    }

    pub fn forecast(&self, hour: usize, load: LoadCase) -> Result<Forecast, HarnessError> {
        Ok(hourly_forecast(&self.net, &self.assets, &self.profiles, hour, load)?)
    }

    pub fn support(&self, hour: usize, load: LoadCase) -> Result<SupportBox, HarnessError> {
        Ok(default_support(&self.forecast(hour, load)?, &self.assets, &self.index)?)
    }

    pub fn draw(&self, hour: usize, load: LoadCase, n: usize, seed: u64) -> Result<SampleSet, HarnessError> {
        let fc = self.forecast(hour, load)?;
        let support = default_support(&fc, &self.assets, &self.index)?;
        Ok(generate_samples(
            &fc,
            self.rel_std,
            n,
            seed,
            &support,
            &self.index,
            &ResampleClip::default(),
        )?)
    }

    pub fn instance(
        &self,
        hour: usize,
        load: LoadCase,
        samples: SampleSet,
        eps: Vec<f64>,
    ) -> Result<OpfInstance, HarnessError> {
        let inst = OpfInstance {
            net: self.net.clone(),
            sens: self.sens.clone(),
            assets: self.assets.clone(),
            clusters: self.clusters.clone(),
            index: self.index.clone(),
            samples,
            support: self.support(hour, load)?,
            eps,
            hour,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn n_clusters(&self) -> usize {
        self.index.n_clusters()
    }
}
