use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{HarnessError, Study};
use crate::case_io::{PvCase, PvSpec, ScenarioConfig, CASE33BW};
use crate::conic::{SolverConfig, DEFAULT_BACKEND};
use crate::uncertainty::LoadCase;

/// How radii are chosen for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsSpec {
    Uniform(f64),
    PerCluster(Vec<f64>),
    /// The Wasserstein distance between the training subsample and the
    /// full reference draw, cluster by cluster.
    True,
}

impl EpsSpec {
    /// `true`, a single number, or a comma-separated list.
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("true") {
            return Ok(EpsSpec::True);
        }
        let vals = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| HarnessError::Config(format!("cannot parse radius specification `{s}`")))?;
        if vals.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(HarnessError::Config(format!("radii must be finite and nonnegative: `{s}`")));
        }
        Ok(match vals.as_slice() {
            [v] => EpsSpec::Uniform(*v),
            _ => EpsSpec::PerCluster(vals),
        })
    }

    pub fn resolve(&self, n_clusters: usize, true_eps: Option<&[f64]>) -> Result<Vec<f64>, HarnessError> {
        match self {
            EpsSpec::Uniform(v) => Ok(vec![*v; n_clusters]),
            EpsSpec::PerCluster(v) if v.len() == n_clusters => Ok(v.clone()),
            EpsSpec::PerCluster(v) => Err(HarnessError::Config(format!(
                "{} radii given for {n_clusters} clusters",
                v.len()
            ))),
            EpsSpec::True => true_eps
                .map(|e| e.to_vec())
                .ok_or_else(|| HarnessError::Config("true radii are only available in validation runs".into())),
        }
    }

    pub fn label(&self) -> String {
        match self {
            EpsSpec::Uniform(v) => format!("{v}"),
            EpsSpec::PerCluster(v) => v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
            EpsSpec::True => "true".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// MATPOWER case file; the shipped 33-bus feeder when absent.
    pub case: Option<PathBuf>,
    /// Scenario JSON; study defaults when absent.
    pub scenario: Option<PathBuf>,
    /// Overrides the scenario's PV placement.
    pub pv: Option<PvCase>,
    pub load: LoadCase,
    pub hours: Vec<usize>,
    pub eps: EpsSpec,
    pub n_samples: usize,
    pub n_full: usize,
    pub n_test: usize,
    pub seed: u64,
    pub replicates: usize,
    pub formulation: String,
    pub backend: String,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            case: None,
            scenario: None,
            pv: None,
            load: LoadCase::High,
            hours: vec![18],
            eps: EpsSpec::Uniform(0.01),
            n_samples: 25,
            n_full: 1000,
            n_test: 100,
            seed: 1,
            replicates: 1,
            formulation: "msw-dro".into(),
            backend: DEFAULT_BACKEND.into(),
            out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n_samples == 0 || self.n_full == 0 || self.n_test == 0 || self.replicates == 0 {
            return Err(HarnessError::Config("sample counts and replicates must be positive".into()));
        }
        if self.n_samples > self.n_full {
            return Err(HarnessError::Config(format!(
                "training sample count {} exceeds the reference draw {}",
                self.n_samples, self.n_full
            )));
        }
        if self.hours.is_empty() {
            return Err(HarnessError::Config("no hours selected".into()));
        }
        if let Some(h) = self.hours.iter().find(|&&h| h > 23) {
            return Err(HarnessError::Config(format!("hour {h} is outside 0-23")));
        }
        Ok(())
    }

    pub fn study(&self) -> Result<Study, HarnessError> {
        let read = |p: &PathBuf| {
            std::fs::read_to_string(p).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))
        };
        let case_text = match &self.case {
            Some(p) => read(p)?,
            None => CASE33BW.to_string(),
        };
        let mut doc = match &self.scenario {
            Some(p) => ScenarioConfig::from_json(&read(p)?)?,
            None => ScenarioConfig::default(),
        };
        if let Some(pv) = self.pv {
            doc.pv = Some(PvSpec::Case(pv));
        }
        Study::new(&case_text, &doc)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig::default()
    }
}
