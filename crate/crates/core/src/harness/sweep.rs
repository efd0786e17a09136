use rayon::prelude::*;
use serde::Serialize;

use super::{HarnessError, RunConfig, Study};
use crate::conic::solver_registry;
use crate::dro_opf::{formulation_registry, solve_opf, OpfInstance};
use crate::valuation::{marginal_data_value, DataValueReport};

/// Radius levels of the uniform sweep.
pub const SWEEP_LEVELS: [f64; 6] = [1.0, 0.1, 0.01, 0.005, 0.001, 0.0001];

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub hour: usize,
    /// The swept radius (uniform level, or the varied cluster's radius).
    pub level: f64,
    pub eps: Vec<f64>,
    pub objective: Option<f64>,
    pub report: Option<DataValueReport>,
    /// Failure message when this level did not solve.
    pub error: Option<String>,
}

/// Training instance for `hour`: `cfg.n_samples` draws under `cfg.seed`.
pub fn training_instance(study: &Study, cfg: &RunConfig, hour: usize, eps: Vec<f64>) -> Result<OpfInstance, HarnessError> {
    let samples = study.draw(hour, cfg.load, cfg.n_samples, cfg.seed)?;
    study.instance(hour, cfg.load, samples, eps)
}

/// One solve per level. With `vary = Some(f)` only cluster `f` takes the
/// level and the others stay at `others`; otherwise the level is uniform.
/// Failed levels are recorded and the sweep continues.
pub fn sweep_epsilon(
    study: &Study,
    cfg: &RunConfig,
    hour: usize,
    levels: &[f64],
    vary: Option<usize>,
    others: f64,
) -> Result<Vec<SweepRow>, HarnessError> {
    cfg.validate()?;
    if let Some(f) = vary {
        if f >= study.n_clusters() {
            return Err(HarnessError::Config(format!("cluster {} does not exist", f + 1)));
        }
    }
    let formulations = formulation_registry();
    let backends = solver_registry();
    let form = formulations.get(&cfg.formulation).map_err(|e| HarnessError::Config(e.to_string()))?;
    let backend = backends.get(&cfg.backend).map_err(|e| HarnessError::Config(e.to_string()))?;
    let base = training_instance(study, cfg, hour, vec![others; study.n_clusters()])?;
    let solver = cfg.solver();
    let rows = levels
        .par_iter()
        .map(|&level| {
            let eps = match vary {
                Some(f) => {
                    let mut e = vec![others; study.n_clusters()];
                    e[f] = level;
                    e
                }
                None => vec![level; study.n_clusters()],
            };
            let attempt = base
                .with_eps(eps.clone())
                .and_then(|inst| solve_opf(&inst, form, backend, &solver))
                .map_err(|e| e.to_string())
                .and_then(|s| {
                    marginal_data_value(&s.solution, &s.built, &eps).map_err(|e| e.to_string())
                });
            match attempt {
                Ok(r) => SweepRow {
                    hour,
                    level,
                    eps,
                    objective: Some(r.objective),
                    report: Some(r),
                    error: None,
                },
                Err(msg) => {
                    log::warn!("hour {hour} level {level}: {msg}");
                    SweepRow {
                        hour,
                        level,
                        eps,
                        objective: None,
                        report: None,
                        error: Some(msg),
                    }
                }
            }
        })
        .collect();
    Ok(rows)
}
