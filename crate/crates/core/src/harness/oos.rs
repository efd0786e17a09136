//! Out-of-sample validation: a large reference draw plays the true
//! distribution, the operator sees a small subsample, and decisions are
//! scored on fresh draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{HarnessError, RunConfig, Study};
use crate::conic::{check_kkt, solver_registry, ConicSolver};
use crate::dro_opf::evaluate::{realized_cost, realized_voltages, voltage_violation};
use crate::dro_opf::{formulation_registry, solve_opf, Decisions, NodeScenario, OpfInstance, Saa};
use crate::uncertainty::{wasserstein_distance, LoadCase, SampleSet};
use crate::valuation::{marginal_data_value, DataValueReport};

/// Seed for stream `tag` of replicate `rep`.
pub fn derive_seed(seed: u64, tag: u64, rep: u64) -> u64 {
    // splitmix64 finalizer over the packed triple
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(tag.wrapping_add(1)))
        .wrapping_add(rep.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const TAG_FULL: u64 = 0;
const TAG_SUBSAMPLE: u64 = 1;
const TAG_TEST: u64 = 2;

#[derive(Debug, Clone, Serialize)]
pub struct OosScore {
    pub formulation: String,
    pub objective: f64,
    pub decisions: Decisions,
    pub costs: Vec<f64>,
    /// Per test sample, squared voltage magnitude per node.
    pub voltages: Vec<Vec<f64>>,
    pub violations: usize,
    pub violation_rate: f64,
    pub mean_cost: f64,
    /// The solve passed the KKT check at [`KKT_TOL`].
    pub kkt_ok: bool,
}

pub const KKT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct ResultBundle {
    pub hour: usize,
    pub replicate: usize,
    pub seed: u64,
    pub load: LoadCase,
    pub true_eps: Vec<f64>,
    pub eps: Vec<f64>,
    pub dro: OosScore,
    pub saa: OosScore,
    pub value: DataValueReport,
}

pub fn score(
    inst: &OpfInstance,
    formulation: &str,
    objective: f64,
    dec: &Decisions,
    test: &SampleSet,
    kkt_ok: bool,
) -> OosScore {
    let n = inst.n_nodes();
    let mut costs = Vec::with_capacity(test.n_samples());
    let mut voltages = Vec::with_capacity(test.n_samples());
    let mut violations = 0;
    for i in 0..test.n_samples() {
        let sc = NodeScenario::from_samples(&inst.index, test, i, n);
        costs.push(realized_cost(&inst.assets, dec, &sc));
        let v = realized_voltages(&inst.sens, dec, &sc);
        if voltage_violation(&v, &inst.assets.v_limits) {
            violations += 1;
        }
        voltages.push(v.iter().copied().collect());
    }
    let m = costs.len() as f64;
    OosScore {
        formulation: formulation.to_string(),
        objective,
        decisions: dec.clone(),
        mean_cost: costs.iter().sum::<f64>() / m,
        violation_rate: violations as f64 / m,
        costs,
        voltages,
        violations,
        kkt_ok,
    }
}

/// Reference draw, subsample and per-cluster true radii for one replicate.
pub fn reference_and_training(
    study: &Study,
    cfg: &RunConfig,
    hour: usize,
    rep: usize,
) -> Result<(SampleSet, SampleSet, Vec<f64>), HarnessError> {
    let full = study.draw(hour, cfg.load, cfg.n_full, derive_seed(cfg.seed, TAG_FULL, rep as u64))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, TAG_SUBSAMPLE, rep as u64));
    let idx = rand::seq::index::sample(&mut rng, cfg.n_full, cfg.n_samples).into_vec();
    let train = full.select(&idx);
    let true_eps = train
        .clusters
        .iter()
        .zip(&full.clusters)
        .map(|(a, b)| wasserstein_distance(a, b))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((full, train, true_eps))
}

/// One replicate of the validation protocol at one hour.
pub fn run_out_of_sample(study: &Study, cfg: &RunConfig, hour: usize, rep: usize) -> Result<ResultBundle, HarnessError> {
    cfg.validate()?;
    let formulations = formulation_registry();
    let backends = solver_registry();
    let form = formulations.get(&cfg.formulation).map_err(|e| HarnessError::Config(e.to_string()))?;
    let backend: &dyn ConicSolver = backends.get(&cfg.backend).map_err(|e| HarnessError::Config(e.to_string()))?;
    let solver = cfg.solver();

    let (_, train, true_eps) = reference_and_training(study, cfg, hour, rep)?;
    let eps = cfg.eps.resolve(study.n_clusters(), Some(&true_eps))?;
    let test = study.draw(hour, cfg.load, cfg.n_test, derive_seed(cfg.seed, TAG_TEST, rep as u64))?;

    let context = |e: crate::dro_opf::DroError| {
        HarnessError::Run(format!("hour {hour} replicate {rep}: {e}"))
    };
    let inst = study.instance(hour, cfg.load, train, eps.clone())?;
    let dro = solve_opf(&inst, form, backend, &solver).map_err(context)?;
    let value = marginal_data_value(&dro.solution, &dro.built, &eps)
        .map_err(|e| HarnessError::Run(format!("hour {hour} replicate {rep}: {e}")))?;
    let dro_kkt = check_kkt(&dro.built.program, &dro.solution, KKT_TOL).pass;
    let dro_score = score(&inst, form.name(), dro.outcome.objective, &dro.outcome.decisions, &test, dro_kkt);
    drop(dro);
    let saa_inst = inst.with_eps(vec![0.0; study.n_clusters()])?;
    let saa = solve_opf(&saa_inst, &Saa, backend, &solver).map_err(context)?;
    let saa_kkt = check_kkt(&saa.built.program, &saa.solution, KKT_TOL).pass;
    let saa_score = score(&inst, "saa", saa.outcome.objective, &saa.outcome.decisions, &test, saa_kkt);

    Ok(ResultBundle {
        hour,
        replicate: rep,
        seed: cfg.seed,
        load: cfg.load,
        true_eps,
        eps,
        dro: dro_score,
        saa: saa_score,
        value,
    })
}
