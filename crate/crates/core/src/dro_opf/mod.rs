//! Chance-constrained OPF on the linearized feeder model: the sample-average
//! program and the multi-source Wasserstein program, plus ex-post evaluation.

pub mod cvar;
pub mod decisions;
pub mod evaluate;
pub mod halfspaces;
mod instance;
pub mod msw;
pub mod saa;

use std::ops::Range;

pub use cvar::empirical_cvar;
pub use decisions::{DecisionVars, Decisions, NodeScenario, Symbol};
pub use halfspaces::{voltage_halfspaces, VoltageHalfspaces};
pub use instance::OpfInstance;
pub use msw::{build_msw_dro, voltage_block_value, worst_case_expectation};
pub use saa::build_saa;

use crate::conic::{
    ConicError, ConicProgram, ConicSolver, RowId, Solution, SolveStats, SolveStatus, SolverConfig, VarId,
};
use crate::registry::{Named, Registry};

#[derive(Debug, thiserror::Error)]
pub enum DroError {
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error("support inconsistency: {0}")]
    Support(String),
    #[error("sample alignment: {0}")]
    Assumption(String),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error("solver returned {status:?} ({raw})")]
    NotOptimal { status: SolveStatus, raw: String },
}

pub(crate) fn require_optimal(sol: &Solution) -> Result<(), DroError> {
    if sol.is_optimal() {
        Ok(())
    } else {
        Err(DroError::NotOptimal {
            status: sol.status,
            raw: sol.stats.raw_status.clone(),
        })
    }
}

/// Where everything lives in an assembled program. Formulations leave the
/// fields they do not use empty.
#[derive(Debug, Clone)]
pub struct DecisionLayout {
    pub dec: DecisionVars,
    pub lambda_co: Vec<VarId>,
    pub lambda_vol: Vec<VarId>,
    /// `(node, var)` for each PV node.
    pub lambda_inv: Vec<(usize, VarId)>,
    pub varphi_vol: Option<VarId>,
    pub varpi_vol: Option<VarId>,
    pub varphi_inv: Vec<(usize, VarId)>,
    pub varpi_inv: Vec<(usize, VarId)>,
    /// Epigraphs of `(1 - alpha_n)^2` and `q_c,n^2`.
    pub t_inv: Vec<(usize, VarId)>,
    pub sigma_inv: Vec<(usize, VarId)>,
    /// `(node, cluster of its p_av)` for each PV node.
    pub pv_cluster: Vec<(usize, usize)>,
    /// Bulk auxiliary blocks by tag, in emission order.
    pub blocks: Vec<(&'static str, Range<VarId>)>,
}

impl DecisionLayout {
    pub fn new(dec: DecisionVars) -> Self {
        DecisionLayout {
            dec,
            lambda_co: Vec::new(),
            lambda_vol: Vec::new(),
            lambda_inv: Vec::new(),
            varphi_vol: None,
            varpi_vol: None,
            varphi_inv: Vec::new(),
            varpi_inv: Vec::new(),
            t_inv: Vec::new(),
            sigma_inv: Vec::new(),
            pv_cluster: Vec::new(),
            blocks: Vec::new(),
        }
    }
}

/// The CVaR budget rows whose multipliers enter the data value.
#[derive(Debug, Clone)]
pub struct ConstraintHandles {
    pub vol_budget: RowId,
    pub inv_budget: Vec<(usize, RowId)>,
}

#[derive(Debug, Clone)]
pub struct BuiltProgram {
    pub program: ConicProgram,
    pub layout: DecisionLayout,
    pub handles: ConstraintHandles,
}

pub trait Formulation: Named + Send + Sync {
    fn build(&self, inst: &OpfInstance) -> Result<BuiltProgram, DroError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Saa;

impl Named for Saa {
    fn name(&self) -> &'static str {
        "saa"
    }
}

impl Formulation for Saa {
    fn build(&self, inst: &OpfInstance) -> Result<BuiltProgram, DroError> {
        build_saa(inst)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MswDro;

impl Named for MswDro {
    fn name(&self) -> &'static str {
        "msw-dro"
    }
}

impl Formulation for MswDro {
    fn build(&self, inst: &OpfInstance) -> Result<BuiltProgram, DroError> {
        build_msw_dro(inst)
    }
}

pub fn formulation_registry() -> Registry<dyn Formulation> {
    Registry::<dyn Formulation>::new("formulation")
        .with(Box::new(MswDro))
        .with(Box::new(Saa))
}

/// Optimal decisions together with the data-quality sensitivities and the
/// multipliers of the CVaR budget rows.
#[derive(Debug, Clone, serde::Serialize)]
pub struct OpfOutcome {
    pub formulation: &'static str,
    pub objective: f64,
    pub decisions: Decisions,
    pub lambda_co: Vec<f64>,
    pub lambda_vol: Vec<f64>,
    pub lambda_inv: Vec<(usize, f64)>,
    pub phi_vol: f64,
    pub phi_inv: Vec<(usize, f64)>,
    pub stats: SolveStats,
}

#[derive(Debug, Clone)]
pub struct SolvedOpf {
    pub built: BuiltProgram,
    pub solution: Solution,
    pub outcome: OpfOutcome,
}

pub fn solve_opf(
    inst: &OpfInstance,
    formulation: &dyn Formulation,
    backend: &dyn ConicSolver,
    cfg: &SolverConfig,
) -> Result<SolvedOpf, DroError> {
    let built = formulation.build(inst)?;
    let solution = backend.solve(&built.program, cfg)?;
    require_optimal(&solution)?;
    let l = &built.layout;
    let val = |v: &VarId| solution.value(*v);
    let outcome = OpfOutcome {
        formulation: formulation.name(),
        objective: solution.objective,
        decisions: l.dec.extract(&solution),
        lambda_co: l.lambda_co.iter().map(val).collect(),
        lambda_vol: l.lambda_vol.iter().map(val).collect(),
        lambda_inv: l.lambda_inv.iter().map(|(n, v)| (*n, val(v))).collect(),
        phi_vol: solution.dual(built.handles.vol_budget),
        phi_inv: built
            .handles
            .inv_budget
            .iter()
            .map(|(n, r)| (*n, solution.dual(*r)))
            .collect(),
        stats: solution.stats.clone(),
    };
    Ok(SolvedOpf {
        built,
        solution,
        outcome,
    })
}
