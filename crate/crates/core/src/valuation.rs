//! Marginal value of data quality: how much the optimal worst-case cost moves
//! when a provider's Wasserstein radius changes, assembled from the primal
//! transport multipliers and the duals of the CVaR budget rows.

use serde::Serialize;

use crate::conic::{ConicSolver, Solution, SolverConfig};
use crate::dro_opf::{solve_opf, BuiltProgram, DroError, Formulation, OpfInstance};

#[derive(Debug, thiserror::Error)]
pub enum ValuationError {
    #[error("missing dual for {0}")]
    MissingDual(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Dro(#[from] DroError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverterTerm {
    pub node: usize,
    pub cluster: usize,
    pub lambda_inv: f64,
    pub phi_inv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataValueReport {
    pub eps: Vec<f64>,
    pub objective: f64,
    pub lambda_co: Vec<f64>,
    pub lambda_vol: Vec<f64>,
    pub inverter: Vec<InverterTerm>,
    pub phi_vol: f64,
    pub mu: Vec<f64>,
    /// A CVaR budget row is active with a vanishing multiplier, so the
    /// multipliers need not be unique and `mu` is one element of a set.
    pub degenerate: bool,
}

impl DataValueReport {
    /// `sum_n lambda_inv_n` over the PV nodes of cluster `f`.
    pub fn sum_lambda_inv(&self, f: usize) -> f64 {
        self.inverter.iter().filter(|t| t.cluster == f).map(|t| t.lambda_inv).sum()
    }

    pub fn csv_header() -> &'static str {
        "f,eps,lambda_co,lambda_vol,sum_lambda_inv,phi_vol,mu"
    }

    /// One row per cluster; `f` is 1-based in the output.
    pub fn csv_rows(&self) -> Vec<String> {
        (0..self.mu.len())
            .map(|f| {
                format!(
                    "{},{},{},{},{},{},{}",
                    f + 1,
                    self.eps[f],
                    self.lambda_co[f],
                    self.lambda_vol[f],
                    self.sum_lambda_inv(f),
                    self.phi_vol,
                    self.mu[f]
                )
            })
            .collect()
    }
}

/// `mu_f = lambda_co_f + phi_vol lambda_vol_f + sum_{PV n in f} phi_inv_n lambda_inv_n`,
/// the derivative of the Lagrangian in `eps_f`.
pub fn marginal_data_value(
    sol: &Solution,
    built: &BuiltProgram,
    eps: &[f64],
) -> Result<DataValueReport, ValuationError> {
    let l = &built.layout;
    let h = &built.handles;
    if l.lambda_co.len() != eps.len() || l.lambda_vol.len() != eps.len() {
        return Err(ValuationError::Input(format!(
            "program has {} transport multipliers per family, {} radii given",
            l.lambda_co.len(),
            eps.len()
        )));
    }
    let dual = |r: crate::conic::RowId, what: &str| -> Result<f64, ValuationError> {
        match sol.row_duals.get(r.0) {
            Some(v) if v.is_finite() => Ok(*v),
            _ => Err(ValuationError::MissingDual(what.to_string())),
        }
    };
    let phi_vol = dual(h.vol_budget, "voltage CVaR budget")?;
    let lambda_co: Vec<f64> = l.lambda_co.iter().map(|&v| sol.value(v)).collect();
    let lambda_vol: Vec<f64> = l.lambda_vol.iter().map(|&v| sol.value(v)).collect();
    let mut inverter = Vec::new();
    for ((&(node, lam), &(node_r, row)), &(node_c, cluster)) in
        l.lambda_inv.iter().zip(&h.inv_budget).zip(&l.pv_cluster)
    {
        debug_assert!(node == node_r && node == node_c);
        inverter.push(InverterTerm {
            node,
            cluster,
            lambda_inv: sol.value(lam),
            phi_inv: dual(row, &format!("inverter CVaR budget at node {node}"))?,
        });
    }
    let mut mu: Vec<f64> = (0..eps.len()).map(|f| lambda_co[f] + phi_vol * lambda_vol[f]).collect();
    for t in &inverter {
        mu[t.cluster] += t.phi_inv * t.lambda_inv;
    }

    let x = &sol.x;
    let row_value = |r: crate::conic::RowId| built.program.rows[r.0].expr.eval(x);
    let weakly_active = |r: crate::conic::RowId, d: f64| row_value(r).abs() < 1e-7 && d.abs() < 1e-7;
    let degenerate = weakly_active(h.vol_budget, phi_vol)
        || h.inv_budget.iter().zip(&inverter).any(|(&(_, r), t)| weakly_active(r, t.phi_inv));

    Ok(DataValueReport {
        eps: eps.to_vec(),
        objective: sol.objective,
        lambda_co,
        lambda_vol,
        inverter,
        phi_vol,
        mu,
        degenerate,
    })
}

/// Solves `inst` and assembles its data value report.
pub fn solve_and_value(
    inst: &OpfInstance,
    formulation: &dyn Formulation,
    backend: &dyn ConicSolver,
    cfg: &SolverConfig,
) -> Result<DataValueReport, ValuationError> {
    let solved = solve_opf(inst, formulation, backend, cfg)?;
    marginal_data_value(&solved.solution, &solved.built, &inst.eps)
}

pub const DEFAULT_GRID: [f64; 8] = [1.0, 0.5, 0.1, 0.05, 0.01, 0.005, 0.001, 0.0001];
pub const DEFAULT_OTHERS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Co,
    Vol,
    Inv,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Vol, Family::Inv, Family::Co];

    pub fn name(self) -> &'static str {
        match self {
            Family::Co => "co",
            Family::Vol => "vol",
            Family::Inv => "inv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalEntry {
    pub family: Family,
    /// Smallest grid radius at which the family's multipliers vanish;
    /// `None` means above the grid maximum.
    pub critical: Option<f64>,
    /// Every grid radius at which they vanish (the set need not be an interval).
    pub vanished_at: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalEpsReport {
    pub cluster: usize,
    pub grid: Vec<f64>,
    pub others: f64,
    pub tol: f64,
    pub entries: Vec<CriticalEntry>,
    /// Per grid point, the value report of that solve.
    pub reports: Vec<DataValueReport>,
}

impl CriticalEpsReport {
    pub fn entry(&self, family: Family) -> &CriticalEntry {
        self.entries.iter().find(|e| e.family == family).expect("all families reported")
    }
}

/// Vanish tolerance scaled by the largest cost coefficient.
pub fn vanish_tolerance(inst: &OpfInstance) -> f64 {
    let scale = inst
        .assets
        .cost
        .iter()
        .flat_map(|c| [c.c, c.d, c.e, c.h])
        .fold(0.0f64, |a, b| a.max(b.abs()));
    1e-6 * (1.0 + scale)
}

fn family_lambdas(r: &DataValueReport, f: usize, family: Family) -> Vec<f64> {
    match family {
        Family::Co => vec![r.lambda_co[f]],
        Family::Vol => vec![r.lambda_vol[f]],
        Family::Inv => r
            .inverter
            .iter()
            .filter(|t| t.cluster == f)
            .map(|t| t.lambda_inv)
            .collect(),
    }
}

/// Line search over a fixed radius grid for cluster `f`, holding every other
/// cluster at `others`. Grid points are solved independently.
pub fn critical_epsilon(
    inst: &OpfInstance,
    f: usize,
    grid: &[f64],
    others: f64,
    formulation: &dyn Formulation,
    backend: &dyn ConicSolver,
    cfg: &SolverConfig,
) -> Result<CriticalEpsReport, ValuationError> {
    use rayon::prelude::*;
    if f >= inst.n_clusters() {
        return Err(ValuationError::Input(format!("cluster {} does not exist", f + 1)));
    }
    if grid.is_empty() || grid.iter().any(|e| !(*e >= 0.0)) {
        return Err(ValuationError::Input("grid must be non-empty and nonnegative".into()));
    }
    if grid.windows(2).any(|w| w[0] <= w[1]) {
        return Err(ValuationError::Input("grid must be strictly descending".into()));
    }
    let tol = vanish_tolerance(inst);
    let reports = grid
        .par_iter()
        .map(|&e| {
            let mut eps = vec![others; inst.n_clusters()];
            eps[f] = e;
            solve_and_value(&inst.with_eps(eps)?, formulation, backend, cfg)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let entries = Family::ALL
        .iter()
        .map(|&family| {
            let vanished_at: Vec<f64> = grid
                .iter()
                .zip(&reports)
                .filter(|(_, r)| family_lambdas(r, f, family).iter().all(|l| l.abs() <= tol))
                .map(|(&e, _)| e)
                .collect();
            CriticalEntry {
                family,
                critical: vanished_at.iter().copied().reduce(f64::min),
                vanished_at,
            }
        })
        .collect();
    Ok(CriticalEpsReport {
        cluster: f,
        grid: grid.to_vec(),
        others,
        tol,
        entries,
        reports,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeCheck {
    pub cluster: usize,
    pub eps: f64,
    pub step: f64,
    pub mu: f64,
    pub central_difference: f64,
    pub relative_gap: f64,
    /// One-sided differences disagree beyond the tolerance: the radius sits
    /// on an active-set change and the derivative does not exist.
    pub kink: bool,
    pub within_tolerance: bool,
}

/// Relative tolerance of the envelope check, with an absolute floor.
pub const ENVELOPE_REL_TOL: f64 = 0.05;
pub const ENVELOPE_ABS_TOL: f64 = 1e-3;

fn agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= ENVELOPE_ABS_TOL || (a - b).abs() <= ENVELOPE_REL_TOL * a.abs().max(b.abs())
}

/// Compares `mu_f` at `inst.eps` with the central difference of the optimal
/// value over `eps_f +- h`.
pub fn envelope_fd_check(
    inst: &OpfInstance,
    f: usize,
    h: f64,
    formulation: &dyn Formulation,
    backend: &dyn ConicSolver,
    cfg: &SolverConfig,
) -> Result<EnvelopeCheck, ValuationError> {
    let e = inst.eps.get(f).copied().ok_or_else(|| ValuationError::Input(format!("no cluster {}", f + 1)))?;
    if !(h > 0.0) || e - h < 0.0 {
        return Err(ValuationError::Input(format!("step {h} leaves the nonnegative range at eps {e}")));
    }
    let at = |v: f64| -> Result<f64, ValuationError> {
        let mut eps = inst.eps.clone();
        eps[f] = v;
        Ok(solve_opf(&inst.with_eps(eps)?, formulation, backend, cfg)?.outcome.objective)
    };
    let base = solve_and_value(inst, formulation, backend, cfg)?;
    let (jp, j0, jm) = (at(e + h)?, base.objective, at(e - h)?);
    let fd = (jp - jm) / (2.0 * h);
    let (right, left) = ((jp - j0) / h, (j0 - jm) / h);
    let mu = base.mu[f];
    let gap = (mu - fd).abs() / mu.abs().max(fd.abs()).max(f64::MIN_POSITIVE);
    Ok(EnvelopeCheck {
        cluster: f,
        eps: e,
        step: h,
        mu,
        central_difference: fd,
        relative_gap: gap,
        kink: !agree(left, right),
        within_tolerance: agree(mu, fd),
    })
}
