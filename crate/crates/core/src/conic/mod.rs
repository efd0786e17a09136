//! Linear + second-order-cone programs, a pluggable backend contract, dual
//! extraction and KKT verification.

mod clarabel_backend;
pub mod dump;
pub mod kkt;
pub mod program;

pub use clarabel_backend::ClarabelBackend;
pub use kkt::{check_kkt, KktReport};
pub use program::{ConicProgram, LinExpr, Row, RowId, RowKind, SocBlock, SocId, SocKind, VarId};

use crate::registry::{Named, Registry};

#[derive(Debug, thiserror::Error)]
pub enum ConicError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("backend `{backend}` failed: {msg}")]
    Backend { backend: &'static str, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative primal/dual feasibility tolerance.
    pub tol_feas: f64,
    /// Relative duality-gap tolerance.
    pub tol_gap: f64,
    pub max_iter: u32,
    pub time_limit_s: Option<f64>,
    pub verbose: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_feas: 1e-8,
            tol_gap: 1e-8,
            max_iter: 300,
            time_limit_s: None,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct SolveStats {
    pub backend: &'static str,
    pub raw_status: String,
    pub iterations: u32,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub solve_time_s: f64,
}

/// Primal values and multipliers, following the sign convention documented
/// on [`ConicProgram`]. Multipliers are zero for bounds that are infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub row_duals: Vec<f64>,
    /// Per cone block, in the block's own member coordinates.
    pub soc_duals: Vec<Vec<f64>>,
    /// Multiplier of `lower - x <= 0`.
    pub lower_duals: Vec<f64>,
    /// Multiplier of `x - upper <= 0`.
    pub upper_duals: Vec<f64>,
    pub objective: f64,
    pub stats: SolveStats,
}

impl Solution {
    pub fn value(&self, v: VarId) -> f64 {
        self.x[v]
    }

    pub fn dual(&self, row: RowId) -> f64 {
        self.row_duals[row.0]
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// A conic backend. Implementations must not mutate the program and must be
/// usable from several threads at once.
pub trait ConicSolver: Named + Send + Sync {
    fn solve(&self, prog: &ConicProgram, cfg: &SolverConfig) -> Result<Solution, ConicError>;
}

pub fn solver_registry() -> Registry<dyn ConicSolver> {
    Registry::<dyn ConicSolver>::new("conic backend").with(Box::new(ClarabelBackend))
}

pub const DEFAULT_BACKEND: &str = "clarabel";

/// Solves with the default backend.
pub fn solve(prog: &ConicProgram, cfg: &SolverConfig) -> Result<Solution, ConicError> {
    ClarabelBackend.solve(prog, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_variable_lp() {
        // min x  s.t.  x >= 3
        let mut p = ConicProgram::new();
        let x = p.add_free("x");
        p.objective = LinExpr::var(x);
        let r = p.add_le("x>=3", LinExpr::constant(3.0).term(x, -1.0));
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.value(x) - 3.0).abs() < 1e-7);
        assert!((sol.dual(r) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn bound_dual() {
        let mut p = ConicProgram::new();
        let x = p.add_var("x", 3.0, f64::INFINITY);
        p.objective = LinExpr::var(x);
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        assert!((sol.value(x) - 3.0).abs() < 1e-7);
        assert!((sol.lower_duals[x] - 1.0).abs() < 1e-7);
        assert!(sol.upper_duals[x].abs() < 1e-12);
    }

    #[test]
    fn norm_epigraph() {
        // min t  s.t.  ||(1, 2)|| <= t
        let mut p = ConicProgram::new();
        let t = p.add_free("t");
        p.objective = LinExpr::var(t);
        p.add_soc(
            "norm",
            SocKind::Standard,
            vec![LinExpr::var(t), LinExpr::constant(1.0), LinExpr::constant(2.0)],
        );
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        assert!((sol.value(t) - 5f64.sqrt()).abs() < 1e-7);
    }

    #[test]
    fn rotated_cone() {
        // min t  s.t.  2 t (1/2) >= (x - 3)^2 ... with x fixed at 5 gives t = 4
        let mut p = ConicProgram::new();
        let t = p.add_free("t");
        let x = p.add_var("x", 5.0, 5.0);
        p.objective = LinExpr::var(t);
        p.add_soc(
            "sq",
            SocKind::Rotated,
            vec![LinExpr::var(t), LinExpr::constant(0.5), LinExpr::var(x).plus(-3.0)],
        );
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.value(t) - 4.0).abs() < 1e-6);
        // d obj / d x = 2 (x - 3) = 4 shows up on the fixed bound
        assert!((sol.upper_duals[x] - sol.lower_duals[x] + 4.0).abs() < 1e-4);
        assert!(check_kkt(&p, &sol, 1e-6).pass);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut p = ConicProgram::new();
        let x = p.add_free("x");
        p.objective = LinExpr::var(x);
        p.add_le("x>=1", LinExpr::constant(1.0).term(x, -1.0));
        p.add_le("x<=0", LinExpr::var(x));
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut p = ConicProgram::new();
        let x = p.add_free("x");
        p.objective = LinExpr::var(x);
        p.add_le("x<=0", LinExpr::var(x));
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Unbounded);
    }

    #[test]
    fn registry_has_default_backend() {
        let reg = solver_registry();
        assert_eq!(reg.get(DEFAULT_BACKEND).unwrap().name(), "clarabel");
        assert!(reg.get("scs").is_err());
    }
}
