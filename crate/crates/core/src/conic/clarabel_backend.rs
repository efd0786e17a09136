use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::kkt::check_kkt;
use super::program::{ConicProgram, RowKind, SocKind};
use super::{ConicError, ConicSolver, SolveStats, SolveStatus, Solution, SolverConfig};
use crate::registry::Named;

/// Interior-point backend built on the `clarabel` crate.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClarabelBackend;

impl Named for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }
}

/// Where each standard-form row came from, so multipliers can be mapped back.
enum Origin {
    Row(usize),
    Fixed(usize),
    Lower(usize),
    Upper(usize),
}

struct Triplets {
    i: Vec<usize>,
    j: Vec<usize>,
    v: Vec<f64>,
    b: Vec<f64>,
}

impl Triplets {
    fn next_row(&self) -> usize {
        self.b.len()
    }

    fn push_row(&mut self, terms: impl IntoIterator<Item = (usize, f64)>, b: f64) {
        let r = self.next_row();
        for (var, coef) in terms {
            self.i.push(r);
            self.j.push(var);
            self.v.push(coef);
        }
        self.b.push(b);
    }
}

impl ConicSolver for ClarabelBackend {
    fn solve(&self, prog: &ConicProgram, cfg: &SolverConfig) -> Result<Solution, ConicError> {
        prog.validate()?;
        let n = prog.n_vars();
        let nnz: usize = prog.rows.iter().map(|r| r.expr.terms.len()).sum();
        let mut t = Triplets {
            i: Vec::with_capacity(nnz + 2 * n),
            j: Vec::with_capacity(nnz + 2 * n),
            v: Vec::with_capacity(nnz + 2 * n),
            b: Vec::new(),
        };
        let mut origins = Vec::new();
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();

        // Rows are grouped by cone: equalities, then inequalities, then blocks.
        // For `g(x) = a.x + c` the slack is `s = -c - a.x`.
        let zero_start = t.next_row();
        for (r, row) in prog.rows.iter().enumerate() {
            if row.kind == RowKind::Eq {
                t.push_row(row.expr.terms.iter().copied(), -row.expr.constant);
                origins.push(Origin::Row(r));
            }
        }
        for v in 0..n {
            if prog.lower[v] == prog.upper[v] {
                t.push_row([(v, 1.0)], prog.lower[v]);
                origins.push(Origin::Fixed(v));
            }
        }
        if t.next_row() > zero_start {
            cones.push(SupportedConeT::ZeroConeT(t.next_row() - zero_start));
        }

        let nonneg_start = t.next_row();
        for (r, row) in prog.rows.iter().enumerate() {
            if row.kind == RowKind::Le {
                t.push_row(row.expr.terms.iter().copied(), -row.expr.constant);
                origins.push(Origin::Row(r));
            }
        }
        for v in 0..n {
            let (lo, hi) = (prog.lower[v], prog.upper[v]);
            if lo == hi {
                continue;
            }
            if lo.is_finite() {
                t.push_row([(v, -1.0)], -lo);
                origins.push(Origin::Lower(v));
            }
            if hi.is_finite() {
                t.push_row([(v, 1.0)], hi);
                origins.push(Origin::Upper(v));
            }
        }
        if t.next_row() > nonneg_start {
            cones.push(SupportedConeT::NonnegativeConeT(t.next_row() - nonneg_start));
        }

        // Cone members m(x) = J x + k map to s = M m with M the identity for
        // standard cones and the orthogonal (t, u) rotation for rotated ones.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut soc_rows = Vec::with_capacity(prog.socs.len());
        for soc in &prog.socs {
            let start = t.next_row();
            let m = &soc.members;
            match soc.kind {
                SocKind::Standard => {
                    for e in m {
                        t.push_row(e.terms.iter().map(|&(v, c)| (v, -c)), e.constant);
                    }
                }
                SocKind::Rotated => {
                    let (tt, uu) = (&m[0], &m[1]);
                    let plus = tt.terms.iter().chain(&uu.terms).map(|&(v, c)| (v, -h * c));
                    t.push_row(plus, h * (tt.constant + uu.constant));
                    let minus = tt
                        .terms
                        .iter()
                        .map(|&(v, c)| (v, -h * c))
                        .chain(uu.terms.iter().map(|&(v, c)| (v, h * c)));
                    t.push_row(minus, h * (tt.constant - uu.constant));
                    for e in &m[2..] {
                        t.push_row(e.terms.iter().map(|&(v, c)| (v, -c)), e.constant);
                    }
                }
            }
            let dim = t.next_row() - start;
            cones.push(if dim == 1 {
                SupportedConeT::NonnegativeConeT(1)
            } else {
                SupportedConeT::SecondOrderConeT(dim)
            });
            soc_rows.push(start);
        }

        let m_rows = t.next_row();
        let mut q = vec![0.0; n];
        for &(v, c) in &prog.objective.terms {
            q[v] += c;
        }
        let a = CscMatrix::new_from_triplets(m_rows, n, t.i, t.j, t.v);
        let p = CscMatrix::zeros((n, n));

        let settings = DefaultSettings {
            verbose: cfg.verbose,
            max_iter: cfg.max_iter,
            time_limit: cfg.time_limit_s.unwrap_or(f64::INFINITY),
            tol_feas: cfg.tol_feas,
            tol_gap_abs: cfg.tol_gap,
            tol_gap_rel: cfg.tol_gap,
            ..DefaultSettings::default()
        };
        let backend_err = |msg: String| ConicError::Backend {
            backend: "clarabel",
            msg,
        };
        let mut solver = DefaultSolver::new(&p, &q, &a, &t.b, &cones, settings)
            .map_err(|e| backend_err(format!("{e:?}")))?;
        solver.solve();
        let raw = &solver.solution;

        let mut row_duals = vec![0.0; prog.rows.len()];
        let mut lower_duals = vec![0.0; n];
        let mut upper_duals = vec![0.0; n];
        for (k, origin) in origins.iter().enumerate() {
            let z = raw.z[k];
            match *origin {
                Origin::Row(r) => row_duals[r] = z,
                Origin::Lower(v) => lower_duals[v] = z,
                Origin::Upper(v) => upper_duals[v] = z,
                Origin::Fixed(v) => {
                    if z >= 0.0 {
                        upper_duals[v] = z;
                    } else {
                        lower_duals[v] = -z;
                    }
                }
            }
        }
        let soc_duals = prog
            .socs
            .iter()
            .zip(&soc_rows)
            .map(|(soc, &start)| {
                let z = &raw.z[start..start + soc.members.len()];
                match soc.kind {
                    SocKind::Standard => z.to_vec(),
                    SocKind::Rotated => {
                        let mut y = z.to_vec();
                        y[0] = h * (z[0] + z[1]);
                        y[1] = h * (z[0] - z[1]);
                        y
                    }
                }
            })
            .collect();

        let x = raw.x.clone();
        let mut sol = Solution {
            status: SolveStatus::NumericalLimit,
            objective: prog.objective.eval(&x),
            x,
            row_duals,
            soc_duals,
            lower_duals,
            upper_duals,
            stats: SolveStats {
                backend: "clarabel",
                raw_status: format!("{:?}", raw.status),
                iterations: raw.iterations,
                primal_residual: raw.r_prim,
                dual_residual: raw.r_dual,
                solve_time_s: raw.solve_time,
            },
        };
        sol.status = match raw.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::AlmostSolved => {
                // accept only if the certificate holds at the downstream tolerance
                sol.status = SolveStatus::Optimal;
                if check_kkt(prog, &sol, 1e-6).pass {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::NumericalLimit
                }
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveStatus::Unbounded
            }
            _ => SolveStatus::NumericalLimit,
        };
        Ok(sol)
    }
}
