//! Backend-independent optimality certificate check.
//!
//! Residuals are relative: each row, gradient component or cone is scaled by
//! one plus the largest magnitude entering it, and the gap by one plus the
//! objective magnitude.

use serde::Serialize;

use super::program::{ConicProgram, LinExpr, RowKind, SocKind};
use super::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktReport {
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Violation of multiplier signs and dual cone membership.
    pub dual_cone_residual: f64,
    pub complementarity: f64,
    /// `|primal - dual| / (1 + |primal|)`
    pub gap: f64,
    pub dual_objective: f64,
    pub tol: f64,
    pub pass: bool,
}

fn expr_scale(e: &LinExpr, x: &[f64]) -> f64 {
    e.terms
        .iter()
        .map(|&(v, c)| (c * x[v]).abs())
        .fold(e.constant.abs(), f64::max)
}

/// `(violation, scale)` of `||tail|| <= head` for a standard-form cone vector.
fn soc_violation(v: &[f64]) -> (f64, f64) {
    let tail = v[1..].iter().map(|a| a * a).sum::<f64>().sqrt();
    let scale = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    ((tail - v[0]).max(0.0), scale)
}

/// Maps rotated coordinates `(t, u, x..)` to standard `((t+u)/r2, (t-u)/r2, x..)`.
fn to_standard(kind: SocKind, v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    if kind == SocKind::Rotated {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        out[0] = h * (v[0] + v[1]);
        out[1] = h * (v[0] - v[1]);
    }
    out
}

pub fn check_kkt(prog: &ConicProgram, sol: &Solution, tol: f64) -> KktReport {
    let x = &sol.x;
    let n = prog.n_vars();
    let mut primal = 0.0f64;
    let mut dual_cone = 0.0f64;
    let mut compl = 0.0f64;

    // gradient of the Lagrangian and the largest contribution per component
    let mut grad = vec![0.0; n];
    let mut gscale = vec![0.0f64; n];
    let mut add = |v: usize, val: f64, grad: &mut Vec<f64>| {
        grad[v] += val;
        gscale[v] = gscale[v].max(val.abs());
    };
    for &(v, c) in &prog.objective.terms {
        add(v, c, &mut grad);
    }
    let mut dual_obj = prog.objective.constant;

    for (r, row) in prog.rows.iter().enumerate() {
        let g = row.expr.eval(x);
        let scale = 1.0 + expr_scale(&row.expr, x);
        let phi = sol.row_duals[r];
        match row.kind {
            RowKind::Eq => primal = primal.max(g.abs() / scale),
            RowKind::Le => {
                primal = primal.max(g.max(0.0) / scale);
                dual_cone = dual_cone.max((-phi).max(0.0) / (1.0 + phi.abs()));
            }
        }
        compl += (phi * g).abs();
        for &(v, c) in &row.expr.terms {
            add(v, phi * c, &mut grad);
        }
        dual_obj += phi * row.expr.constant;
    }

    for v in 0..n {
        let (lo, hi) = (prog.lower[v], prog.upper[v]);
        let (nl, nu) = (sol.lower_duals[v], sol.upper_duals[v]);
        let scale = 1.0 + x[v].abs();
        if lo.is_finite() {
            primal = primal.max((lo - x[v]).max(0.0) / scale);
            compl += (nl * (lo - x[v])).abs();
            dual_obj += nl * lo;
        }
        if hi.is_finite() {
            primal = primal.max((x[v] - hi).max(0.0) / scale);
            compl += (nu * (x[v] - hi)).abs();
            dual_obj -= nu * hi;
        }
        dual_cone = dual_cone.max((-nl).max(0.0) / (1.0 + nl.abs()));
        dual_cone = dual_cone.max((-nu).max(0.0) / (1.0 + nu.abs()));
        add(v, -nl, &mut grad);
        add(v, nu, &mut grad);
    }

    for (k, soc) in prog.socs.iter().enumerate() {
        let s: Vec<f64> = soc.members.iter().map(|m| m.eval(x)).collect();
        let (viol, scale) = soc_violation(&to_standard(soc.kind, &s));
        primal = primal.max(viol / (1.0 + scale));
        let y = &sol.soc_duals[k];
        let (dviol, dscale) = soc_violation(&to_standard(soc.kind, y));
        dual_cone = dual_cone.max(dviol / (1.0 + dscale));
        compl += s.iter().zip(y).map(|(a, b)| a * b).sum::<f64>().abs();
        for (m, &yk) in soc.members.iter().zip(y) {
            for &(v, c) in &m.terms {
                add(v, -yk * c, &mut grad);
            }
            dual_obj -= yk * m.constant;
        }
    }

    let dual_res = grad
        .iter()
        .zip(&gscale)
        .map(|(g, s)| g.abs() / (1.0 + s))
        .fold(0.0, f64::max);
    let pobj = prog.objective.eval(x);
    let denom = 1.0 + pobj.abs();
    let gap = (pobj - dual_obj).abs() / denom;
    let complementarity = compl / denom;
    let pass = [primal, dual_res, dual_cone, complementarity, gap]
        .iter()
        .all(|&r| r <= tol);
    KktReport {
        primal_residual: primal,
        dual_residual: dual_res,
        dual_cone_residual: dual_cone,
        complementarity,
        gap,
        dual_objective: dual_obj,
        tol,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{solve, SolverConfig};
    use super::*;

    /// max 3a + 2b  s.t.  a + b <= 4,  a + 3b <= 6,  a, b >= 0.
    /// Vertex (4, 0); multipliers (3, 0) on the two rows by hand.
    fn small_lp() -> (ConicProgram, [super::super::RowId; 2]) {
        let mut p = ConicProgram::new();
        let a = p.add_var("a", 0.0, f64::INFINITY);
        let b = p.add_var("b", 0.0, f64::INFINITY);
        p.objective = LinExpr::default().term(a, -3.0).term(b, -2.0);
        let r1 = p.add_le("r1", LinExpr::var(a).term(b, 1.0).plus(-4.0));
        let r2 = p.add_le("r2", LinExpr::var(a).term(b, 3.0).plus(-6.0));
        (p, [r1, r2])
    }

    #[test]
    fn hand_solved_lp_multipliers() {
        let (p, [r1, r2]) = small_lp();
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        assert!((sol.objective + 12.0).abs() < 1e-7);
        assert!((sol.dual(r1) - 3.0).abs() < 1e-6);
        assert!(sol.dual(r2).abs() < 1e-6);
        // reduced cost of b: -2 + 3 = 1 sits on its lower bound
        assert!((sol.lower_duals[1] - 1.0).abs() < 1e-6);
        let rep = check_kkt(&p, &sol, 1e-6);
        assert!(rep.pass, "{rep:?}");
        assert!((rep.dual_objective + 12.0).abs() < 1e-6);
    }

    #[test]
    fn perturbed_primal_is_flagged() {
        let (p, _) = small_lp();
        let mut sol = solve(&p, &SolverConfig::default()).unwrap();
        sol.x[0] += 1e-2;
        let rep = check_kkt(&p, &sol, 1e-6);
        assert!(!rep.pass);
        assert!(rep.primal_residual > 1e-3);
    }

    #[test]
    fn wrong_dual_sign_is_flagged() {
        let (p, [r1, _]) = small_lp();
        let mut sol = solve(&p, &SolverConfig::default()).unwrap();
        sol.row_duals[r1.0] = -sol.row_duals[r1.0];
        let rep = check_kkt(&p, &sol, 1e-6);
        assert!(!rep.pass);
        assert!(rep.dual_cone_residual > 0.1);
    }

    #[test]
    fn cone_program_passes() {
        let mut p = ConicProgram::new();
        let t = p.add_free("t");
        let x = p.add_var("x", -1.0, 2.0);
        p.objective = LinExpr::var(t).term(x, -1.0);
        p.add_soc(
            "sq",
            SocKind::Rotated,
            vec![LinExpr::var(t), LinExpr::constant(0.5), LinExpr::var(x)],
        );
        // min x^2 - x -> x = 1/2
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        assert!((sol.value(x) - 0.5).abs() < 1e-6);
        let rep = check_kkt(&p, &sol, 1e-6);
        assert!(rep.pass, "{rep:?}");
    }
}
